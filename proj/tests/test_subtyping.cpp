#include <gtest/gtest.h>

#include "mpst/relations.hpp"
#include "mpst/subtyping.hpp"
#include "mpst/syntax.hpp"
#include "testkit.hpp"

using namespace mpst;

namespace {

Type P(const std::string& s) { return parse_session_type(s); }

const char* kT = "&p{success(int). +q{cont(int).end, stop(bool).end}, error(bool). +q{cont(int).end, stop(bool).end}}";
const char* kU = "+q{cont(int). &p{success(int).end, error(bool).end}, stop(bool). &p{success(int).end, error(bool).end}}";

Type t_k(int k) {
  Type t = P("&q{l1(int). end}");
  for (int i = 0; i < k; ++i) t = external("q", {{"l1", Ground::Int, end_type()}, {"l2", Ground::Bool, t}});
  return t;
}

}  // namespace

TEST(Subtype, SendingEarlyIsSafe) {
  EXPECT_EQ(subtype(P(kU), P(kT)).verdict, Verdict::Proven);
  EXPECT_NE(subtype(P(kT), P(kU)).verdict, Verdict::Proven);
}

TEST(Subtype, UnboundedReorderingIsRejectedBothWays) {
  Type Uw = P("rec X. &q{l1(int). &p{l(int). end}, l2(bool). X}");
  Type Uw2 = P("&p{l(int). rec X. &q{l1(int). end, l2(bool). X}}");
  EXPECT_NE(subtype(Uw, Uw2).verdict, Verdict::Proven);
  EXPECT_NE(subtype(Uw2, Uw).verdict, Verdict::Proven);
}

TEST(Subtype, InfiniteTypeBelowItsApproximations) {
  Type Tinf = P("rec X. &q{l1(int). end, l2(bool). X}");
  for (int k = 0; k <= 3; ++k) EXPECT_EQ(subtype(Tinf, t_k(k)).verdict, Verdict::Proven) << k;
}

TEST(Subtype, IndependentSendsCommute) {
  Type a = P("+q{a(bool). +p{l(int). end}}");
  Type b = P("+p{l(int). +q{a(bool). end}}");
  EXPECT_TRUE(is_subtype(a, b));
  EXPECT_TRUE(is_subtype(b, a));
}

TEST(Subtype, OpenTypesCompareVariables) {
  EXPECT_TRUE(is_subtype(P("+p{l(int). X}"), P("+p{l(int). X}"), {"X"}));
  EXPECT_FALSE(is_subtype(P("+p{l(int). X}"), P("+p{l(int). Y}"), {"X", "Y"}));
}

TEST(Subtype, DisprovenOnFiniteMismatch) {
  auto r = subtype(P("+p{l(int). end}"), P("&p{l(int). end}"));
  EXPECT_EQ(r.verdict, Verdict::Disproven);
  EXPECT_FALSE(r.explanation.empty());
}

TEST(Subtype, ProvenCarriesExploredPairs) {
  auto r = subtype(P(kU), P(kT));
  EXPECT_GT(r.pairs_explored, 0);
  EXPECT_FALSE(r.explanation.empty());
}

TEST(Oracle, ExampleAndTrivialCases) {
  EXPECT_TRUE(siso_subtype_oracle(P(kU), P(kT)));
  EXPECT_FALSE(siso_subtype_oracle(P(kT), P(kU)));
  EXPECT_TRUE(siso_subtype_oracle(end_type(), end_type()));
  EXPECT_THROW(siso_subtype_oracle(P("rec X. +p{l(int). X}"), end_type()), std::invalid_argument);
}

TEST(Oracle, Decompositions) {
  auto so = soset(P("+p{a(int).end, b(bool).end}"));
  ASSERT_EQ(so.size(), 2u);
  auto si = siset(P("+p{a(int).end, b(bool).end}"));
  ASSERT_EQ(si.size(), 1u);
  EXPECT_TRUE(alpha_equal(si[0], P("+p{a(int).end, b(bool).end}")));
  auto acts = actset(P("+p{a(int).&q{l(bool).end}}"));
  EXPECT_EQ(acts, (std::set<Action>{{"p", true}, {"q", false}}));
}

TEST(Properties, Reflexivity) {
  testkit::Rng rng(21);
  testkit::GenOptions o;
  o.allow_rec = true;
  for (int i = 0; i < 500; ++i) {
    Type t = testkit::random_type(rng, o);
    EXPECT_EQ(subtype(t, t).verdict, Verdict::Proven) << to_string(t);
  }
}

TEST(Properties, OracleAgreement) {
  testkit::Rng rng(22);
  testkit::GenOptions o;
  int positives = 0;
  for (int i = 0; i < 1000; ++i) {
    Type t = testkit::random_type(rng, o);
    Type u = i % 2 ? testkit::perturb(rng, t, o) : testkit::random_type(rng, o);
    if (i % 4 == 1) std::swap(t, u);
    bool checker = subtype(t, u).proven();
    positives += checker;
    ASSERT_EQ(checker, siso_subtype_oracle(t, u)) << to_string(t) << " <: " << to_string(u);
  }
  EXPECT_GT(positives, 50);
}

TEST(Properties, Transitivity) {
  testkit::Rng rng(23);
  testkit::GenOptions o;
  o.max_size = 5;
  int chains = 0;
  for (int i = 0; i < 600; ++i) {
    Type s = testkit::random_type(rng, o);
    Type t = testkit::perturb(rng, s, o);
    Type u = testkit::perturb(rng, t, o);
    if (!is_subtype(s, t) || !is_subtype(t, u)) continue;
    ++chains;
    SubtypeOptions big;
    big.fuel = 64;
    big.pair_budget = 2048;
    EXPECT_TRUE(is_subtype(s, u, {}, big)) << to_string(s) << " / " << to_string(t) << " / " << to_string(u);
  }
  EXPECT_GT(chains, 20);
}

TEST(Properties, WidthRules) {
  testkit::Rng rng(24);
  testkit::GenOptions o;
  for (int i = 0; i < 300; ++i) {
    Type t = testkit::random_type(rng, o);
    if (!t->is_choice()) continue;
    Branches bs = t->branches;
    if (t->kind == TypeKind::Internal && bs.size() > 1) {
      bs.pop_back();
      EXPECT_TRUE(is_subtype(internal(t->name, bs), t)) << to_string(t);
    }
    if (t->kind == TypeKind::External && !t->find("c")) {
      bs.push_back({"c", Ground::Unit, end_type()});
      EXPECT_TRUE(is_subtype(external(t->name, bs), t)) << to_string(t);
    }
  }
}

TEST(Properties, LiftingOfPredicates) {
  testkit::Rng rng(25);
  testkit::GenOptions o;
  o.allow_rec = true;
  for (int i = 0; i < 500; ++i) {
    Type t = testkit::random_type(rng, o);
    Type u = testkit::perturb(rng, t, o);
    if (!is_subtype(t, u)) continue;
    for (const auto& p : o.peers) {
      if (sends(p, u)) EXPECT_TRUE(sends(p, t)) << to_string(t) << " <: " << to_string(u);
      if (recvs(p, t)) EXPECT_TRUE(recvs(p, u)) << to_string(t) << " <: " << to_string(u);
    }
  }
}
