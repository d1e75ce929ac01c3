#include <gtest/gtest.h>

#include "mpst/session_type.hpp"
#include "mpst/syntax.hpp"
#include "testkit.hpp"

using namespace mpst;

namespace {

Type P(const std::string& s) { return parse_session_type(s); }

}  // namespace

TEST(Unfold, EndIsUnchanged) { EXPECT_TRUE(alpha_equal(unfold(end_type()), end_type())); }

TEST(Unfold, SubstitutesTheBinder) {
  Type t = P("rec X. &q{l1(int). end, l2(bool). X}");
  EXPECT_TRUE(alpha_equal(unfold(t), P("&q{l1(int). end, l2(bool). rec X. &q{l1(int). end, l2(bool). X}}")));
}

TEST(Unfold, NestedBinders) {
  Type t = P("rec X. rec Y. +p{l(int). X}");
  EXPECT_TRUE(alpha_equal(unfold(t), P("+p{l(int). rec X. rec Y. +p{l(int). X}}")));
}

TEST(Unfold, NoOpOffRec) {
  Type t = P("+p{l(int). rec X. &q{a(unit). X}}");
  EXPECT_EQ(unfold(t), t);
}

TEST(Substitute, FreeVariable) { EXPECT_TRUE(alpha_equal(substitute(var("X"), {{"X", end_type()}}), end_type())); }

TEST(Substitute, BoundOccurrenceShadows) {
  Type t = P("rec X. +p{l(int). X}");
  EXPECT_TRUE(alpha_equal(substitute(t, {{"X", end_type()}}), t));
}

TEST(Substitute, AvoidsCapture) {
  Type t = rec("X", internal("p", {{"l", Ground::Int, var("Y")}}));
  Type r = substitute(t, {{"Y", var("X")}});
  ASSERT_EQ(r->kind, TypeKind::Rec);
  EXPECT_NE(r->name, "X");
  EXPECT_EQ(free_vars(r), std::set<std::string>{"X"});
  EXPECT_EQ(r->body->branches[0].cont->name, "X");
}

TEST(Multiply, EndIsLeftUnit) {
  Type t = P("+p{l(int). &q{a(unit). end}}");
  EXPECT_TRUE(alpha_equal(multiply(end_type(), t), t));
}

TEST(Multiply, DistributesOverChoices) {
  Type t = P("+p{l(int). end, m(bool). end}");
  Type u = P("&q{a(unit). end}");
  EXPECT_TRUE(alpha_equal(multiply(t, u), P("+p{l(int). &q{a(unit). end}, m(bool). &q{a(unit). end}}")));
}

TEST(Multiply, NonTerminatingTypeAbsorbs) {
  Type t = P("rec X. +p{l(int). X}");
  EXPECT_TRUE(alpha_equal(multiply(t, P("&q{a(unit). end}")), t));
}

TEST(Multiply, RenamesBinderCapturingSuffix) {
  Type t = rec("X", internal("p", {{"l", Ground::Int, var("X")}, {"m", Ground::Int, end_type()}}));
  Type r = multiply(t, var("X"));
  EXPECT_EQ(free_vars(r), std::set<std::string>{"X"});
}

TEST(WellFormed, UnguardedVariable) {
  auto d = well_formed(rec("X", var("X")), {});
  ASSERT_TRUE(d.has_value());
  EXPECT_FALSE(d->message.empty());
}

TEST(WellFormed, GuardedRecursion) { EXPECT_FALSE(well_formed(P("rec X. +p{l(int). X}"), {}).has_value()); }

TEST(WellFormed, FreeVariable) {
  EXPECT_TRUE(well_formed(var("X"), {}).has_value());
  EXPECT_FALSE(well_formed(var("X"), {"X"}).has_value());
}

TEST(WellFormed, DuplicateLabels) {
  Type t = internal("p", {{"l", Ground::Int, end_type()}, {"l", Ground::Bool, end_type()}});
  EXPECT_TRUE(well_formed(t, {}).has_value());
}

TEST(Alpha, BranchOrderAndBinderNamesIgnored) {
  EXPECT_TRUE(alpha_equal(P("rec X. &p{a(int). X, b(bool). end}"), P("rec Y. &p{b(bool). end, a(int). Y}")));
  EXPECT_FALSE(alpha_equal(P("&p{a(int). end}"), P("+p{a(int). end}")));
}

TEST(Printing, RoundTrips) {
  for (const char* s : {"end", "rec X. &c{get(unit). +c{st(int). X}, put(int). X, done(unit). end}",
                        "+q{cont(int). &p{success(int). end, error(bool). end}, stop(bool). end}"}) {
    Type t = P(s);
    EXPECT_TRUE(alpha_equal(P(to_string(t)), t)) << s;
  }
}

TEST(Parsing, RejectsMalformed) {
  EXPECT_THROW(P("&p{a(int)"), SyntaxError);
  EXPECT_THROW(P("+p{a(float). end}"), SyntaxError);
}

TEST(Properties, MonoidLaws) {
  testkit::Rng rng(1);
  testkit::GenOptions o;
  o.allow_rec = true;
  for (int i = 0; i < 500; ++i) {
    Type t = testkit::random_type(rng, o), u = testkit::random_type(rng, o), v = testkit::random_type(rng, o);
    auto bad = testkit::monoid_laws(t, u, v);
    ASSERT_FALSE(bad) << *bad;
  }
}

TEST(Properties, UnfoldDefinitionAndWellFormedness) {
  testkit::Rng rng(2);
  testkit::GenOptions o;
  o.allow_rec = true;
  for (int i = 0; i < 500; ++i) {
    Type t = testkit::random_type(rng, o);
    ASSERT_FALSE(well_formed(t, {}).has_value()) << to_string(t);
    ASSERT_FALSE(well_formed(unfold(t), {}).has_value()) << to_string(t);
    if (t->kind == TypeKind::Rec) {
      EXPECT_TRUE(alpha_equal(unfold(t), substitute(unfold(t->body), {{t->name, t}}))) << to_string(t);
    } else {
      EXPECT_EQ(unfold(t), t);
    }
  }
}
