#include <gtest/gtest.h>

#include "mpst/denotation.hpp"
#include "mpst/runtime.hpp"
#include "mpst/syntax.hpp"
#include "mpst/typing.hpp"
#include "testkit.hpp"

using namespace mpst;

namespace {

Type P(const std::string& s) { return parse_session_type(s); }
Comp C(const std::string& s) { return parse_computation(s); }
Message M(const std::string& l, Value v) { return Message{l, std::move(v)}; }

const char* kT = "&p{success(int). +q{cont(int).end, stop(bool).end}, error(bool). +q{cont(int).end, stop(bool).end}}";
const char* kTe = "&p{error(bool). +q{cont(int).end, stop(bool).end}}";
const char* kRelayT =
    "recv from p {success(x: int) -> let y = 0 < x in if y then send cont(x) to q; return false "
    "else send stop(true) to q; return true, error(x: bool) -> send stop(false) to q; return true}";
const char* kRelayU =
    "let y = return false in if y then send cont(0) to q; recv from p {success(x: int) -> return false, "
    "error(x: bool) -> return false} else send stop(false) to q; recv from p {success(x: int) -> return true, "
    "error(x: bool) -> return true}";
const char* kS = "+s{get(unit). &s{st(int). +s{put(int). end}}}";
const char* kC1 = "send get(()) to s; recv from s {st(x: int) -> send put(0) to s; return x}";
const char* kC2 = "send get(()) to s; send put(0) to s; recv from s {st(x: int) -> return x}";

Tree displayed_client() {
  return t_send("s", M("get", Value::unit()),
                t_recv("s", {make_arm("st", Ground::Int, [](const Value& n) {
                              return t_send("s", M("put", Value::integer(0)), t_ret(n));
                            })}));
}

}  // namespace

TEST(Denote, Return) { EXPECT_TRUE(tree_equal(denote_computation(C("return 5")), t_ret(Value::integer(5)))); }

TEST(Denote, ClientsMatchDisplayedTree) {
  ProbeConfig pc;
  Tree d1 = denote_computation(C(kC1));
  Tree d2 = normalize(P(kS), denote_computation(C(kC2)));
  EXPECT_TRUE(tree_equal(d1, displayed_client(), pc));
  EXPECT_TRUE(tree_equal(d2, displayed_client(), pc));
}

TEST(Denote, RelayArms) {
  Tree d = denote_computation(C(kRelayT));
  ASSERT_EQ(d->kind, TreeNode::Kind::Recv);
  Tree neg = d->arm(M("success", Value::integer(-1)));
  Tree pos = d->arm(M("success", Value::integer(1)));
  ASSERT_TRUE(neg && pos);
  EXPECT_TRUE(tree_equal(neg, t_send("q", M("stop", Value::boolean(true)), t_ret(Value::boolean(true)))));
  EXPECT_TRUE(tree_equal(pos, t_send("q", M("cont", Value::integer(1)), t_ret(Value::boolean(false)))));
}

TEST(Denote, RecursiveServerIsTyped) {
  Comp ts = C(
      "letrec f(x: int) : unit = recv from c {get(z: unit) -> send st(x) to c; f(x), put(y: int) -> f(y), "
      "done(z: unit) -> return ()} in f(0)");
  Type Ts = P("rec X. &c{get(unit). +c{st(int). X}, put(int). X, done(unit). end}");
  Tree d = denote_computation(ts);
  EXPECT_TRUE(tree_typed_bounded(d, Ts));
  Tree after = d->arm(M("put", Value::integer(5)))->arm(M("get", Value::unit()));
  ASSERT_EQ(after->kind, TreeNode::Kind::Send);
  EXPECT_EQ(after->msg, M("st", Value::integer(5)));
}

TEST(Inject, Base) {
  auto r = canonical_reduct(P("+p{l(int).end}"), {Direction::Send, "p", "l", Ground::Int}, 4);
  Tree t = inject_send(r.derivation, "p", M("l", Value::integer(1)), t_ret(Value::integer(0)));
  EXPECT_TRUE(tree_equal(t, t_send("p", M("l", Value::integer(1)), t_ret(Value::integer(0)))));
}

TEST(Inject, ThroughOtherSend) {
  auto r = canonical_reduct(P("+q{m(bool). +p{l(int). end}}"), {Direction::Send, "p", "l", Ground::Int}, 4);
  ASSERT_TRUE(r.derivation);
  Tree inner = t_send("q", M("m", Value::boolean(true)), t_ret(Value::integer(0)));
  Tree t = inject_send(r.derivation, "p", M("l", Value::integer(2)), inner);
  EXPECT_TRUE(tree_equal(
      t, t_send("q", M("m", Value::boolean(true)), t_send("p", M("l", Value::integer(2)), t_ret(Value::integer(0))))));
  auto back = tree_step(t, TreeAction::send("p", M("l", Value::integer(2))));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_TRUE(tree_equal(back[0], inner));
}

TEST(Inject, UnderReceive) {
  Type U = P("&r{a(int). +p{l(int). end}, b(bool). +p{l(int). end}}");
  auto r = canonical_reduct(U, {Direction::Send, "p", "l", Ground::Int}, 4);
  ASSERT_TRUE(r.derivation);
  Tree inner = t_recv("r", {make_arm("a", Ground::Int, [](const Value& v) { return t_ret(v); }),
                            make_arm("b", Ground::Bool, [](const Value&) { return t_ret(Value::integer(0)); })});
  Tree t = inject_send(r.derivation, "p", M("l", Value::integer(9)), inner);
  EXPECT_TRUE(tree_typed_bounded(t, U));
  EXPECT_TRUE(tree_step(t, TreeAction::send("p", M("l", Value::integer(9)))).empty());
  auto got = tree_step(t, TreeAction::recv("r", M("a", Value::integer(3))));
  ASSERT_EQ(got.size(), 1u);
  auto back = tree_step(got[0], TreeAction::send("p", M("l", Value::integer(9))));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_TRUE(tree_equal(back[0], t_ret(Value::integer(3))));
}

TEST(Configurations, Base) {
  EXPECT_TRUE(tree_equal(denote_configuration(initial_configuration(C("return true")), Ground::Bool, end_type()),
                         t_ret(Value::boolean(true))));
}

TEST(Configurations, PendingSend) {
  Configuration c = initial_configuration(C("return true"));
  c.sigma.push_front("q", M("stop", Value::boolean(false)));
  Tree d = denote_configuration(c, Ground::Bool, P("+q{cont(int).end, stop(bool).end}"));
  EXPECT_TRUE(tree_equal(d, t_send("q", M("stop", Value::boolean(false)), t_ret(Value::boolean(true)))));
}

TEST(Configurations, BufferedReceive) {
  Configuration c = initial_configuration(C(kRelayT));
  c.rho.push_front("p", M("error", Value::boolean(true)));
  Tree d = denote_configuration(c, Ground::Bool, P("+q{cont(int).end, stop(bool).end}"));
  EXPECT_TRUE(tree_equal(d, t_send("q", M("stop", Value::boolean(false)), t_ret(Value::boolean(true)))));
}

TEST(Configurations, IllTypedIsRejected) {
  EXPECT_THROW(denote_configuration(initial_configuration(C("return 1")), Ground::Int, P("+p{l(int).end}")),
               DenotationError);
}

TEST(Adequacy, Fixtures) {
  auto a = adequacy_check(initial_configuration(C(kC1)), initial_configuration(C(kC2)), Ground::Int, P(kS));
  EXPECT_TRUE(a.equal_denotations && a.bisimilar && a.consistent);
  auto b = adequacy_check(initial_configuration(C(kRelayT)), initial_configuration(C(kRelayU)), Ground::Bool, P(kT));
  EXPECT_TRUE(!b.equal_denotations && !b.bisimilar && b.consistent);
  auto e = adequacy_check(initial_configuration(C(kRelayT)), initial_configuration(C(kRelayU)), Ground::Bool, P(kTe));
  EXPECT_TRUE(e.equal_denotations && e.bisimilar && e.consistent);
}

TEST(Properties, DerivationIndependence) {
  // Two buffered sends to different peers can be peeled in either order.
  testkit::Rng rng(71);
  testkit::GenOptions o;
  o.max_size = 4;
  ProbeConfig pc;
  pc.depth = 4;
  int compared = 0;
  for (int i = 0; i < 400 && compared < 60; ++i) {
    Type rest = testkit::random_type(rng, o);
    Value v1 = testkit::random_value(rng, Ground::Int);
    Value v2 = testkit::random_value(rng, Ground::Bool);
    Type T = internal("p", {{"a", Ground::Int, internal("q", {{"b", Ground::Bool, rest}})}});
    Configuration c = initial_configuration(testkit::synthesize(rng, rest, Ground::Int));
    c.sigma.push_front("p", M("a", v1));
    c.sigma.push_front("q", M("b", v2));
    Tree direct = denote_configuration(c, Ground::Int, T);
    Configuration inner = c;
    inner.sigma = Queue{};
    auto order = [&](const std::string& p1, const Message& m1, const std::string& p2, const Message& m2) {
      auto d1 = canonical_reduct(T, {Direction::Send, p1, m1.label, *constant_ground(m1.payload)}, 8).derivation;
      auto d2 = canonical_reduct(d1->result, {Direction::Send, p2, m2.label, *constant_ground(m2.payload)}, 8).derivation;
      Tree base = denote_configuration(inner, Ground::Int, d2->result);
      return inject_send(d1, p1, m1, inject_send(d2, p2, m2, base));
    };
    Tree pq = order("p", M("a", v1), "q", M("b", v2));
    Tree qp = order("q", M("b", v2), "p", M("a", v1));
    EXPECT_TRUE(tree_equal(pq, qp, pc)) << to_string(c);
    EXPECT_TRUE(tree_equal(direct, pq, pc)) << to_string(c);
    ++compared;
  }
  EXPECT_GE(compared, 60);
}

TEST(Properties, OperationalAgreement) {
  for (const char* f : {"state.mps", "state_c1.mps", "relay.mps"}) {
    Program prog = parse_program(testkit::read_file(testkit::example_path(f)));
    Session m = session_of(prog);
    RunResult r = run_session(m);
    ASSERT_EQ(r.verdict, RunResult::Verdict::Completed) << f;
    for (const auto& d : prog.participants) {
      auto inf = infer_computation({}, d.body);
      Tree t = denote_configuration(initial_configuration(d.body), inf.ground, resolve_type(prog, d).type);
      for (const auto& e : r.trace) {
        if (e.action.tau) continue;
        std::vector<Tree> next;
        if (e.action.from == d.name) next = tree_step(t, TreeAction::send(e.action.to, e.action.msg));
        else if (e.action.to == d.name) next = tree_step(t, TreeAction::recv(e.action.from, e.action.msg));
        else continue;
        ASSERT_EQ(next.size(), 1u) << f << " " << d.name << " at step " << e.step;
        t = next[0];
      }
      ASSERT_EQ(t->kind, TreeNode::Kind::Ret) << f << " " << d.name;
      EXPECT_EQ(t->result, r.results.at(d.name)) << f << " " << d.name;
    }
  }
}

TEST(Properties, ModelCorrectnessOnGeneratedConfigurations) {
  testkit::Rng rng(72);
  testkit::GenOptions o;
  o.max_size = 5;
  o.allow_rec = true;
  ProbeConfig pc;
  pc.depth = 4;
  int n = 0;
  for (int i = 0; i < 200 && n < 60; ++i) {
    auto tc = testkit::random_typed_config(rng, o, 6);
    if (!tc) continue;
    ++n;
    Tree d = denote_configuration(tc->config, tc->ground, tc->type);
    EXPECT_TRUE(bisim_bounded(tc->config, d, tc->type, pc)) << to_string(tc->config) << " : " << to_string(tc->type);
  }
  EXPECT_GE(n, 60);
}
