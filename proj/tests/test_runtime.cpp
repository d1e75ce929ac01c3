#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <json.hpp>
#include <map>
#include <sstream>

#include "mpst/runtime.hpp"
#include "mpst/syntax.hpp"
#include "mpst/typing.hpp"
#include "testkit.hpp"

using namespace mpst;

namespace {

Comp C(const std::string& s) { return parse_computation(s); }
Type P(const std::string& s) { return parse_session_type(s); }

const char* kRelayT =
    "recv from p {success(x: int) -> let y = 0 < x in if y then send cont(x) to q; return false "
    "else send stop(true) to q; return true, error(x: bool) -> send stop(false) to q; return true}";

Session load(const std::string& name) {
  return session_of(parse_program(testkit::read_file(testkit::example_path(name))));
}

std::vector<ConfigStep> non_recv(const Configuration& c) {
  std::vector<ConfigStep> out;
  for (auto& s : step_configuration(c))
    if (s.action.kind != LocalAction::Kind::Recv) out.push_back(std::move(s));
  return out;
}

}  // namespace

TEST(Computations, IfTrue) {
  auto s = step_computation(C("if true then return 1 else return 2"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].action.kind, LocalAction::Kind::Tau);
  EXPECT_EQ(to_string(s[0].next), to_string(C("return 1")));
}

TEST(Computations, SendEmits) {
  auto s = step_computation(C("send stop(false) to q; return true"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].action, LocalAction::send("q", Message{"stop", Value::boolean(false)}));
}

TEST(Computations, ReceiveTakesSuppliedMessage) {
  auto s = step_computation(C(kRelayT), Incoming{"p", Message{"error", Value::boolean(true)}});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].action.kind, LocalAction::Kind::Recv);
  EXPECT_EQ(to_string(s[0].next), to_string(C("send stop(false) to q; return true")));
  EXPECT_TRUE(step_computation(C(kRelayT)).empty());
}

TEST(Computations, ArithmeticWraps) {
  auto s = step_computation(C("9223372036854775807 + 1"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].next->vals[0], Value::integer(INT64_MIN));
}

TEST(Configurations, ProduceThenSend) {
  auto s = step_configuration(initial_configuration(C("send stop(false) to q; return true")));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].rule, "CProd");
  EXPECT_EQ(s[0].next.sigma.size("q"), 1u);
  auto t = step_configuration(s[0].next);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].rule, "CSend");
  EXPECT_TRUE(t[0].next.sigma.empty());
}

TEST(Configurations, GoldenTraceOfTheRelay) {
  Configuration c = initial_configuration(C(kRelayT));
  Message err{"error", Value::boolean(true)};
  std::vector<LocalAction> trace;
  std::vector<std::string> rules;

  auto in = step_configuration(c, Incoming{"p", err});
  auto recv = std::find_if(in.begin(), in.end(), [](const ConfigStep& s) { return s.rule == "CRecv"; });
  ASSERT_NE(recv, in.end());
  EXPECT_TRUE(non_recv(c).empty());
  trace.push_back(recv->action);
  rules.push_back(recv->rule);
  c = recv->next;
  for (int i = 0; i < 3; ++i) {
    auto s = non_recv(c);
    ASSERT_EQ(s.size(), 1u) << to_string(c);
    trace.push_back(s[0].action);
    rules.push_back(s[0].rule);
    c = s[0].next;
  }
  std::vector<LocalAction> want{LocalAction::recv("p", err), LocalAction::tau(), LocalAction::tau(),
                                LocalAction::send("q", Message{"stop", Value::boolean(false)})};
  EXPECT_EQ(trace, want);
  EXPECT_EQ(rules, (std::vector<std::string>{"CRecv", "CCons", "CProd", "CSend"}));
  EXPECT_EQ(result(c), Value::boolean(true));
}

TEST(Sessions, StateServerFirstStep) {
  Session m = load("state.mps");
  auto steps = step_session(m);
  std::map<std::string, std::string> rules;
  for (const auto& s : steps) {
    EXPECT_TRUE(s.action.tau);
    rules[s.action.role] = s.action.rule;
  }
  EXPECT_EQ(rules, (std::map<std::string, std::string>{{"s", "CInt"}, {"c", "CProd"}}));
  auto it = std::find_if(steps.begin(), steps.end(), [](const SessionStep& s) { return s.action.role == "c"; });
  ASSERT_NE(it, steps.end());
  bool comm = false;
  for (const auto& s : step_session(it->next)) comm = comm || (!s.action.tau && s.action.from == "c" && s.action.to == "s");
  EXPECT_TRUE(comm);
}

TEST(Sessions, StateServerCompletes) {
  RunOptions o;
  o.max_steps = 200;
  RunResult r = run_session(load("state.mps"), o);
  ASSERT_EQ(r.verdict, RunResult::Verdict::Completed);
  EXPECT_EQ(r.results.at("s"), Value::unit());
  EXPECT_EQ(r.results.at("c"), Value::integer(0));
  for (const auto& [role, c] : r.final_state) {
    EXPECT_TRUE(c.rho.empty()) << role;
    EXPECT_TRUE(c.sigma.empty()) << role;
  }
  EXPECT_TRUE(session_terminal(r.final_state));
}

TEST(Sessions, RelayCompletes) {
  RunResult r = run_session(load("relay.mps"));
  ASSERT_EQ(r.verdict, RunResult::Verdict::Completed);
  EXPECT_EQ(r.results.at("r"), Value::boolean(true));
  EXPECT_EQ(r.results.at("q"), Value::boolean(false));
}

TEST(Sessions, DeadlockIsStuck) {
  RunResult r = run_session(load("deadlock.mps"));
  EXPECT_EQ(r.verdict, RunResult::Verdict::Stuck);
  EXPECT_LE(r.trace.size(), 10u);
}

TEST(Sessions, RandomSchedulerIsReproducible) {
  RunOptions o;
  o.scheduler = Scheduler::Random;
  o.seed = 99;
  RunResult a = run_session(load("state_c1.mps"), o);
  RunResult b = run_session(load("state_c1.mps"), o);
  EXPECT_EQ(trace_to_jsonl(a.trace), trace_to_jsonl(b.trace));
  EXPECT_EQ(a.verdict, RunResult::Verdict::Completed);
}

TEST(Sessions, FifoPerPair) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RunOptions o;
    o.scheduler = Scheduler::Random;
    o.seed = seed;
    RunResult r = run_session(load("state.mps"), o);
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> sent;
    for (const auto& e : r.trace)
      if (!e.action.tau) sent[{e.action.from, e.action.to}].push_back(to_string(e.action.msg));
    // c's messages to s arrive in program order: get, put, done.
    EXPECT_EQ((sent[{"c", "s"}]), (std::vector<std::string>{"get(())", "put(0)", "done(())"})) << seed;
  }
}

TEST(Sessions, TraceJsonShape) {
  RunResult r = run_session(load("relay.mps"));
  std::istringstream in(trace_to_jsonl(r.trace));
  std::string line;
  int comms = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    ASSERT_TRUE(j.contains("step"));
    if (j["action"]["kind"] == "comm") {
      ++comms;
      EXPECT_TRUE(j["action"].contains("payload"));
    } else {
      EXPECT_EQ(j["action"]["kind"], "tau");
      EXPECT_TRUE(j["action"].contains("rule"));
    }
  }
  EXPECT_EQ(comms, 2);
}

TEST(Tracking, Rules) {
  Type T = P("&p{success(int). +q{cont(int).end, stop(bool).end}, error(bool). +q{cont(int).end, stop(bool).end}}");
  auto r = track_type(T, LocalAction::recv("p", Message{"error", Value::boolean(true)}));
  ASSERT_TRUE(r);
  EXPECT_TRUE(alpha_equal(*r, P("+q{cont(int).end, stop(bool).end}")));
  EXPECT_EQ(track_type(T, LocalAction::tau()), T);
  auto s = track_type(P("+q{a(bool).+p{l(int).end}}"), LocalAction::send("p", Message{"l", Value::integer(1)}));
  ASSERT_TRUE(s);
  EXPECT_TRUE(alpha_equal(*s, P("+q{a(bool).end}")));
}

TEST(Properties, SessionRunsKeepTrackedTypes) {
  Program prog = parse_program(testkit::read_file(testkit::example_path("state.mps")));
  std::map<std::string, Type> types;
  std::map<std::string, Ground> grounds{{"s", Ground::Unit}, {"c", Ground::Int}};
  for (const auto& d : prog.participants) types[d.name] = resolve_type(prog, d).type;
  Session m = session_of(prog);
  testkit::Rng rng(51);
  for (int i = 0; i < 200; ++i) {
    auto steps = step_session(m);
    if (steps.empty()) break;
    const SessionStep& s = steps[rng() % steps.size()];
    if (!s.action.tau) {
      types[s.action.from] = *track_type(types[s.action.from], LocalAction::send(s.action.to, s.action.msg));
      types[s.action.to] = *track_type(types[s.action.to], LocalAction::recv(s.action.from, s.action.msg));
    }
    m = s.next;
    for (const auto& [role, c] : m)
      ASSERT_TRUE(type_configuration(c, grounds[role], types[role]).ok) << role << " " << to_string(c);
  }
}

TEST(Properties, GeneratedSessionsComplete) {
  // Two-role sessions built from a random type for a and its dual for b.
  testkit::Rng rng(52);
  testkit::GenOptions o;
  o.peers = {"b"};
  o.allow_rec = false;
  std::function<Type(const Type&)> dual = [&](const Type& t) -> Type {
    if (!t->is_choice()) return t;
    Branches bs;
    for (const auto& b : t->branches) bs.push_back({b.label, b.payload, dual(b.cont)});
    return choice(t->kind == TypeKind::Internal ? TypeKind::External : TypeKind::Internal, "a", std::move(bs));
  };
  for (int i = 0; i < 200; ++i) {
    Type ta = testkit::random_type(rng, o);
    Type tb = dual(ta);
    Session m{{"a", initial_configuration(testkit::synthesize(rng, ta, Ground::Int))},
              {"b", initial_configuration(testkit::synthesize(rng, tb, Ground::Int))}};
    RunResult r = run_session(m);
    EXPECT_EQ(r.verdict, RunResult::Verdict::Completed) << to_string(ta);
    EXPECT_TRUE(r.all_discharged());
  }
}
