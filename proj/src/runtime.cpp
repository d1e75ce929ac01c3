#include "mpst/runtime.hpp"

#include <json.hpp>
#include <random>
#include <sstream>

namespace mpst {

std::string to_string(const LocalAction& a) {
  switch (a.kind) {
    case LocalAction::Kind::Tau: return "tau";
    case LocalAction::Kind::Send: return a.peer + "!" + to_string(a.msg);
    case LocalAction::Kind::Recv: return a.peer + "?" + to_string(a.msg);
  }
  return "?";
}

std::string to_string(const GlobalAction& a) {
  if (a.tau) return "tau@" + a.role + " [" + a.rule + "]";
  return a.from + "->" + a.to + ":" + to_string(a.msg);
}

namespace {

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}

std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}

const Computation* strip_ascriptions(const Computation* c) {
  while (c->kind == CompKind::Ascribe) c = c->first.get();
  return c;
}

Comp with_first(const Comp& c, Comp first) {
  auto out = std::make_shared<Computation>(*c);
  out->first = std::move(first);
  return out;
}

Comp with_second(const Comp& c, Comp second) {
  auto out = std::make_shared<Computation>(*c);
  out->second = std::move(second);
  return out;
}

// `scope` lists the letrec definitions enclosing the hole, innermost last.
void step_in(const Comp& t, std::vector<const Computation*>& scope, const std::optional<Incoming>& incoming,
             std::vector<CompStep>& out) {
  auto tau = [&](const char* rule, Comp next) { out.push_back({LocalAction::tau(), rule, std::move(next)}); };
  switch (t->kind) {
    case CompKind::Return: return;
    case CompKind::Let: {
      const Computation* bound = strip_ascriptions(t->first.get());
      if (bound->kind == CompKind::Return) {
        if (bound->vals[0].is_constant()) tau("LetR", substitute_value(t->second, t->name, bound->vals[0]));
        return;
      }
      std::vector<CompStep> inner;
      step_in(t->first, scope, incoming, inner);
      for (auto& s : inner) out.push_back({s.action, s.rule, c_let(t->name, s.next, t->second)});
      return;
    }
    case CompKind::LetRec: {
      scope.push_back(t.get());
      std::vector<CompStep> inner;
      step_in(t->second, scope, incoming, inner);
      scope.pop_back();
      for (auto& s : inner) out.push_back({s.action, s.rule, with_second(t, s.next)});
      return;
    }
    case CompKind::Ascribe: {
      std::vector<CompStep> inner;
      step_in(t->first, scope, incoming, inner);
      for (auto& s : inner) out.push_back({s.action, s.rule, with_first(t, s.next)});
      return;
    }
    case CompKind::Add:
    case CompKind::Sub:
    case CompKind::Less: {
      const Value& a = t->vals[0];
      const Value& b = t->vals[1];
      if (a.kind != Value::Kind::Int || b.kind != Value::Kind::Int) return;
      if (t->kind == CompKind::Add) tau("Add", c_return(Value::integer(wrap_add(a.i, b.i))));
      else if (t->kind == CompKind::Sub) tau("Sub", c_return(Value::integer(wrap_sub(a.i, b.i))));
      else if (a.i < b.i) tau("LeT", c_return(Value::boolean(true)));
      else tau("LeF", c_return(Value::boolean(false)));
      return;
    }
    case CompKind::If: {
      const Value& v = t->vals[0];
      if (v.kind != Value::Kind::Bool) return;
      if (v.b) tau("IfT", t->first);
      else tau("IfF", t->second);
      return;
    }
    case CompKind::Send: {
      const Value& v = t->vals[0];
      if (!v.is_constant()) return;
      out.push_back({LocalAction::send(t->peer, Message{t->name, v}), "Send", t->first});
      return;
    }
    case CompKind::Recv: {
      if (!incoming || incoming->peer != t->peer) return;
      for (const auto& a : t->arms) {
        if (a.label != incoming->msg.label) continue;
        if (constant_ground(incoming->msg.payload) != a.payload) return;
        out.push_back({LocalAction::recv(t->peer, incoming->msg), "Recv",
                       substitute_value(a.body, a.binder, incoming->msg.payload)});
      }
      return;
    }
    case CompKind::Apply: {
      for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
        const Computation* def = *it;
        if (def->name != t->name) continue;
        if (def->params.size() != t->vals.size()) return;
        std::map<std::string, Value> args;
        for (std::size_t i = 0; i < def->params.size(); ++i) {
          if (!t->vals[i].is_constant()) return;
          args[def->params[i].name] = t->vals[i];
        }
        tau("Apply", substitute_values(def->first, args));
        return;
      }
      return;
    }
  }
}

const Computation* redex(const Computation* t) {
  for (;;) {
    switch (t->kind) {
      case CompKind::Let:
        if (strip_ascriptions(t->first.get())->kind == CompKind::Return) return t;
        t = t->first.get();
        break;
      case CompKind::LetRec: t = t->second.get(); break;
      case CompKind::Ascribe: t = t->first.get(); break;
      default: return t;
    }
  }
}

}  // namespace

std::vector<CompStep> step_computation(const Comp& t, const std::optional<Incoming>& incoming) {
  std::vector<CompStep> out;
  std::vector<const Computation*> scope;
  step_in(t, scope, incoming, out);
  return out;
}

std::optional<std::string> waiting_on(const Comp& t) {
  const Computation* r = redex(t.get());
  if (r->kind == CompKind::Recv) return r->peer;
  return std::nullopt;
}

std::vector<ConfigStep> step_configuration(const Configuration& c, const std::optional<Incoming>& incoming) {
  std::vector<ConfigStep> out;
  for (auto& s : step_computation(c.comp)) {
    Configuration next{c.rho, s.next, c.sigma};
    if (s.action.kind == LocalAction::Kind::Send) {
      next.sigma.push_front(s.action.peer, s.action.msg);
      out.push_back({LocalAction::tau(), "CProd", s.rule, std::move(next)});
    } else {
      out.push_back({LocalAction::tau(), "CInt", s.rule, std::move(next)});
    }
  }
  if (auto p = waiting_on(c.comp)) {
    if (auto m = c.rho.back(*p)) {
      for (auto& s : step_computation(c.comp, Incoming{*p, *m})) {
        Configuration next{c.rho, s.next, c.sigma};
        next.rho.pop_back(*p);
        out.push_back({LocalAction::tau(), "CCons", s.rule, std::move(next)});
      }
    }
  }
  for (const auto& [p, lane] : c.sigma.lanes()) {
    Configuration next = c;
    next.sigma.pop_back(p);
    out.push_back({LocalAction::send(p, lane.back()), "CSend", "", std::move(next)});
  }
  if (incoming) {
    Configuration next = c;
    next.rho.push_front(incoming->peer, incoming->msg);
    out.push_back({LocalAction::recv(incoming->peer, incoming->msg), "CRecv", "", std::move(next)});
  }
  return out;
}

namespace {

std::optional<ConfigStep> tau_step(const Configuration& c) {
  for (auto& s : step_configuration(c))
    if (s.action.kind == LocalAction::Kind::Tau) return s;
  return std::nullopt;
}

std::size_t index_of(const Session& m, const std::string& role) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].first == role) return i;
  return m.size();
}

// Comm actions with `role` as sender or receiver, senders' lanes in name order.
std::vector<SessionStep> comms(const Session& m, std::optional<std::size_t> only_from,
                               std::optional<std::size_t> only_to) {
  std::vector<SessionStep> out;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (only_from && *only_from != j) continue;
    for (const auto& [to, lane] : m[j].second.sigma.lanes()) {
      std::size_t k = index_of(m, to);
      if (k == m.size() || k == j) continue;
      if (only_to && *only_to != k) continue;
      SessionStep s;
      s.action.tau = false;
      s.action.from = m[j].first;
      s.action.to = to;
      s.action.msg = lane.back();
      s.next = m;
      s.next[j].second.sigma.pop_back(to);
      s.next[k].second.rho.push_front(m[j].first, lane.back());
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

std::vector<SessionStep> step_session(const Session& m) {
  std::vector<SessionStep> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (auto s = tau_step(m[i].second)) {
      SessionStep st;
      st.action.tau = true;
      st.action.role = m[i].first;
      st.action.rule = s->rule;
      st.next = m;
      st.next[i].second = s->next;
      out.push_back(std::move(st));
    }
  }
  for (auto& s : comms(m, std::nullopt, std::nullopt)) out.push_back(std::move(s));
  return out;
}

bool session_terminal(const Session& m) {
  for (const auto& [_, c] : m)
    if (!result(c)) return false;
  return true;
}

std::size_t RunResult::max_wait() const {
  std::size_t w = 0;
  for (const auto& e : liveness)
    if (e.discharged) w = std::max(w, *e.discharged - e.opened);
  return w;
}

bool RunResult::all_discharged() const {
  for (const auto& e : liveness)
    if (!e.discharged) return false;
  return true;
}

const char* verdict_name(RunResult::Verdict v) {
  switch (v) {
    case RunResult::Verdict::Completed: return "completed";
    case RunResult::Verdict::Running: return "running";
    case RunResult::Verdict::Stuck: return "stuck";
  }
  return "?";
}

namespace {

class Monitor {
 public:
  explicit Monitor(RunResult& r) : r_(r) {}

  void observe_waits(const Session& m, std::size_t step) {
    for (const auto& [role, c] : m) {
      auto p = waiting_on(c.comp);
      if (p && !open_recv_.count(role)) {
        open_recv_[role] = r_.liveness.size();
        r_.liveness.push_back({LivenessEvent::Kind::BlockedRecv, role, *p, step, std::nullopt});
      }
    }
    std::size_t depth = 0;
    for (const auto& [_, c] : m) depth += c.rho.size() + c.sigma.size();
    r_.max_queue_depth = std::max(r_.max_queue_depth, depth);
  }

  void record(const GlobalAction& a, std::size_t step) {
    if (a.tau && a.rule == "CProd") {
      pending_.push_back(r_.liveness.size());
      r_.liveness.push_back({LivenessEvent::Kind::BufferedSend, a.role, "", step, std::nullopt});
    } else if (a.tau && a.rule == "CCons") {
      auto it = open_recv_.find(a.role);
      if (it != open_recv_.end()) {
        r_.liveness[it->second].discharged = step;
        open_recv_.erase(it);
      }
    } else if (!a.tau) {
      for (auto it = pending_.begin(); it != pending_.end(); ++it) {
        LivenessEvent& e = r_.liveness[*it];
        if (e.role == a.from && e.peer == a.to) {
          e.discharged = step;
          pending_.erase(it);
          break;
        }
      }
    }
  }

  // Fills in the destination of sends recorded by CProd once the new state is known.
  void resolve_sends(const Session& before, const Session& after, const GlobalAction& a) {
    if (!(a.tau && a.rule == "CProd")) return;
    std::size_t i = index_of(before, a.role);
    for (const auto& [p, lane] : after[i].second.sigma.lanes())
      if (lane.size() > before[i].second.sigma.size(p)) {
        r_.liveness[pending_.back()].peer = p;
        return;
      }
  }

 private:
  RunResult& r_;
  std::map<std::string, std::size_t> open_recv_;
  std::vector<std::size_t> pending_;
};

}  // namespace

RunResult run_session(const Session& start, const RunOptions& opts) {
  RunResult r;
  Session m = start;
  Monitor mon(r);
  std::size_t step = 0;
  mon.observe_waits(m, step);
  auto apply = [&](SessionStep& s) {
    mon.record(s.action, step);
    mon.resolve_sends(m, s.next, s.action);
    r.trace.push_back({step, s.action});
    m = std::move(s.next);
    ++step;
    mon.observe_waits(m, step);
  };
  std::mt19937_64 rng(opts.seed);
  std::size_t turn = 0;
  std::size_t idle_turns = 0;
  while (step < opts.max_steps) {
    if (opts.scheduler == Scheduler::Random) {
      auto steps = step_session(m);
      if (steps.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, steps.size() - 1);
      apply(steps[pick(rng)]);
      continue;
    }
    if (m.empty()) break;
    std::size_t i = turn % m.size();
    ++turn;
    bool progressed = false;
    for (std::size_t k = 0; k < opts.tau_budget && step < opts.max_steps; ++k) {
      auto s = tau_step(m[i].second);
      if (!s) break;
      SessionStep st;
      st.action.tau = true;
      st.action.role = m[i].first;
      st.action.rule = s->rule;
      st.next = m;
      st.next[i].second = s->next;
      apply(st);
      progressed = true;
    }
    if (step < opts.max_steps) {
      auto cs = comms(m, i, std::nullopt);
      if (cs.empty()) cs = comms(m, std::nullopt, i);
      if (!cs.empty()) {
        apply(cs.front());
        progressed = true;
      }
    }
    idle_turns = progressed ? 0 : idle_turns + 1;
    if (idle_turns >= m.size()) break;
  }
  r.final_state = m;
  if (step_session(m).empty()) {
    if (session_terminal(m)) {
      r.verdict = RunResult::Verdict::Completed;
      for (const auto& [role, c] : m) r.results.emplace(role, *result(c));
    } else {
      r.verdict = RunResult::Verdict::Stuck;
    }
  } else {
    r.verdict = RunResult::Verdict::Running;
  }
  return r;
}

Session session_of(const Program& p) {
  Session m;
  for (const auto& d : p.participants) m.emplace_back(d.name, initial_configuration(d.body));
  return m;
}

std::string to_string(const Session& m) {
  std::ostringstream os;
  for (const auto& [role, c] : m) os << role << " |> " << to_string(c) << '\n';
  return os.str();
}

namespace {

nlohmann::json payload_json(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Int: return v.i;
    case Value::Kind::Bool: return v.b;
    case Value::Kind::Unit: return nullptr;
    default: return v.name;
  }
}

}  // namespace

std::string trace_to_jsonl(const std::vector<TraceEntry>& trace) {
  std::string out;
  for (const auto& e : trace) {
    nlohmann::json a;
    if (e.action.tau) {
      a = {{"kind", "tau"}, {"role", e.action.role}, {"rule", e.action.rule}};
    } else {
      a = {{"kind", "comm"},
           {"from", e.action.from},
           {"to", e.action.to},
           {"label", e.action.msg.label},
           {"payload", payload_json(e.action.msg.payload)}};
    }
    nlohmann::json line = {{"step", e.step}, {"action", a}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::optional<Type> track_type(const Type& T, const LocalAction& a, int fuel) {
  if (a.kind == LocalAction::Kind::Tau) return T;
  auto g = constant_ground(a.msg.payload);
  if (!g) return std::nullopt;
  Direction dir = a.kind == LocalAction::Kind::Send ? Direction::Send : Direction::Recv;
  CanonicalReduct r = canonical_reduct(T, ReductQuery{dir, a.peer, a.msg.label, *g}, fuel);
  if (!r.derivation) return std::nullopt;
  return r.derivation->result;
}

}  // namespace mpst
