#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mpst/configuration.hpp"
#include "mpst/relations.hpp"
#include "mpst/syntax.hpp"

namespace mpst {

struct LocalAction {
  enum class Kind { Tau, Send, Recv } kind = Kind::Tau;
  std::string peer;
  Message msg;

  static LocalAction tau() { return {}; }
  static LocalAction send(std::string p, Message m) { return {Kind::Send, std::move(p), std::move(m)}; }
  static LocalAction recv(std::string p, Message m) { return {Kind::Recv, std::move(p), std::move(m)}; }
  bool operator==(const LocalAction& o) const { return kind == o.kind && peer == o.peer && msg == o.msg; }
};

std::string to_string(const LocalAction& a);

struct Incoming {
  std::string peer;
  Message msg;
};

struct CompStep {
  LocalAction action;
  std::string rule;  // LetR, IfT, IfF, Add, Sub, LeT, LeF, Apply, Send, Recv
  Comp next;
};

// One-step reducts of a closed computation. A receive only fires on the
// supplied message.
std::vector<CompStep> step_computation(const Comp& t, const std::optional<Incoming>& incoming = std::nullopt);

// Participant the computation is waiting on, if its next redex is a receive.
std::optional<std::string> waiting_on(const Comp& t);

struct ConfigStep {
  LocalAction action;
  std::string rule;        // CInt, CProd, CCons, CSend, CRecv
  std::string inner_rule;  // computation rule behind CInt/CProd/CCons
  Configuration next;
};

std::vector<ConfigStep> step_configuration(const Configuration& c,
                                           const std::optional<Incoming>& incoming = std::nullopt);

using Session = std::vector<std::pair<std::string, Configuration>>;

struct GlobalAction {
  bool tau = true;
  std::string role;  // for tau
  std::string from, to;
  Message msg;
  std::string rule;  // configuration rule for tau
};

std::string to_string(const GlobalAction& a);

struct SessionStep {
  GlobalAction action;
  Session next;
};

std::vector<SessionStep> step_session(const Session& m);

bool session_terminal(const Session& m);

enum class Scheduler { RoundRobin, Random };

struct RunOptions {
  Scheduler scheduler = Scheduler::RoundRobin;
  std::uint64_t seed = 0;
  std::size_t max_steps = 10000;
  std::size_t tau_budget = 32;
};

struct TraceEntry {
  std::size_t step = 0;
  GlobalAction action;
};

// A receive the computation was waiting on, or a message sitting in a send queue.
struct LivenessEvent {
  enum class Kind { BlockedRecv, BufferedSend } kind;
  std::string role;
  std::string peer;
  std::size_t opened = 0;
  std::optional<std::size_t> discharged;
};

struct RunResult {
  enum class Verdict { Completed, Running, Stuck } verdict = Verdict::Running;
  std::map<std::string, Value> results;
  Session final_state;
  std::vector<TraceEntry> trace;
  std::vector<LivenessEvent> liveness;
  std::size_t max_queue_depth = 0;

  // Longest wait among discharged events.
  std::size_t max_wait() const;
  bool all_discharged() const;
};

const char* verdict_name(RunResult::Verdict v);

RunResult run_session(const Session& m, const RunOptions& opts = {});

// Builds a session from the participant declarations of a program.
Session session_of(const Program& p);

std::string to_string(const Session& m);

// One JSON object per line.
std::string trace_to_jsonl(const std::vector<TraceEntry>& trace);

// Type after an action: tau keeps it, sends and receives take the canonical reduct.
std::optional<Type> track_type(const Type& T, const LocalAction& a, int fuel = 16);

}  // namespace mpst
