#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "mpst/denotation.hpp"
#include "mpst/global_type.hpp"
#include "mpst/runtime.hpp"
#include "mpst/subtyping.hpp"
#include "mpst/syntax.hpp"
#include "mpst/tree.hpp"
#include "mpst/typing.hpp"

using nlohmann::json;
using namespace mpst;

namespace {

constexpr int kOk = 0;
constexpr int kFalse = 1;
constexpr int kUsage = 2;

// Raised for unreadable input; maps to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Program load(const std::string& path) {
  try {
    return parse_program(read_file(path));
  } catch (const SyntaxError& e) {
    throw InputError(path + ":" + e.what());
  }
}

Type closed_type(const std::string& src) {
  Type t;
  try {
    t = parse_session_type(src);
  } catch (const SyntaxError& e) {
    throw InputError(std::string("type: ") + e.what());
  }
  if (auto d = well_formed(t, {})) throw InputError("type " + src + " is ill-formed (" + d->rule + "): " + d->message);
  return t;
}

json value_json(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Unit: return nullptr;
    case Value::Kind::Int: return v.i;
    case Value::Kind::Bool: return v.b;
    case Value::Kind::Var: return v.name;
  }
  return nullptr;
}

std::vector<std::int64_t> parse_probes(const std::string& s) {
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("bad int probe '" + item + "'");
    }
  }
  if (out.empty()) throw InputError("--int-probes needs at least one value");
  return out;
}

const ParticipantDecl& find_role(const Program& p, const std::string& role, const std::string& file) {
  const ParticipantDecl* d = p.find_participant(role);
  if (!d) throw InputError(file + " has no participant " + role);
  return *d;
}

struct Settings {
  bool json = false;
  int fuel = 16;
  int depth = 6;
  std::string probes = "-1,0,1,2";

  SubtypeOptions subtyping() const {
    SubtypeOptions o;
    o.fuel = fuel;
    return o;
  }
  ProbeConfig probe_config() const {
    ProbeConfig p;
    if (depth < 1) throw InputError("--depth must be at least 1");
    p.depth = depth;
    p.int_probes = parse_probes(probes);
    return p;
  }
  DenoteOptions denote() const {
    DenoteOptions d;
    d.fuel = fuel;
    d.subtyping = subtyping();
    return d;
  }
};

int cmd_check(const Settings& s, const std::string& file) {
  Program p = load(file);
  SessionReport rep = session_well_typed(p, s.subtyping());
  if (s.json) {
    json roles = json::array();
    for (const auto& r : rep.roles)
      roles.push_back({{"role", r.role},
                       {"ok", r.ok},
                       {"expected", r.expected ? to_string(r.expected) : ""},
                       {"ground", ground_name(r.ground)},
                       {"grade", r.grade ? to_string(r.grade) : ""},
                       {"error", r.error}});
    std::cout << json{{"command", "check"}, {"ok", rep.ok}, {"errors", rep.errors}, {"roles", roles}}.dump()
              << '\n';
  } else {
    for (const auto& e : rep.errors) std::cout << "session: " << e << '\n';
    for (const auto& r : rep.roles) {
      if (r.ok)
        std::cout << r.role << ": ok  " << ground_name(r.ground) << " / " << to_string(r.grade) << " <: "
                  << to_string(r.expected) << '\n';
      else
        std::cout << r.role << ": error  " << r.error << '\n';
    }
    std::cout << (rep.ok ? "well-typed" : "ill-typed") << '\n';
  }
  return rep.ok ? kOk : kFalse;
}

int cmd_subtype(const Settings& s, const std::string& a, const std::string& b, bool oracle, bool explain) {
  Type t = closed_type(a);
  Type u = closed_type(b);
  SubtypeResult r = subtype(t, u, {}, s.subtyping());
  std::optional<bool> oracle_result;
  std::string oracle_note;
  if (oracle) {
    try {
      oracle_result = siso_subtype_oracle(t, u);
    } catch (const std::invalid_argument& e) {
      oracle_note = e.what();
    }
  }
  if (s.json) {
    json j{{"command", "subtype"},
           {"sub", to_string(t)},
           {"super", to_string(u)},
           {"verdict", verdict_name(r.verdict)},
           {"pairs_explored", r.pairs_explored},
           {"explanation", r.explanation}};
    if (oracle) j["oracle"] = oracle_result ? json(*oracle_result) : json(nullptr);
    if (!oracle_note.empty()) j["oracle_note"] = oracle_note;
    std::cout << j.dump() << '\n';
  } else {
    std::cout << verdict_name(r.verdict) << '\n';
    if (explain)
      for (const auto& line : r.explanation) std::cout << "  " << line << '\n';
    if (oracle) {
      if (oracle_result) std::cout << "oracle: " << (*oracle_result ? "subtype" : "not a subtype") << '\n';
      else std::cout << "oracle: not applicable (" << oracle_note << ")\n";
    }
  }
  return r.proven() ? kOk : kFalse;
}

int cmd_project(const Settings& s, const std::string& file, const std::string& role, const std::string& gname) {
  Program p = load(file);
  const Global* g = nullptr;
  std::string name = gname;
  if (name.empty()) {
    if (const ParticipantDecl* d = p.find_participant(role); d && !d->type.type) name = d->type.global;
    else if (!p.globals.empty()) name = p.globals.front().first;
  }
  g = p.find_global(name);
  if (!g) throw InputError(file + " has no global type" + (name.empty() ? "" : " " + name));
  if (auto d = g_well_formed(*g)) {
    if (s.json) std::cout << json{{"command", "project"}, {"ok", false}, {"error", d->message}}.dump() << '\n';
    else std::cout << "error: " << d->message << '\n';
    return kFalse;
  }
  ProjectResult r = project(*g, role);
  if (s.json) {
    json j{{"command", "project"}, {"global", name}, {"role", role}, {"ok", static_cast<bool>(r)}};
    if (r) j["type"] = to_string(r.type);
    else j["error"] = {{"path", r.error.path}, {"message", r.error.message}};
    std::cout << j.dump() << '\n';
  } else if (r) {
    std::cout << to_string(r.type) << '\n';
  } else {
    std::string path;
    for (const auto& l : r.error.path) path += (path.empty() ? "" : ".") + l;
    std::cout << "error: projection undefined" << (path.empty() ? "" : " at " + path) << ": " << r.error.message
              << '\n';
  }
  return r ? kOk : kFalse;
}

int cmd_run(const Settings& s, const std::string& file, const std::string& scheduler, std::uint64_t seed,
            std::size_t max_steps, std::size_t tau_budget, const std::string& trace_path) {
  Program p = load(file);
  RunOptions opts;
  if (scheduler == "roundrobin") opts.scheduler = Scheduler::RoundRobin;
  else if (scheduler == "random") opts.scheduler = Scheduler::Random;
  else throw InputError("unknown scheduler " + scheduler);
  opts.seed = seed;
  opts.max_steps = max_steps;
  opts.tau_budget = tau_budget;
  SessionReport typed = session_well_typed(p, s.subtyping());
  RunResult r = run_session(session_of(p), opts);
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) throw InputError("cannot write " + trace_path);
    out << trace_to_jsonl(r.trace);
  }
  std::size_t open = 0;
  for (const auto& e : r.liveness)
    if (!e.discharged) ++open;
  if (s.json) {
    json results = json::object();
    for (const auto& [role, v] : r.results) results[role] = value_json(v);
    json j{{"command", "run"},
           {"well_typed", typed.ok},
           {"verdict", verdict_name(r.verdict)},
           {"steps", r.trace.size()},
           {"results", results},
           {"max_queue_depth", r.max_queue_depth},
           {"liveness", {{"events", r.liveness.size()}, {"open", open}, {"max_wait", r.max_wait()}}}};
    if (r.verdict != RunResult::Verdict::Completed) j["state"] = to_string(r.final_state);
    std::cout << j.dump() << '\n';
  } else {
    if (!typed.ok) std::cout << "warning: session is not well-typed\n";
    std::cout << "verdict: " << verdict_name(r.verdict) << " after " << r.trace.size() << " steps\n";
    for (const auto& [role, v] : r.results) std::cout << "  " << role << " = " << to_string(v) << '\n';
    std::cout << "liveness: " << r.liveness.size() << " events, " << open << " open, max wait " << r.max_wait()
              << ", max queue depth " << r.max_queue_depth << '\n';
    if (r.verdict != RunResult::Verdict::Completed) std::cout << to_string(r.final_state);
  }
  return r.verdict == RunResult::Verdict::Completed ? kOk : kFalse;
}

struct RoleTerm {
  Type type;
  Ground ground;
  Configuration config;
};

RoleTerm role_term(const Settings& s, const std::string& file, const std::string& role) {
  Program p = load(file);
  const ParticipantDecl& d = find_role(p, role, file);
  ResolvedType rt = resolve_type(p, d);
  if (!rt.type) throw std::runtime_error(rt.error);
  Inference inf = infer_computation({}, d.body, s.subtyping());
  if (!inf.ok) throw std::runtime_error(role + ": " + inf.error);
  return {rt.type, inf.ground, initial_configuration(d.body)};
}

int cmd_denote(const Settings& s, const std::string& file, const std::string& role) {
  ProbeConfig probes = s.probe_config();
  RoleTerm rt = role_term(s, file, role);
  Tree t = denote_configuration(rt.config, rt.ground, rt.type, s.denote());
  std::string text = tree_to_string(t, probes);
  if (s.json)
    std::cout << json{{"command", "denote"}, {"role", role}, {"type", to_string(rt.type)}, {"tree", text}}.dump()
              << '\n';
  else
    std::cout << text << '\n';
  return kOk;
}

std::pair<RoleTerm, RoleTerm> role_pair(const Settings& s, const std::vector<std::string>& args, const Type& at) {
  RoleTerm a = role_term(s, args[0], args[1]);
  RoleTerm b = role_term(s, args[2], args[3]);
  if (a.ground != b.ground)
    throw std::runtime_error("results differ in type: " + std::string(ground_name(a.ground)) + " and " +
                             ground_name(b.ground));
  for (const auto* r : {&a, &b}) {
    ConfigTyping ct = type_configuration(r->config, r->ground, at, s.subtyping());
    if (!ct.ok) throw std::runtime_error("not typable at " + to_string(at) + ": " + ct.error);
  }
  return {a, b};
}

int cmd_bisim(const Settings& s, const std::vector<std::string>& args, const std::string& at_src) {
  Type at = closed_type(at_src);
  ProbeConfig probes = s.probe_config();
  auto [a, b] = role_pair(s, args, at);
  bool ok = bisim_bounded(a.config, b.config, at, probes, s.fuel);
  if (s.json)
    std::cout << json{{"command", "bisim"}, {"at", to_string(at)}, {"depth", probes.depth}, {"bisimilar", ok}}.dump()
              << '\n';
  else
    std::cout << (ok ? "bisimilar" : "not bisimilar") << " at " << to_string(at) << " (depth " << probes.depth
              << ")\n";
  return ok ? kOk : kFalse;
}

int cmd_equiv(const Settings& s, const std::vector<std::string>& args, const std::string& at_src) {
  Type at = closed_type(at_src);
  ProbeConfig probes = s.probe_config();
  auto [a, b] = role_pair(s, args, at);
  Adequacy r = adequacy_check(a.config, b.config, a.ground, at, probes, s.denote());
  if (s.json) {
    std::cout << json{{"command", "equiv"},
                      {"at", to_string(at)},
                      {"depth", probes.depth},
                      {"equal_denotations", r.equal_denotations},
                      {"bisimilar", r.bisimilar},
                      {"consistent", r.consistent}}
                     .dump()
              << '\n';
  } else {
    std::cout << "equal denotations: " << (r.equal_denotations ? "yes" : "no") << '\n'
              << "bisimilar:         " << (r.bisimilar ? "yes" : "no") << '\n'
              << "consistent:        " << (r.consistent ? "yes" : "no") << '\n';
  }
  if (!r.consistent) return kFalse;
  return r.equal_denotations ? kOk : kFalse;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mpstc: asynchronous multiparty session types"};
  app.require_subcommand(1);
  Settings s;

  auto common = [&](CLI::App* sub) {
    sub->add_flag("--json", s.json, "emit one JSON object");
    sub->add_option("--fuel", s.fuel, "reduct and subtyping fuel")->capture_default_str();
  };
  auto probing = [&](CLI::App* sub) {
    sub->add_option("--depth", s.depth, "observation depth")->capture_default_str();
    sub->add_option("--int-probes", s.probes, "comma-separated int payloads to probe")->capture_default_str();
  };

  std::string file, role, global, type_a, type_b, at, scheduler = "roundrobin", trace;
  bool oracle = false, explain = false;
  std::uint64_t seed = 0;
  std::size_t max_steps = 10000, tau_budget = 32;
  std::vector<std::string> pair;

  auto* check = app.add_subcommand("check", "type-check every participant of a session file");
  check->add_option("file", file)->required();
  common(check);

  auto* sub = app.add_subcommand("subtype", "decide T <: U");
  sub->add_option("T", type_a)->required();
  sub->add_option("U", type_b)->required();
  sub->add_flag("--oracle", oracle, "cross-check with the tree decomposition oracle");
  sub->add_flag("--explain", explain, "print the derivation or the failing clause");
  common(sub);

  auto* proj = app.add_subcommand("project", "project a global type onto a role");
  proj->add_option("file", file)->required();
  proj->add_option("--role", role)->required();
  proj->add_option("--global", global, "global type name");
  common(proj);

  auto* run = app.add_subcommand("run", "simulate a session");
  run->add_option("file", file)->required();
  run->add_option("--scheduler", scheduler)->check(CLI::IsMember({"roundrobin", "random"}))->capture_default_str();
  run->add_option("--seed", seed)->capture_default_str();
  run->add_option("--max-steps", max_steps)->capture_default_str();
  run->add_option("--tau-budget", tau_budget)->capture_default_str();
  run->add_option("--trace", trace, "write the trace as JSON lines");
  common(run);

  auto* den = app.add_subcommand("denote", "print the normal-form computation tree of a participant");
  den->add_option("file", file)->required();
  den->add_option("--role", role)->required();
  common(den);
  probing(den);

  auto* bis = app.add_subcommand("bisim", "bounded typed bisimilarity of two participants");
  bis->add_option("args", pair, "fileA roleA fileB roleB")->required()->expected(4);
  bis->add_option("--at", at)->required();
  common(bis);
  probing(bis);

  auto* eq = app.add_subcommand("equiv", "compare denotations and bisimilarity");
  eq->add_option("args", pair, "fileA roleA fileB roleB")->required()->expected(4);
  eq->add_option("--at", at)->required();
  common(eq);
  probing(eq);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*check) return cmd_check(s, file);
    if (*sub) return cmd_subtype(s, type_a, type_b, oracle, explain);
    if (*proj) return cmd_project(s, file, role, global);
    if (*run) return cmd_run(s, file, scheduler, seed, max_steps, tau_budget, trace);
    if (*den) return cmd_denote(s, file, role);
    if (*bis) return cmd_bisim(s, pair, at);
    if (*eq) return cmd_equiv(s, pair, at);
  } catch (const InputError& e) {
    std::cerr << "mpstc: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    if (s.json) std::cout << json{{"ok", false}, {"error", e.what()}}.dump() << '\n';
    else std::cerr << "mpstc: " << e.what() << '\n';
    return kFalse;
  }
  return kUsage;
}
