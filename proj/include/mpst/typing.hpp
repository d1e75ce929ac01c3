#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mpst/configuration.hpp"
#include "mpst/relations.hpp"
#include "mpst/subtyping.hpp"
#include "mpst/syntax.hpp"

namespace mpst {

struct FunctionSig {
  std::vector<Ground> args;
  Type grade;
  Ground result = Ground::Unit;
};

struct TypingContext {
  std::set<std::string> theta;
  std::map<std::string, FunctionSig> psi;
  std::map<std::string, Ground> gamma;
};

// Grades the checker settled on for each node of a term, so that later
// passes can follow the same derivation.
struct NodeGrade {
  Ground ground = Ground::Unit;
  Type grade;
  std::string rec_var;  // LetRec: variable standing for a recursive call
  Type rec_body;        // LetRec: grade of the body, open in rec_var
};
using GradeLog = std::map<const Computation*, NodeGrade>;

struct Inference {
  bool ok = false;
  Ground ground = Ground::Unit;
  Type grade;
  std::string error;
};

std::optional<Ground> type_value(const std::map<std::string, Ground>& gamma, const Value& v);

Inference infer_computation(const TypingContext& ctx, const Comp& t, const SubtypeOptions& opts = {},
                            GradeLog* log = nullptr);

struct CheckResult {
  bool ok = false;
  std::string error;
};

CheckResult check_computation(const TypingContext& ctx, const Comp& t, Ground b, const Type& T,
                              const SubtypeOptions& opts = {}, GradeLog* log = nullptr);

// One CSend step: the configuration's type reduces by sending `msg` to `peer`.
struct SendStep {
  std::string peer;
  Message msg;
  Derivation derivation;  // from the outer type to the inner one
};

// One CRecv step: the inner type reduces by receiving `msg` from `peer`.
struct RecvStep {
  std::string peer;
  Message msg;
  Derivation derivation;
};

struct ConfigTyping {
  bool ok = false;
  std::string error;
  Ground ground = Ground::Unit;
  // sends[0] is the outermost rule; each removes the oldest message of its lane.
  std::vector<SendStep> sends;
  // Type left once the send queue is peeled away.
  Type after_sends;
  Type base_grade;  // inferred grade of the computation
  // recvs[0] is the innermost rule, i.e. the oldest buffered message.
  std::vector<RecvStep> recvs;
  Type after_recvs;  // base grade advanced past the receive queue
};

// Derivations are searched with every CSend rule below every CRecv rule; within
// the send queue, each interleaving of participants is tried.
ConfigTyping type_configuration(const Configuration& c, Ground b, const Type& T,
                                const SubtypeOptions& opts = {});

struct RoleReport {
  std::string role;
  bool ok = false;
  Type expected;  // declared type or projection
  Ground ground = Ground::Unit;
  Type grade;
  std::string error;
};

struct SessionReport {
  bool ok = false;
  std::vector<std::string> errors;  // session-level problems
  std::vector<RoleReport> roles;
};

// Type expected for a participant: its declared type or the projection it names.
struct ResolvedType {
  Type type;
  std::string error;
};
ResolvedType resolve_type(const Program& p, const ParticipantDecl& d);

SessionReport session_well_typed(const Program& p, const SubtypeOptions& opts = {});

}  // namespace mpst
