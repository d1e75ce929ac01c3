#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mpst/session_type.hpp"

namespace mpst {

struct GlobalType;
using Global = std::shared_ptr<const GlobalType>;

struct GlobalBranch {
  std::string label;
  Ground payload;
  Global cont;
};

enum class GlobalKind { End, Comm, Var, Rec };

struct GlobalType {
  GlobalKind kind = GlobalKind::End;
  std::string from;  // sender for Comm, variable name for Var and Rec
  std::string to;
  std::vector<GlobalBranch> branches;
  Global body;
};

Global g_end();
Global g_comm(std::string from, std::string to, std::vector<GlobalBranch> branches);
Global g_var(std::string name);
Global g_rec(std::string name, Global body);

Global g_unfold(const Global& g);
Global g_substitute(const Global& g, const std::string& x, const Global& by);
std::set<std::string> g_participants(const Global& g);
std::set<std::string> g_free_vars(const Global& g);

std::optional<Diagnostic> g_well_formed(const Global& g);

std::string to_string(const Global& g);

struct ProjectionError {
  // Labels leading from the root to the failing communication.
  std::vector<std::string> path;
  std::string message;
};

struct MergeResult {
  Type type;  // null when undefined
  ProjectionError error;
  explicit operator bool() const { return type != nullptr; }
};

// Full merging.
MergeResult merge(const Type& t, const Type& u);

struct ProjectResult {
  Type type;
  ProjectionError error;
  explicit operator bool() const { return type != nullptr; }
};

ProjectResult project(const Global& g, const std::string& role);

}  // namespace mpst
