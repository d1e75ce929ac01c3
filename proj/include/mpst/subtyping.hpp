#pragma once

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mpst/session_type.hpp"

namespace mpst {

enum class Verdict { Proven, Disproven, Unknown };

const char* verdict_name(Verdict v);

struct SubtypeOptions {
  int fuel = 16;         // height bound for reduct searches
  int pair_budget = 512;  // bound on distinct pairs explored
};

struct SubtypeResult {
  Verdict verdict = Verdict::Unknown;
  // Proven: the explored pairs, which close up to revisits.
  // Otherwise: the path of pairs leading to the failing clause.
  std::vector<std::string> explanation;
  int pairs_explored = 0;

  bool proven() const { return verdict == Verdict::Proven; }
};

SubtypeResult subtype(const Type& t, const Type& u, const std::set<std::string>& theta = {},
                      const SubtypeOptions& opts = {});

bool is_subtype(const Type& t, const Type& u, const std::set<std::string>& theta = {},
                const SubtypeOptions& opts = {});

// Decompositions of recursion-free types into single-input / single-output shapes.
std::vector<Type> soset(const Type& t);
std::vector<Type> siset(const Type& t);

struct Action {
  std::string peer;
  bool send;
  bool operator<(const Action& o) const { return std::tie(peer, send) < std::tie(o.peer, o.send); }
  bool operator==(const Action& o) const { return peer == o.peer && send == o.send; }
};
std::set<Action> actset(const Type& siso);

// Refinement between single-input single-output recursion-free types.
bool siso_refines(const Type& t, const Type& u);

// Brute-force subtyping through decompositions and refinement. Throws
// std::invalid_argument on input containing recursion or variables.
bool siso_subtype_oracle(const Type& t, const Type& u);

}  // namespace mpst
