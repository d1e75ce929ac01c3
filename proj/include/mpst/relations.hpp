#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mpst/session_type.hpp"

namespace mpst {

enum class Direction { Send, Recv };

enum class ReductRule { Base, Oplus, Amp, Rec };

const char* rule_name(ReductRule r);

struct ReductDerivation;
using Derivation = std::shared_ptr<const ReductDerivation>;

struct ReductDerivation {
  ReductRule rule = ReductRule::Base;
  Type source;
  // Labels of the branches kept by an oplus/amp step, in source order.
  std::vector<std::string> index_set;
  std::vector<Derivation> subs;
  Type result;
  int height = 0;
};

struct ReductQuery {
  Direction dir = Direction::Send;
  std::string peer;
  std::string label;
  Ground payload = Ground::Unit;
};

struct CanonicalReduct {
  Derivation derivation;  // null when no derivation fits in the budget
  // Set when some sub-search was cut short by the budget, so a larger budget
  // might produce a derivation or a better reduct.
  bool budget_hit = false;
};

// The canonical reduct for derivations of height at most `budget`: every
// oplus (send) / amp (receive) step keeps the largest feasible branch set.
CanonicalReduct canonical_reduct(const Type& t, const ReductQuery& q, int budget);

// Canonical reducts for every budget 0..fuel, deduplicated up to alpha-equivalence.
std::vector<std::pair<Type, Derivation>> send_reducts(const Type& t, const std::string& p,
                                                      const std::string& l, Ground b, int fuel);
std::vector<std::pair<Type, Derivation>> recv_reducts(const Type& t, const std::string& p,
                                                      const std::string& l, Ground b, int fuel);

bool sends(const std::string& p, const Type& t);
bool recvs(const std::string& p, const Type& t);

struct PrefixBranch {
  Ground payload;
  Type cont;
};
using PrefixFamily = std::vector<std::pair<std::string, PrefixBranch>>;

// Branch family extracted through the prefix relation: the messages from p
// that t must accept (recv_prefix) or may be forced to send (send_prefix).
std::optional<PrefixFamily> recv_prefix(const Type& t, const std::string& p);
std::optional<PrefixFamily> send_prefix(const Type& t, const std::string& p);

// Rebuilds `&p{...}` / `+p{...}` from a prefix family.
Type family_type(Direction dir, const std::string& p, const PrefixFamily& family);

std::string derivation_to_string(const Derivation& d);

}  // namespace mpst
