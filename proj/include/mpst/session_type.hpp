#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace mpst {

enum class Ground { Unit, Bool, Int };

const char* ground_name(Ground g);
std::optional<Ground> ground_from_name(const std::string& s);

struct SessionType;
using Type = std::shared_ptr<const SessionType>;

struct Branch {
  std::string label;
  Ground payload;
  Type cont;
};

// Branches keep the order in which they were written, for printing only.
// Lookups, equality and canonical keys ignore the order.
using Branches = std::vector<Branch>;

enum class TypeKind { End, Internal, External, Var, Rec };

struct SessionType {
  TypeKind kind = TypeKind::End;
  // Peer participant for choices, variable name for Var and Rec.
  std::string name;
  Branches branches;
  Type body;

  bool is_choice() const { return kind == TypeKind::Internal || kind == TypeKind::External; }
  const Branch* find(const std::string& label) const;
};

Type end_type();
Type internal(std::string peer, Branches branches);
Type external(std::string peer, Branches branches);
Type choice(TypeKind kind, std::string peer, Branches branches);
Type var(std::string name);
Type rec(std::string name, Type body);

// Single-step unfolding: unfold(rec X.T) = unfold(T){X -> rec X.T}.
Type unfold(const Type& t);

// Replaces a rec binder by its body with the binder substituted (one rule application).
Type unroll_once(const Type& t);

Type substitute(const Type& t, const std::map<std::string, Type>& bindings);

// Sequencing: replaces every end in t by u.
Type multiply(const Type& t, const Type& u);

std::set<std::string> free_vars(const Type& t);
bool is_closed(const Type& t);
bool has_rec(const Type& t);
std::size_t type_size(const Type& t);

struct Diagnostic {
  std::string rule;
  std::string message;
  std::string subterm;
};

std::optional<Diagnostic> well_formed(const Type& t, const std::set<std::string>& theta);

// Alpha-invariant key: binders numbered by depth, labels sorted.
std::string canonical_key(const Type& t);
bool alpha_equal(const Type& a, const Type& b);

std::string to_string(const Type& t);

// Returns a name based on `base` that is not in `avoid`, by appending primes.
std::string fresh_name(const std::string& base, const std::set<std::string>& avoid);

}  // namespace mpst
