#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mpst/configuration.hpp"
#include "mpst/relations.hpp"
#include "mpst/tree.hpp"
#include "mpst/typing.hpp"

namespace mpst {

struct Closure;

struct Environments {
  std::map<std::string, Value> gamma;
  std::map<std::string, std::shared_ptr<const Closure>> phi;
  std::map<std::string, Type> theta;  // closed types
};

// A letrec definition together with the environments it was declared in.
struct Closure {
  Comp node;
  Environments env;  // does not contain the closure itself
  std::shared_ptr<const GradeLog> log;
};

class DenotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DenoteOptions {
  int fuel = 16;
  SubtypeOptions subtyping;
};

// Normal form of a closed computation at its inferred grade. Throws
// DenotationError when the computation does not type-check.
Tree denote_computation(const Comp& t, const DenoteOptions& opts = {});

// Interpretation under explicit environments, following the grades in `log`.
Tree denote_in(const Environments& env, const Comp& t, const std::shared_ptr<const GradeLog>& log,
               const DenoteOptions& opts = {});

// The tree at `derivation.source` that sends `msg` to `peer` and continues as `inner`.
Tree inject_send(const Derivation& derivation, const std::string& peer, const Message& msg, const Tree& inner);

Tree denote_configuration(const Configuration& c, Ground b, const Type& T, const DenoteOptions& opts = {});

struct Adequacy {
  bool equal_denotations = false;
  bool bisimilar = false;
  bool consistent = false;
};

Adequacy adequacy_check(const Configuration& c1, const Configuration& c2, Ground b, const Type& T,
                        const ProbeConfig& probes = {}, const DenoteOptions& opts = {});

}  // namespace mpst
