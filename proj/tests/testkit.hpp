#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mpst/configuration.hpp"
#include "mpst/runtime.hpp"
#include "mpst/session_type.hpp"
#include "mpst/syntax.hpp"

namespace mpst::testkit {

using Rng = std::mt19937_64;

struct GenOptions {
  int max_size = 6;  // constructors, counting end, variables and binders
  std::vector<std::string> peers{"p", "q", "r"};
  std::vector<std::string> labels{"a", "b"};
  std::vector<Ground> grounds{Ground::Int, Ground::Bool};
  bool allow_rec = false;
};

Type random_type(Rng& rng, const GenOptions& opts);

// A type near t: a branch dropped or added, a subtree regenerated, or two
// neighbouring single-branch choices swapped.
Type perturb(Rng& rng, const Type& t, const GenOptions& opts);

Value random_value(Rng& rng, Ground g);

// A closed program that follows T, choosing sends at random and handling every
// receive. Recursion becomes a parameterless letrec per binder.
Comp synthesize(Rng& rng, const Type& T, Ground result);

// Messages T could be asked to accept, one probe value per ground.
std::vector<Incoming> offers(const Type& T);

// Laws. Each returns a description of the first violation, if any.
std::optional<std::string> unfold_invariance(const Type& t, const std::vector<std::string>& peers,
                                             const std::vector<std::string>& labels,
                                             const std::vector<Ground>& grounds);
std::optional<std::string> swapping_diamond(const Type& t, const std::vector<std::string>& peers,
                                            const std::vector<std::string>& labels,
                                            const std::vector<Ground>& grounds);
std::optional<std::string> multiplication_compat(const Type& t, const Type& u, const std::vector<std::string>& peers,
                                                 const std::vector<std::string>& labels,
                                                 const std::vector<Ground>& grounds);
std::optional<std::string> monoid_laws(const Type& t, const Type& u, const Type& v);

// Walks `steps` random reductions of c from type T and checks every one-step
// reduct on the way against the type its action calls for.
std::optional<std::string> subject_reduction_walk(Rng& rng, Configuration c, Ground b, Type T, int steps,
                                                  int* checked = nullptr);

// A well-typed configuration together with its type.
struct TypedConfig {
  Configuration config;
  Ground ground;
  Type type;
};

// A program synthesized from a random type, advanced a few random steps so
// that its queues may be nonempty.
std::optional<TypedConfig> random_typed_config(Rng& rng, const GenOptions& opts, int walk);

std::string read_file(const std::string& path);

// Path of a fixture under tests/fixtures/.
std::string example_path(const std::string& name);

}  // namespace mpst::testkit
