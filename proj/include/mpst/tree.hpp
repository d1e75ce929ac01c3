#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mpst/configuration.hpp"
#include "mpst/session_type.hpp"

namespace mpst {

struct TreeNode;
using Tree = std::shared_ptr<const TreeNode>;

class TreeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A memoized thunk. Forcing is idempotent and thread-safe; forcing a
// suspension from inside its own computation throws TreeError.
class Suspension {
 public:
  explicit Suspension(std::function<Tree()> f) : fn_(std::move(f)) {}
  static std::shared_ptr<Suspension> ready(Tree t);

  Tree force() const;

 private:
  mutable std::recursive_mutex m_;
  mutable std::function<Tree()> fn_;
  mutable Tree value_;
  mutable bool done_ = false;
  mutable bool forcing_ = false;
};

// Continuation of a receive arm. Returns null for payloads the node does not accept.
class ArmFn {
 public:
  explicit ArmFn(std::function<Tree(const Value&)> f) : fn_(std::move(f)) {}

  Tree at(const Value& v) const;

 private:
  mutable std::recursive_mutex m_;
  std::function<Tree(const Value&)> fn_;
  mutable std::map<Value, Tree> memo_;
  mutable std::map<Value, bool> forcing_;
};

struct RecvArm {
  std::string label;
  Ground payload = Ground::Unit;
  std::shared_ptr<const ArmFn> cont;
};

struct TreeNode {
  enum class Kind { Ret, Send, Recv } kind = Kind::Ret;
  Value result;      // Ret
  std::string peer;  // Send, Recv
  Message msg;       // Send
  std::shared_ptr<const Suspension> next;  // Send
  std::vector<RecvArm> arms;               // Recv

  Tree cont() const { return next->force(); }
  const RecvArm* find_arm(const std::string& label) const;
  // Subtree after receiving m, or null when m is not accepted.
  Tree arm(const Message& m) const;
};

Tree t_ret(Value v);
Tree t_send(std::string peer, Message m, Tree next);
Tree t_send_lazy(std::string peer, Message m, std::function<Tree()> next);
Tree t_recv(std::string peer, std::vector<RecvArm> arms);
RecvArm make_arm(std::string label, Ground payload, std::function<Tree(const Value&)> f);

// Visible actions only; trees have no silent steps.
struct TreeAction {
  enum class Dir { Send, Recv } dir = Dir::Send;
  std::string peer;
  Message msg;

  static TreeAction send(std::string p, Message m) { return {Dir::Send, std::move(p), std::move(m)}; }
  static TreeAction recv(std::string p, Message m) { return {Dir::Recv, std::move(p), std::move(m)}; }
};

// Reducts whose derivation has height at most fuel. Receives under a receive
// from another participant keep every branch that can take the step.
std::vector<Tree> tree_step(const Tree& t, const TreeAction& a, int fuel = 16);

// The message t can send to p, found along its chain of sends, with the reduct.
std::optional<std::pair<Message, Tree>> tree_send_to(const Tree& t, const std::string& p, int fuel = 16);

Tree tree_bind(const Tree& t, std::function<Tree(const Value&)> f);

// Normal form at T. Subtrees are built on demand; a missing send or receive
// surfaces as TreeError when the offending subtree is forced.
Tree normalize(const Type& T, const Tree& t, int fuel = 16);

struct ProbeConfig {
  int depth = 6;
  std::vector<std::int64_t> int_probes{-1, 0, 1, 2};
};

std::vector<Value> probe_values(Ground g, const ProbeConfig& probes);

bool tree_typed_bounded(const Tree& t, const Type& T, const ProbeConfig& probes = {}, int fuel = 16);

bool tree_equal(const Tree& t, const Tree& u, const ProbeConfig& probes = {});

// Bracketed text form, cut off at probes.depth.
std::string tree_to_string(const Tree& t, const ProbeConfig& probes = {});

using BisimState = std::variant<Configuration, Tree>;

bool bisim_bounded(const BisimState& s1, const BisimState& s2, const Type& S, const ProbeConfig& probes = {},
                   int fuel = 16);

}  // namespace mpst
