#include "mpst/tree.hpp"

#include <functional>
#include <set>
#include <sstream>
#include <tuple>

#include "mpst/relations.hpp"
#include "mpst/runtime.hpp"

namespace mpst {

std::shared_ptr<Suspension> Suspension::ready(Tree t) {
  auto s = std::make_shared<Suspension>(nullptr);
  s->value_ = std::move(t);
  s->done_ = true;
  return s;
}

Tree Suspension::force() const {
  std::lock_guard<std::recursive_mutex> lock(m_);
  if (done_) return value_;
  if (forcing_) throw TreeError("unproductive tree: a subtree depends on itself");
  forcing_ = true;
  try {
    value_ = fn_();
  } catch (...) {
    forcing_ = false;
    throw;
  }
  forcing_ = false;
  done_ = true;
  fn_ = nullptr;
  return value_;
}

Tree ArmFn::at(const Value& v) const {
  std::lock_guard<std::recursive_mutex> lock(m_);
  if (auto it = memo_.find(v); it != memo_.end()) return it->second;
  if (forcing_[v]) throw TreeError("unproductive tree: a receive arm depends on itself");
  forcing_[v] = true;
  Tree r;
  try {
    r = fn_(v);
  } catch (...) {
    forcing_[v] = false;
    throw;
  }
  forcing_[v] = false;
  memo_.emplace(v, r);
  return r;
}

const RecvArm* TreeNode::find_arm(const std::string& label) const {
  for (const auto& a : arms)
    if (a.label == label) return &a;
  return nullptr;
}

Tree TreeNode::arm(const Message& m) const {
  const RecvArm* a = find_arm(m.label);
  if (!a) return nullptr;
  auto g = constant_ground(m.payload);
  if (!g || *g != a->payload) return nullptr;
  return a->cont->at(m.payload);
}

Tree t_ret(Value v) {
  auto n = std::make_shared<TreeNode>();
  n->kind = TreeNode::Kind::Ret;
  n->result = std::move(v);
  return n;
}

Tree t_send(std::string peer, Message m, Tree next) {
  auto n = std::make_shared<TreeNode>();
  n->kind = TreeNode::Kind::Send;
  n->peer = std::move(peer);
  n->msg = std::move(m);
  n->next = Suspension::ready(std::move(next));
  return n;
}

Tree t_send_lazy(std::string peer, Message m, std::function<Tree()> next) {
  auto n = std::make_shared<TreeNode>();
  n->kind = TreeNode::Kind::Send;
  n->peer = std::move(peer);
  n->msg = std::move(m);
  n->next = std::make_shared<Suspension>(std::move(next));
  return n;
}

Tree t_recv(std::string peer, std::vector<RecvArm> arms) {
  auto n = std::make_shared<TreeNode>();
  n->kind = TreeNode::Kind::Recv;
  n->peer = std::move(peer);
  n->arms = std::move(arms);
  return n;
}

RecvArm make_arm(std::string label, Ground payload, std::function<Tree(const Value&)> f) {
  return RecvArm{std::move(label), payload, std::make_shared<ArmFn>(std::move(f))};
}

std::optional<std::pair<Message, Tree>> tree_send_to(const Tree& t, const std::string& p, int fuel) {
  if (!t || t->kind != TreeNode::Kind::Send) return std::nullopt;
  if (t->peer == p) return std::make_pair(t->msg, t->cont());
  if (fuel <= 0) return std::nullopt;
  auto inner = tree_send_to(t->cont(), p, fuel - 1);
  if (!inner) return std::nullopt;
  return std::make_pair(inner->first, t_send(t->peer, t->msg, inner->second));
}

namespace {

Tree recv_step(const Tree& t, const std::string& p, const Message& m, int fuel) {
  switch (t->kind) {
    case TreeNode::Kind::Ret: return nullptr;
    case TreeNode::Kind::Send: {
      if (fuel <= 0) return nullptr;
      Tree u = recv_step(t->cont(), p, m, fuel - 1);
      if (!u) return nullptr;
      return t_send(t->peer, t->msg, u);
    }
    case TreeNode::Kind::Recv: {
      if (t->peer == p) return t->arm(m);
      if (fuel <= 0) return nullptr;
      std::vector<RecvArm> arms;
      for (const auto& a : t->arms) {
        auto cont = a.cont;
        arms.push_back(make_arm(a.label, a.payload, [cont, p, m, fuel](const Value& v) -> Tree {
          Tree sub = cont->at(v);
          if (!sub) return nullptr;
          return recv_step(sub, p, m, fuel - 1);
        }));
      }
      return t_recv(t->peer, std::move(arms));
    }
  }
  return nullptr;
}

}  // namespace

std::vector<Tree> tree_step(const Tree& t, const TreeAction& a, int fuel) {
  if (!t) return {};
  if (a.dir == TreeAction::Dir::Send) {
    auto s = tree_send_to(t, a.peer, fuel);
    if (!s || !(s->first == a.msg)) return {};
    return {s->second};
  }
  Tree u = recv_step(t, a.peer, a.msg, fuel);
  if (!u) return {};
  return {u};
}

Tree tree_bind(const Tree& t, std::function<Tree(const Value&)> f) {
  switch (t->kind) {
    case TreeNode::Kind::Ret: return f(t->result);
    case TreeNode::Kind::Send: {
      auto next = t->next;
      return t_send_lazy(t->peer, t->msg, [next, f] { return tree_bind(next->force(), f); });
    }
    case TreeNode::Kind::Recv: {
      std::vector<RecvArm> arms;
      for (const auto& a : t->arms) {
        auto cont = a.cont;
        arms.push_back(make_arm(a.label, a.payload, [cont, f](const Value& v) -> Tree {
          Tree sub = cont->at(v);
          if (!sub) return nullptr;
          return tree_bind(sub, f);
        }));
      }
      return t_recv(t->peer, std::move(arms));
    }
  }
  return nullptr;
}

Tree normalize(const Type& T, const Tree& t, int fuel) {
  if (!t) throw TreeError("no tree to normalize at " + to_string(T));
  Type u = unfold(T);
  switch (u->kind) {
    case TypeKind::End:
      if (t->kind != TreeNode::Kind::Ret) throw TreeError("expected a result at type end");
      return t;
    case TypeKind::Var:
    case TypeKind::Rec:
      throw TreeError("normal forms need a closed type, got " + to_string(T));
    case TypeKind::Internal: {
      if (t->kind == TreeNode::Kind::Send && t->peer == u->name) {
        const Branch* b = u->find(t->msg.label);
        auto g = constant_ground(t->msg.payload);
        if (!b || !g || b->payload != *g)
          throw TreeError("message " + to_string(t->msg) + " to " + u->name + " is not allowed by " + to_string(T));
        Type cont = b->cont;
        auto next = t->next;
        return t_send_lazy(u->name, t->msg, [cont, next, fuel] { return normalize(cont, next->force(), fuel); });
      }
      auto s = tree_send_to(t, u->name, fuel);
      if (!s) throw TreeError("no send to " + u->name + " within fuel at " + to_string(T));
      const Branch* b = u->find(s->first.label);
      auto g = constant_ground(s->first.payload);
      if (!b || !g || b->payload != *g)
        throw TreeError("message " + to_string(s->first) + " to " + u->name + " is not allowed by " + to_string(T));
      Type cont = b->cont;
      Tree rest = s->second;
      return t_send_lazy(u->name, s->first, [cont, rest, fuel] { return normalize(cont, rest, fuel); });
    }
    case TypeKind::External: {
      std::vector<RecvArm> arms;
      std::string p = u->name;
      for (const auto& b : u->branches) {
        Type cont = b.cont;
        std::string label = b.label;
        arms.push_back(make_arm(b.label, b.payload, [t, p, label, cont, fuel](const Value& v) -> Tree {
          Message m{label, v};
          auto r = tree_step(t, TreeAction::recv(p, m), fuel);
          if (r.empty()) throw TreeError("tree cannot receive " + to_string(m) + " from " + p);
          return normalize(cont, r.front(), fuel);
        }));
      }
      return t_recv(p, std::move(arms));
    }
  }
  return nullptr;
}

std::vector<Value> probe_values(Ground g, const ProbeConfig& probes) {
  switch (g) {
    case Ground::Unit: return {Value::unit()};
    case Ground::Bool: return {Value::boolean(false), Value::boolean(true)};
    case Ground::Int: {
      std::vector<Value> out;
      for (auto i : probes.int_probes) out.push_back(Value::integer(i));
      return out;
    }
  }
  return {};
}

namespace {

class TypedCheck {
 public:
  TypedCheck(const ProbeConfig& probes, int fuel) : probes_(probes), fuel_(fuel) {}

  bool run(const Tree& t, const Type& T, int depth) {
    if (depth <= 0) return true;
    std::ostringstream key;
    key << t.get() << '|' << canonical_key(T) << '|' << depth;
    if (auto it = memo_.find(key.str()); it != memo_.end()) return it->second;
    keep_.push_back(t);
    memo_[key.str()] = true;
    bool ok = check(t, T, depth);
    memo_[key.str()] = ok;
    return ok;
  }

 private:
  bool check(const Tree& t, const Type& T, int depth) {
    if (t->kind == TreeNode::Kind::Send) {
      auto g = constant_ground(t->msg.payload);
      CanonicalReduct r = canonical_reduct(T, {Direction::Send, t->peer, t->msg.label, *g}, fuel_);
      if (!r.derivation) return false;
      if (!run(t->cont(), r.derivation->result, depth - 1)) return false;
    }
    if (t->kind == TreeNode::Kind::Recv && !recvs(t->peer, T)) return false;
    Type u = unfold(T);
    if (u->kind == TypeKind::End && t->kind != TreeNode::Kind::Ret) {
      // Clauses (1) and (2) already rule out sends and receives at end.
      return false;
    }
    if (u->kind == TypeKind::Internal && !tree_send_to(t, u->name, fuel_)) return false;
    if (u->kind == TypeKind::External) {
      for (const auto& b : u->branches)
        for (const auto& v : probe_values(b.payload, probes_)) {
          auto r = tree_step(t, TreeAction::recv(u->name, Message{b.label, v}), fuel_);
          if (r.empty()) return false;
          if (!run(r.front(), b.cont, depth - 1)) return false;
        }
    }
    return true;
  }

  static constexpr int kFreeTaus = 4;
  ProbeConfig probes_;
  int fuel_;
  std::map<std::string, bool> memo_;
  std::vector<Tree> keep_;
};

bool equal_at(const Tree& t, const Tree& u, const ProbeConfig& probes, int depth) {
  if (depth <= 0) return true;
  if (t == u) return true;
  if (!t || !u) return false;
  if (t->kind != u->kind) return false;
  switch (t->kind) {
    case TreeNode::Kind::Ret: return t->result == u->result;
    case TreeNode::Kind::Send:
      return t->peer == u->peer && t->msg == u->msg && equal_at(t->cont(), u->cont(), probes, depth - 1);
    case TreeNode::Kind::Recv: {
      if (t->peer != u->peer || t->arms.size() != u->arms.size()) return false;
      for (const auto& a : t->arms) {
        const RecvArm* b = u->find_arm(a.label);
        if (!b || b->payload != a.payload) return false;
        for (const auto& v : probe_values(a.payload, probes))
          if (!equal_at(a.cont->at(v), b->cont->at(v), probes, depth - 1)) return false;
      }
      return true;
    }
  }
  return false;
}

void print(std::ostream& os, const Tree& t, const ProbeConfig& probes, int depth) {
  if (depth <= 0) {
    os << "...";
    return;
  }
  switch (t->kind) {
    case TreeNode::Kind::Ret: os << "ret " << to_string(t->result); return;
    case TreeNode::Kind::Send:
      os << "send " << t->peer << " " << to_string(t->msg) << ". ";
      print(os, t->cont(), probes, depth - 1);
      return;
    case TreeNode::Kind::Recv: {
      os << "recv " << t->peer << " {";
      bool first = true;
      for (const auto& a : t->arms)
        for (const auto& v : probe_values(a.payload, probes)) {
          Tree sub;
          std::string err;
          try {
            sub = a.cont->at(v);
          } catch (const TreeError& e) {
            err = e.what();
          }
          if (!sub && err.empty()) continue;
          os << (first ? "" : ", ") << a.label << "(" << to_string(v) << ") -> ";
          first = false;
          if (sub) print(os, sub, probes, depth - 1);
          else os << "<error: " << err << ">";
        }
      os << "}";
      return;
    }
  }
}

}  // namespace

bool tree_typed_bounded(const Tree& t, const Type& T, const ProbeConfig& probes, int fuel) {
  try {
    TypedCheck c(probes, fuel);
    return c.run(t, T, probes.depth);
  } catch (const TreeError&) {
    return false;
  }
}

bool tree_equal(const Tree& t, const Tree& u, const ProbeConfig& probes) {
  try {
    return equal_at(t, u, probes, probes.depth);
  } catch (const TreeError&) {
    return false;
  }
}

std::string tree_to_string(const Tree& t, const ProbeConfig& probes) {
  std::ostringstream os;
  try {
    print(os, t, probes, probes.depth);
  } catch (const TreeError& e) {
    os << "<error: " << e.what() << ">";
  }
  return os.str();
}

namespace {

struct RecvTriple {
  std::string peer;
  std::string label;
  Ground payload;
  bool operator<(const RecvTriple& o) const {
    return std::tie(peer, label, payload) < std::tie(o.peer, o.label, o.payload);
  }
};

void collect(const Type& t, std::set<std::string>& send_peers, std::set<RecvTriple>& recv_triples) {
  switch (t->kind) {
    case TypeKind::End:
    case TypeKind::Var: return;
    case TypeKind::Rec: collect(t->body, send_peers, recv_triples); return;
    case TypeKind::Internal:
    case TypeKind::External:
      if (t->kind == TypeKind::Internal) send_peers.insert(t->name);
      for (const auto& b : t->branches) {
        if (t->kind == TypeKind::External) recv_triples.insert({t->name, b.label, b.payload});
        collect(b.cont, send_peers, recv_triples);
      }
      return;
  }
}

class Bisim {
 public:
  Bisim(const ProbeConfig& probes, int fuel) : probes_(probes), fuel_(fuel) {}

  // A few consecutive tau steps are free; longer tau chains spend depth.
  bool rel(const BisimState& a, const BisimState& b, const Type& S, int depth) { return rel(a, b, S, depth, kFreeTaus); }

  bool rel(const BisimState& a, const BisimState& b, const Type& S, int depth, int taus) {
    if (taus <= 0) {
      --depth;
      taus = kFreeTaus;
    }
    if (depth <= 0) return true;
    std::string k = key(a) + " ~ " + key(b) + " @ " + canonical_key(S) + " / " + std::to_string(depth) + "." +
                    std::to_string(taus);
    if (auto it = memo_.find(k); it != memo_.end()) return it->second;
    memo_[k] = true;  // revisits are assumed to hold
    bool ok = half(a, b, S, depth, taus, false) && half(b, a, S, depth, taus, true);
    memo_[k] = ok;
    return ok;
  }

 private:
  std::string key(const BisimState& s) {
    if (auto c = std::get_if<Configuration>(&s)) return "C" + to_string(*c);
    const Tree& t = std::get<Tree>(s);
    keep_.push_back(t);
    std::ostringstream os;
    os << "T" << t.get();
    return os.str();
  }

  const std::vector<ConfigStep>& steps_of(const Configuration& c) {
    std::string k = to_string(c);
    auto it = step_cache_.find(k);
    if (it == step_cache_.end()) it = step_cache_.emplace(std::move(k), step_configuration(c)).first;
    return it->second;
  }

  std::vector<BisimState> tau_succ(const BisimState& s) {
    std::vector<BisimState> out;
    if (auto c = std::get_if<Configuration>(&s))
      for (const auto& st : steps_of(*c))
        if (st.action.kind == LocalAction::Kind::Tau) out.emplace_back(st.next);
    return out;
  }

  // Tau closure in breadth-first order, expanded only as far as a search needs.
  class Closure {
   public:
    Closure(Bisim& owner, const BisimState& s) : owner_(owner), out_{s}, seen_{owner.key(s)} {}

    bool exists(const std::function<bool(const BisimState&)>& pred) {
      for (std::size_t j = 0;; ++j) {
        while (j >= out_.size() && expand()) {
        }
        if (j >= out_.size()) return false;
        if (pred(out_[j])) return true;
      }
    }

   private:
    bool expand() {
      std::size_t limit = static_cast<std::size_t>(2 * owner_.fuel_);
      if (next_ >= out_.size() || out_.size() >= limit) return false;
      for (auto& n : owner_.tau_succ(out_[next_++]))
        if (seen_.insert(owner_.key(n)).second) out_.push_back(std::move(n));
      return true;
    }

    Bisim& owner_;
    std::vector<BisimState> out_;
    std::set<std::string> seen_;
    std::size_t next_ = 0;
  };

  std::optional<Value> result_of(const BisimState& s) {
    if (auto c = std::get_if<Configuration>(&s)) return result(*c);
    const Tree& t = std::get<Tree>(s);
    if (t->kind == TreeNode::Kind::Ret) return t->result;
    return std::nullopt;
  }

  std::vector<std::pair<Message, BisimState>> sends_to(const BisimState& s, const std::string& p) {
    std::vector<std::pair<Message, BisimState>> out;
    if (auto c = std::get_if<Configuration>(&s)) {
      for (const auto& st : steps_of(*c))
        if (st.action.kind == LocalAction::Kind::Send && st.action.peer == p) out.emplace_back(st.action.msg, st.next);
      return out;
    }
    const Tree& t = std::get<Tree>(s);
    std::string k = key(s) + "!" + p;
    auto it = send_cache_.find(k);
    if (it == send_cache_.end()) it = send_cache_.emplace(k, tree_send_to(t, p, fuel_)).first;
    if (it->second) out.emplace_back(it->second->first, it->second->second);
    return out;
  }

  std::vector<BisimState> recv_by(const BisimState& s, const std::string& p, const Message& m) {
    std::vector<BisimState> out;
    if (auto c = std::get_if<Configuration>(&s)) {
      for (auto& st : step_configuration(*c, Incoming{p, m}))
        if (st.action.kind == LocalAction::Kind::Recv) out.emplace_back(std::move(st.next));
      return out;
    }
    std::string k = key(s) + "?" + p + ":" + to_string(m);
    auto it = recv_cache_.find(k);
    if (it == recv_cache_.end())
      it = recv_cache_.emplace(k, tree_step(std::get<Tree>(s), TreeAction::recv(p, m), fuel_)).first;
    for (const auto& t : it->second) out.emplace_back(t);
    return out;
  }

  bool half(const BisimState& a, const BisimState& b, const Type& S, int depth, int taus, bool flipped) {
    auto relate = [&](const BisimState& x, const BisimState& y, const Type& T, int d, int n) {
      return flipped ? rel(y, x, T, d, n) : rel(x, y, T, d, n);
    };
    Closure b_closure(*this, b);

    // Configuration tau steps are inert, so the idle move of b answers them.
    for (const auto& t : tau_succ(a))
      if (!relate(t, b, S, depth, taus - 1)) return false;

    if (unfold(S)->kind == TypeKind::End) {
      if (auto x = result_of(a)) {
        if (!b_closure.exists([&](const BisimState& t2) {
              auto y = result_of(t2);
              return y && *y == *x;
            }))
          return false;
      }
    }

    std::set<std::string> send_peers;
    std::set<RecvTriple> triples;
    collect(S, send_peers, triples);

    for (const auto& p : send_peers) {
      if (!sends(p, S)) continue;
      for (const auto& [m, t] : sends_to(a, p)) {
        auto g = constant_ground(m.payload);
        CanonicalReduct r = canonical_reduct(S, {Direction::Send, p, m.label, *g}, fuel_);
        if (!r.derivation) return false;
        const Type& T = r.derivation->result;
        if (!b_closure.exists([&](const BisimState& b1) {
              for (const auto& [m2, t2] : sends_to(b1, p))
                if (m2 == m && relate(t, t2, T, depth - 1, kFreeTaus)) return true;
              return false;
            }))
          return false;
      }
    }

    for (const auto& tr : triples) {
      CanonicalReduct r = canonical_reduct(S, {Direction::Recv, tr.peer, tr.label, tr.payload}, fuel_);
      if (!r.derivation) continue;
      const Type& T = r.derivation->result;
      for (const auto& v : probe_values(tr.payload, probes_)) {
        Message m{tr.label, v};
        for (const auto& t : recv_by(a, tr.peer, m)) {
          if (!b_closure.exists([&](const BisimState& b1) {
                for (const auto& t2 : recv_by(b1, tr.peer, m))
                  if (relate(t, t2, T, depth - 1, kFreeTaus)) return true;
                return false;
              }))
            return false;
        }
      }
    }
    return true;
  }

  static constexpr int kFreeTaus = 4;
  ProbeConfig probes_;
  int fuel_;
  std::map<std::string, bool> memo_;
  std::map<std::string, std::optional<std::pair<Message, Tree>>> send_cache_;
  std::map<std::string, std::vector<Tree>> recv_cache_;
  std::map<std::string, std::vector<ConfigStep>> step_cache_;
  std::vector<Tree> keep_;
};

}  // namespace

bool bisim_bounded(const BisimState& s1, const BisimState& s2, const Type& S, const ProbeConfig& probes, int fuel) {
  try {
    Bisim b(probes, fuel);
    return b.rel(s1, s2, S, probes.depth);
  } catch (const TreeError&) {
    return false;
  }
}

}  // namespace mpst
