#include "mpst/subtyping.hpp"

#include <climits>
#include <map>
#include <stdexcept>

#include "mpst/relations.hpp"

namespace mpst {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Proven: return "proven";
    case Verdict::Disproven: return "disproven";
    case Verdict::Unknown: return "unknown";
  }
  return "?";
}

namespace {

enum class Outcome { Ok, Fail, Unknown };

struct Step {
  Outcome outcome = Outcome::Ok;
  int dep = INT_MAX;  // lowest stack index of an ancestor assumed to hold
};

class Checker {
 public:
  Checker(const std::set<std::string>& theta, const SubtypeOptions& opts) : theta_(theta), opts_(opts) {}

  Step visit(const Type& t, const Type& u) {
    std::string key = canonical_key(t) + " <: " + canonical_key(u);
    if (proven_.count(key)) return {};
    if (auto it = failed_.find(key); it != failed_.end()) return {it->second, INT_MAX};
    if (auto it = on_stack_.find(key); it != on_stack_.end()) return {Outcome::Ok, it->second};
    if (pairs_ >= opts_.pair_budget) {
      note_failure(t, u, "pair budget exhausted", true);
      return {Outcome::Unknown, INT_MAX};
    }
    ++pairs_;
    int idx = static_cast<int>(path_.size());
    on_stack_.emplace(key, idx);
    path_.push_back(to_string(t) + " <: " + to_string(u));
    std::size_t mark = provisional_.size();
    Step r = clauses(t, u);
    path_.pop_back();
    on_stack_.erase(key);
    if (r.outcome == Outcome::Ok) {
      if (r.dep >= idx) {
        for (std::size_t i = mark; i < provisional_.size(); ++i) proven_.insert(provisional_[i]);
        provisional_.resize(mark);
        proven_.insert(key);
        order_.push_back(to_string(t) + " <: " + to_string(u));
        r.dep = INT_MAX;
      } else {
        provisional_.push_back(key);
      }
    } else {
      provisional_.resize(mark);
      failed_[key] = r.outcome;
    }
    return r;
  }

  int pairs() const { return pairs_; }
  const std::vector<std::string>& failure() const { return failure_; }
  const std::vector<std::string>& order() const { return order_; }

 private:
  void note_failure(const Type& t, const Type& u, const std::string& why, bool unknown) {
    if (!failure_.empty() && !(failure_unknown_ && !unknown)) return;
    failure_ = path_;
    failure_.push_back((unknown ? "cannot decide " : "fails ") + to_string(t) + " <: " + to_string(u) +
                       ": " + why);
    failure_unknown_ = unknown;
  }

  static void combine(Step& acc, const Step& s) {
    if (s.outcome == Outcome::Fail) acc.outcome = Outcome::Fail;
    else if (s.outcome == Outcome::Unknown && acc.outcome == Outcome::Ok) acc.outcome = Outcome::Unknown;
    acc.dep = std::min(acc.dep, s.dep);
  }

  Step fail(const Type& t, const Type& u, const std::string& why) {
    note_failure(t, u, why, false);
    return {Outcome::Fail, INT_MAX};
  }

  Step unknown(const Type& t, const Type& u, const std::string& why) {
    note_failure(t, u, why, true);
    return {Outcome::Unknown, INT_MAX};
  }

  Step reduct_clause(const Type& t, const Type& u, const Type& chooser, const Branch& b, Direction dir,
                     const std::string& peer, bool reduct_on_right) {
    CanonicalReduct r = canonical_reduct(chooser, ReductQuery{dir, peer, b.label, b.payload}, opts_.fuel);
    const char* clause = dir == Direction::Send ? "clause (1)" : "clause (4)";
    std::string msg = std::string(clause) + ": no " + (dir == Direction::Send ? "send" : "receive") +
                      " reduct for " + peer + (dir == Direction::Send ? "!" : "?") + b.label + "(" +
                      ground_name(b.payload) + ")";
    if (!r.derivation) return r.budget_hit ? unknown(t, u, msg + " within fuel") : fail(t, u, msg);
    Step s = reduct_on_right ? visit(b.cont, r.derivation->result) : visit(r.derivation->result, b.cont);
    if (s.outcome == Outcome::Fail && r.budget_hit) s.outcome = Outcome::Unknown;
    return s;
  }

  Step clauses(const Type& t, const Type& u) {
    Type ut = unfold(t);
    Type uu = unfold(u);
    if (ut->kind == TypeKind::Var || uu->kind == TypeKind::Var) {
      if (ut->kind == TypeKind::Var && !theta_.count(ut->name))
        return fail(t, u, "variable " + ut->name + " not in scope");
      if (uu->kind == TypeKind::Var && !theta_.count(uu->name))
        return fail(t, u, "variable " + uu->name + " not in scope");
      if (ut->kind == TypeKind::Var && uu->kind == TypeKind::Var && ut->name == uu->name) return {};
      return fail(t, u, "clause (5): variables must unfold identically");
    }
    Step acc;
    if (ut->kind == TypeKind::External && !recvs(ut->name, u))
      return fail(t, u, "clause (2): supertype need not wait for " + ut->name);
    if (uu->kind == TypeKind::Internal && !sends(uu->name, t))
      return fail(t, u, "clause (3): subtype is not obliged to send to " + uu->name);
    if (ut->kind == TypeKind::Internal) {
      for (const auto& b : ut->branches) {
        combine(acc, reduct_clause(t, u, u, b, Direction::Send, ut->name, true));
        if (acc.outcome == Outcome::Fail) return acc;
      }
    }
    if (uu->kind == TypeKind::External) {
      for (const auto& b : uu->branches) {
        combine(acc, reduct_clause(t, u, t, b, Direction::Recv, uu->name, false));
        if (acc.outcome == Outcome::Fail) return acc;
      }
    }
    return acc;
  }

  std::set<std::string> theta_;
  SubtypeOptions opts_;
  std::set<std::string> proven_;
  std::map<std::string, Outcome> failed_;
  std::map<std::string, int> on_stack_;
  std::vector<std::string> provisional_;
  std::vector<std::string> path_;
  std::vector<std::string> failure_;
  std::vector<std::string> order_;
  bool failure_unknown_ = false;
  int pairs_ = 0;
};

}  // namespace

SubtypeResult subtype(const Type& t, const Type& u, const std::set<std::string>& theta,
                      const SubtypeOptions& opts) {
  Checker c(theta, opts);
  Step s = c.visit(t, u);
  SubtypeResult r;
  r.pairs_explored = c.pairs();
  switch (s.outcome) {
    case Outcome::Ok:
      r.verdict = Verdict::Proven;
      r.explanation = c.order();
      break;
    case Outcome::Fail:
      r.verdict = Verdict::Disproven;
      r.explanation = c.failure();
      break;
    case Outcome::Unknown:
      r.verdict = Verdict::Unknown;
      r.explanation = c.failure();
      break;
  }
  return r;
}

bool is_subtype(const Type& t, const Type& u, const std::set<std::string>& theta, const SubtypeOptions& opts) {
  return subtype(t, u, theta, opts).proven();
}

namespace {

void require_finite(const Type& t) {
  if (t->kind == TypeKind::Rec || t->kind == TypeKind::Var)
    throw std::invalid_argument("decompositions need recursion-free closed types: " + to_string(t));
}

// Splits the choices of kind `split` into single branches and keeps the others whole.
std::vector<Type> decompose(const Type& t, TypeKind split) {
  require_finite(t);
  if (t->kind == TypeKind::End) return {t};
  std::vector<Type> out;
  if (t->kind == split) {
    for (const auto& b : t->branches)
      for (const auto& c : decompose(b.cont, split))
        out.push_back(choice(t->kind, t->name, {{b.label, b.payload, c}}));
    return out;
  }
  std::vector<Branches> acc{Branches{}};
  for (const auto& b : t->branches) {
    auto subs = decompose(b.cont, split);
    std::vector<Branches> next;
    for (const auto& partial : acc)
      for (const auto& c : subs) {
        Branches bs = partial;
        bs.push_back({b.label, b.payload, c});
        next.push_back(std::move(bs));
      }
    acc = std::move(next);
  }
  for (auto& bs : acc) out.push_back(choice(t->kind, t->name, std::move(bs)));
  return out;
}

struct Act {
  std::string peer;
  bool send;
  std::string label;
  Ground payload;
};

std::vector<Act> linearize(const Type& t) {
  std::vector<Act> out;
  Type cur = t;
  while (cur->kind != TypeKind::End) {
    require_finite(cur);
    if (cur->branches.size() != 1) throw std::invalid_argument("not single-input single-output: " + to_string(t));
    const Branch& b = cur->branches.front();
    out.push_back({cur->name, cur->kind == TypeKind::Internal, b.label, b.payload});
    cur = b.cont;
  }
  return out;
}

std::set<Action> acts_of(const std::vector<Act>& xs, std::size_t from) {
  std::set<Action> out;
  for (std::size_t i = from; i < xs.size(); ++i) out.insert({xs[i].peer, xs[i].send});
  return out;
}

bool refine_seq(const std::vector<Act>& t, const std::vector<Act>& u) {
  if (t.empty()) return u.empty();
  const Act& head = t.front();
  std::size_t k = 0;
  for (; k < u.size(); ++k) {
    const Act& a = u[k];
    if (head.send) {
      if (a.send && a.peer == head.peer) break;
    } else {
      if (a.send) return false;  // only receives may precede a reordered receive
      if (a.peer == head.peer) break;
    }
  }
  if (k == u.size()) return false;
  if (u[k].label != head.label || u[k].payload != head.payload) return false;
  std::vector<Act> rest_t(t.begin() + 1, t.end());
  std::vector<Act> rest_u;
  rest_u.reserve(u.size() - 1);
  for (std::size_t i = 0; i < u.size(); ++i)
    if (i != k) rest_u.push_back(u[i]);
  if (k > 0 && acts_of(rest_t, 0) != acts_of(rest_u, 0)) return false;
  return refine_seq(rest_t, rest_u);
}

}  // namespace

std::vector<Type> soset(const Type& t) { return decompose(t, TypeKind::Internal); }
std::vector<Type> siset(const Type& t) { return decompose(t, TypeKind::External); }

std::set<Action> actset(const Type& siso) { return acts_of(linearize(siso), 0); }

bool siso_refines(const Type& t, const Type& u) { return refine_seq(linearize(t), linearize(u)); }

bool siso_subtype_oracle(const Type& t, const Type& u) {
  if (has_rec(t) || has_rec(u) || !is_closed(t) || !is_closed(u))
    throw std::invalid_argument("oracle needs recursion-free closed types");
  for (const auto& t1 : soset(t))
    for (const auto& u1 : siset(u)) {
      bool found = false;
      for (const auto& t2 : siset(t1)) {
        auto lt = linearize(t2);
        for (const auto& u2 : soset(u1))
          if (refine_seq(lt, linearize(u2))) {
            found = true;
            break;
          }
        if (found) break;
      }
      if (!found) return false;
    }
  return true;
}

}  // namespace mpst
