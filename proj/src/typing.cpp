#include "mpst/typing.hpp"

#include <sstream>
#include <stdexcept>

namespace mpst {

std::optional<Ground> type_value(const std::map<std::string, Ground>& gamma, const Value& v) {
  if (v.kind != Value::Kind::Var) return constant_ground(v);
  auto it = gamma.find(v.name);
  if (it == gamma.end()) return std::nullopt;
  return it->second;
}

namespace {

struct TypeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string where(const Comp& c) {
  if (c->pos.line == 0) return "";
  return " at " + std::to_string(c->pos.line) + ":" + std::to_string(c->pos.col);
}

std::string verdict_hint(const SubtypeResult& r) {
  if (r.verdict == Verdict::Unknown) return "cannot prove; raise --fuel";
  std::string s = "not a subtype";
  if (!r.explanation.empty()) s += " (" + r.explanation.back() + ")";
  return s;
}

// Least upper bound candidate built structurally: internal choices take the
// union of their labels, external choices the intersection.
std::optional<Type> upper_union(const Type& a, const Type& b) {
  if (alpha_equal(a, b)) return a;
  Type ua = unfold(a), ub = unfold(b);
  if (!ua->is_choice() || ua->kind != ub->kind || ua->name != ub->name) return std::nullopt;
  Branches bs;
  for (const auto& x : ua->branches) {
    const Branch* y = ub->find(x.label);
    if (!y) {
      if (ua->kind == TypeKind::Internal) bs.push_back(x);
      continue;
    }
    if (x.payload != y->payload) return std::nullopt;
    auto c = upper_union(x.cont, y->cont);
    if (!c) return std::nullopt;
    bs.push_back({x.label, x.payload, *c});
  }
  if (ua->kind == TypeKind::Internal)
    for (const auto& y : ub->branches)
      if (!ua->find(y.label)) bs.push_back(y);
  if (bs.empty()) return std::nullopt;
  return choice(ua->kind, ua->name, std::move(bs));
}

class Inferrer {
 public:
  Inferrer(const SubtypeOptions& opts, GradeLog* log) : opts_(opts), log_(log) {}

  NodeGrade infer(const TypingContext& ctx, const Comp& c) {
    NodeGrade g = infer_node(ctx, c);
    if (log_) (*log_)[c.get()] = g;
    return g;
  }

 private:
  Ground value(const TypingContext& ctx, const Value& v, const Comp& at) {
    auto g = type_value(ctx.gamma, v);
    if (!g) throw TypeError("unbound variable " + v.name + where(at));
    return *g;
  }

  void expect(Ground got, Ground want, const std::string& what, const Comp& at) {
    if (got != want)
      throw TypeError(what + " has type " + ground_name(got) + " but " + ground_name(want) + " is required" +
                      where(at));
  }

  Type join(const TypingContext& ctx, const Type& a, const Type& b, const Comp& at) {
    if (alpha_equal(a, b)) return a;
    if (is_subtype(a, b, ctx.theta, opts_)) return b;
    if (is_subtype(b, a, ctx.theta, opts_)) return a;
    if (auto u = upper_union(a, b))
      if (is_subtype(a, *u, ctx.theta, opts_) && is_subtype(b, *u, ctx.theta, opts_)) return *u;
    throw TypeError("branches of the conditional" + where(at) + " have incompatible grades " + to_string(a) +
                    " and " + to_string(b) + "; add an ascription");
  }

  NodeGrade infer_node(const TypingContext& ctx, const Comp& c) {
    NodeGrade out;
    switch (c->kind) {
      case CompKind::Return:
        out.ground = value(ctx, c->vals[0], c);
        out.grade = end_type();
        return out;
      case CompKind::Let: {
        NodeGrade a = infer(ctx, c->first);
        TypingContext inner = ctx;
        inner.gamma[c->name] = a.ground;
        NodeGrade b = infer(inner, c->second);
        out.ground = b.ground;
        out.grade = multiply(a.grade, b.grade);
        return out;
      }
      case CompKind::Add:
      case CompKind::Sub:
      case CompKind::Less:
        expect(value(ctx, c->vals[0], c), Ground::Int, "operand " + to_string(c->vals[0]), c);
        expect(value(ctx, c->vals[1], c), Ground::Int, "operand " + to_string(c->vals[1]), c);
        out.ground = c->kind == CompKind::Less ? Ground::Bool : Ground::Int;
        out.grade = end_type();
        return out;
      case CompKind::If: {
        expect(value(ctx, c->vals[0], c), Ground::Bool, "condition " + to_string(c->vals[0]), c);
        NodeGrade a = infer(ctx, c->first);
        NodeGrade b = infer(ctx, c->second);
        expect(b.ground, a.ground, "else branch", c);
        out.ground = a.ground;
        out.grade = join(ctx, a.grade, b.grade, c);
        return out;
      }
      case CompKind::Send: {
        Ground g = value(ctx, c->vals[0], c);
        NodeGrade k = infer(ctx, c->first);
        out.ground = k.ground;
        out.grade = internal(c->peer, {{c->name, g, k.grade}});
        return out;
      }
      case CompKind::Recv: {
        Branches bs;
        std::optional<Ground> result;
        for (const auto& a : c->arms) {
          TypingContext inner = ctx;
          inner.gamma[a.binder] = a.payload;
          NodeGrade k = infer(inner, a.body);
          if (result) expect(k.ground, *result, "arm " + a.label, c);
          result = k.ground;
          bs.push_back({a.label, a.payload, k.grade});
        }
        if (bs.empty()) throw TypeError("receive without arms" + where(c));
        out.ground = *result;
        out.grade = external(c->peer, std::move(bs));
        return out;
      }
      case CompKind::LetRec: {
        std::string x;
        if (c->grade) {
          x = c->grade->var;
        } else {
          x = "X";
          while (ctx.theta.count(x)) x += "'";
        }
        TypingContext body_ctx = ctx;
        body_ctx.theta.insert(x);
        std::vector<Ground> args;
        for (const auto& p : c->params) {
          body_ctx.gamma[p.name] = p.ground;
          args.push_back(p.ground);
        }
        body_ctx.psi[c->name] = FunctionSig{args, var(x), c->result};
        NodeGrade body = infer(body_ctx, c->first);
        expect(body.ground, c->result, "body of " + c->name, c);
        Type body_grade = body.grade;
        if (c->grade) {
          if (auto d = well_formed(c->grade->body, body_ctx.theta))
            throw TypeError("grade annotation of " + c->name + ": " + d->message);
          SubtypeResult r = subtype(body.grade, c->grade->body, body_ctx.theta, opts_);
          if (!r.proven())
            throw TypeError("body of " + c->name + " has grade " + to_string(body.grade) +
                            ", which does not fit the annotation " + to_string(c->grade->body) + ": " +
                            verdict_hint(r));
          body_grade = c->grade->body;
        }
        Type fgrade = rec(x, body_grade);
        if (auto d = well_formed(fgrade, ctx.theta))
          throw TypeError("grade of " + c->name + " is ill-formed (" + d->rule + "): " + d->message);
        TypingContext scope = ctx;
        scope.psi[c->name] = FunctionSig{args, fgrade, c->result};
        NodeGrade s = infer(scope, c->second);
        out.ground = s.ground;
        out.grade = s.grade;
        out.rec_var = x;
        out.rec_body = body_grade;
        return out;
      }
      case CompKind::Apply: {
        auto it = ctx.psi.find(c->name);
        if (it == ctx.psi.end()) throw TypeError("unbound function " + c->name + where(c));
        const FunctionSig& sig = it->second;
        if (sig.args.size() != c->vals.size())
          throw TypeError(c->name + " expects " + std::to_string(sig.args.size()) + " arguments, got " +
                          std::to_string(c->vals.size()) + where(c));
        for (std::size_t i = 0; i < sig.args.size(); ++i)
          expect(value(ctx, c->vals[i], c), sig.args[i], "argument " + std::to_string(i + 1) + " of " + c->name,
                 c);
        out.ground = sig.result;
        out.grade = sig.grade;
        return out;
      }
      case CompKind::Ascribe: {
        if (auto d = well_formed(c->ascription, ctx.theta))
          throw TypeError("ascribed type" + where(c) + " is ill-formed: " + d->message);
        NodeGrade inner = infer(ctx, c->first);
        SubtypeResult r = subtype(inner.grade, c->ascription, ctx.theta, opts_);
        if (!r.proven())
          throw TypeError("grade " + to_string(inner.grade) + where(c) + " does not fit the ascription " +
                          to_string(c->ascription) + ": " + verdict_hint(r));
        out.ground = inner.ground;
        out.grade = c->ascription;
        return out;
      }
    }
    throw TypeError("unknown computation form");
  }

  SubtypeOptions opts_;
  GradeLog* log_;
};

}  // namespace

Inference infer_computation(const TypingContext& ctx, const Comp& t, const SubtypeOptions& opts, GradeLog* log) {
  Inference r;
  try {
    Inferrer inf(opts, log);
    NodeGrade g = inf.infer(ctx, t);
    r.ok = true;
    r.ground = g.ground;
    r.grade = g.grade;
  } catch (const TypeError& e) {
    r.error = e.what();
  }
  return r;
}

CheckResult check_computation(const TypingContext& ctx, const Comp& t, Ground b, const Type& T,
                              const SubtypeOptions& opts, GradeLog* log) {
  Inference inf = infer_computation(ctx, t, opts, log);
  if (!inf.ok) return {false, inf.error};
  if (inf.ground != b)
    return {false, std::string("result type is ") + ground_name(inf.ground) + ", expected " + ground_name(b)};
  SubtypeResult r = subtype(inf.grade, T, ctx.theta, opts);
  if (!r.proven())
    return {false, "inferred grade " + to_string(inf.grade) + " against " + to_string(T) + ": " + verdict_hint(r)};
  return {true, ""};
}

namespace {

struct Pending {
  std::string peer;
  Message msg;
};

// Every interleaving of per-participant lanes, oldest message of each lane first.
using Lanes = std::vector<std::pair<std::string, std::vector<Message>>>;

Lanes oldest_first(const Queue& q) {
  Lanes out;
  for (const auto& [p, d] : q.lanes()) out.emplace_back(p, std::vector<Message>(d.rbegin(), d.rend()));
  return out;
}

struct RecvCandidate {
  Type type;
  std::vector<RecvStep> steps;
};

void advance_receives(const Lanes& lanes, std::vector<std::size_t>& used, const Type& t,
                      std::vector<RecvStep>& steps, const SubtypeOptions& opts,
                      std::map<std::string, RecvCandidate>& found, std::set<std::string>& seen, bool& budget_hit) {
  std::ostringstream key;
  key << canonical_key(t);
  for (auto u : used) key << '/' << u;
  if (!seen.insert(key.str()).second) return;
  bool done = true;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    if (used[i] == lanes[i].second.size()) continue;
    done = false;
    const Message& m = lanes[i].second[used[i]];
    auto g = constant_ground(m.payload);
    CanonicalReduct r = canonical_reduct(t, ReductQuery{Direction::Recv, lanes[i].first, m.label, *g}, opts.fuel);
    budget_hit = budget_hit || r.budget_hit;
    if (!r.derivation) continue;
    ++used[i];
    steps.push_back(RecvStep{lanes[i].first, m, r.derivation});
    advance_receives(lanes, used, r.derivation->result, steps, opts, found, seen, budget_hit);
    steps.pop_back();
    --used[i];
  }
  if (done) found.emplace(canonical_key(t), RecvCandidate{t, steps});
}

class SendPeeler {
 public:
  SendPeeler(const Lanes& lanes, const std::map<std::string, RecvCandidate>& bases, const std::set<std::string>& theta,
             const SubtypeOptions& opts)
      : lanes_(lanes), bases_(bases), theta_(theta), opts_(opts), used_(lanes.size(), 0) {}

  bool run(const Type& t, ConfigTyping& out) {
    std::ostringstream key;
    key << canonical_key(t);
    for (auto u : used_) key << '/' << u;
    if (failed_.count(key.str())) return false;
    bool done = true;
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
      if (used_[i] == lanes_[i].second.size()) continue;
      done = false;
      const Message& m = lanes_[i].second[used_[i]];
      auto g = constant_ground(m.payload);
      CanonicalReduct r =
          canonical_reduct(t, ReductQuery{Direction::Send, lanes_[i].first, m.label, *g}, opts_.fuel);
      budget_hit = budget_hit || r.budget_hit;
      if (!r.derivation) continue;
      ++used_[i];
      out.sends.push_back(SendStep{lanes_[i].first, m, r.derivation});
      if (run(r.derivation->result, out)) return true;
      out.sends.pop_back();
      --used_[i];
    }
    if (done) {
      for (const auto& [_, cand] : bases_) {
        SubtypeResult r = subtype(cand.type, t, theta_, opts_);
        if (r.verdict == Verdict::Unknown) budget_hit = true;
        if (r.proven()) {
          out.after_sends = t;
          out.recvs = cand.steps;
          out.after_recvs = cand.type;
          return true;
        }
        last_mismatch = to_string(cand.type) + " against " + to_string(t);
      }
    }
    failed_.insert(key.str());
    return false;
  }

  bool budget_hit = false;
  std::string last_mismatch;

 private:
  const Lanes& lanes_;
  const std::map<std::string, RecvCandidate>& bases_;
  const std::set<std::string>& theta_;
  SubtypeOptions opts_;
  std::vector<std::size_t> used_;
  std::set<std::string> failed_;
};

}  // namespace

ConfigTyping type_configuration(const Configuration& c, Ground b, const Type& T, const SubtypeOptions& opts) {
  ConfigTyping out;
  out.ground = b;
  Inference inf = infer_computation({}, c.comp, opts);
  if (!inf.ok) {
    out.error = inf.error;
    return out;
  }
  if (inf.ground != b) {
    out.error = std::string("result type is ") + ground_name(inf.ground) + ", expected " + ground_name(b);
    return out;
  }
  out.base_grade = inf.grade;

  Lanes rho = oldest_first(c.rho);
  std::vector<std::size_t> used(rho.size(), 0);
  std::vector<RecvStep> steps;
  std::map<std::string, RecvCandidate> bases;
  std::set<std::string> seen;
  bool budget_hit = false;
  advance_receives(rho, used, inf.grade, steps, opts, bases, seen, budget_hit);
  if (bases.empty()) {
    out.error = "grade " + to_string(inf.grade) + " cannot absorb the receive queue " + to_string(c.rho) +
                (budget_hit ? " within fuel; raise --fuel" : "");
    return out;
  }

  Lanes sigma = oldest_first(c.sigma);
  SendPeeler peeler(sigma, bases, {}, opts);
  if (peeler.run(T, out)) {
    out.ok = true;
    return out;
  }
  out.sends.clear();
  std::string msg = "no derivation for " + to_string(c) + " at " + to_string(T);
  if (!peeler.last_mismatch.empty()) msg += "; closest attempt compared " + peeler.last_mismatch;
  if (peeler.budget_hit || budget_hit) msg += "; some searches hit the fuel bound, raise --fuel";
  out.error = msg;
  return out;
}

ResolvedType resolve_type(const Program& p, const ParticipantDecl& d) {
  if (d.type.type) return {d.type.type, ""};
  const Global* g = p.find_global(d.type.global);
  if (!g) return {nullptr, "unknown global type " + d.type.global};
  if (auto diag = g_well_formed(*g)) return {nullptr, "global " + d.type.global + ": " + diag->message};
  ProjectResult r = project(*g, d.type.role);
  if (!r) {
    std::string path;
    for (const auto& l : r.error.path) path += (path.empty() ? "" : ".") + l;
    return {nullptr, "projection of " + d.type.global + " at " + d.type.role + " is undefined" +
                         (path.empty() ? "" : " (path " + path + ")") + ": " + r.error.message};
  }
  return {r.type, ""};
}

SessionReport session_well_typed(const Program& p, const SubtypeOptions& opts) {
  SessionReport rep;
  std::set<std::string> roles;
  for (const auto& d : p.participants) roles.insert(d.name);
  std::set<std::string> used_globals;
  for (const auto& d : p.participants)
    if (!d.type.type) used_globals.insert(d.type.global);
  for (const auto& name : used_globals) {
    const Global* g = p.find_global(name);
    if (!g) {
      rep.errors.push_back("unknown global type " + name);
      continue;
    }
    if (!g_free_vars(*g).empty()) rep.errors.push_back("global " + name + " is not closed");
    for (const auto& r : g_participants(*g))
      if (!roles.count(r)) rep.errors.push_back("global " + name + " mentions undeclared participant " + r);
  }
  for (const auto& d : p.participants) {
    RoleReport rr;
    rr.role = d.name;
    ResolvedType rt = resolve_type(p, d);
    rr.expected = rt.type;
    if (!rt.type) {
      rr.error = rt.error;
      rep.roles.push_back(rr);
      continue;
    }
    if (auto diag = well_formed(rt.type, {})) {
      rr.error = "declared type is ill-formed (" + diag->rule + "): " + diag->message;
      rep.roles.push_back(rr);
      continue;
    }
    if (auto diag = guarded_recursion_check(d.body)) {
      rr.error = diag->message;
      rep.roles.push_back(rr);
      continue;
    }
    auto fv = free_value_vars(d.body);
    if (!fv.empty()) {
      rr.error = "computation is not closed: free variable " + *fv.begin();
      rep.roles.push_back(rr);
      continue;
    }
    Inference inf = infer_computation({}, d.body, opts);
    if (!inf.ok) {
      rr.error = inf.error;
      rep.roles.push_back(rr);
      continue;
    }
    rr.ground = inf.ground;
    rr.grade = inf.grade;
    SubtypeResult sr = subtype(inf.grade, rt.type, {}, opts);
    if (!sr.proven()) rr.error = "inferred grade " + to_string(inf.grade) + ": " + verdict_hint(sr);
    else rr.ok = true;
    rep.roles.push_back(rr);
  }
  rep.ok = rep.errors.empty();
  for (const auto& r : rep.roles) rep.ok = rep.ok && r.ok;
  return rep;
}

}  // namespace mpst
