#include "mpst/denotation.hpp"

namespace mpst {

namespace {

// Gives every node its own address so the grade log has one entry per occurrence.
Comp clone(const Comp& c) {
  auto out = std::make_shared<Computation>(*c);
  if (c->first) out->first = clone(c->first);
  if (c->second) out->second = clone(c->second);
  for (auto& a : out->arms) a.body = clone(a.body);
  return out;
}

Value eval(const Environments& env, const Value& v) {
  if (v.kind != Value::Kind::Var) return v;
  auto it = env.gamma.find(v.name);
  if (it == env.gamma.end()) throw DenotationError("unbound variable " + v.name);
  return it->second;
}

std::int64_t wrap(std::uint64_t x) { return static_cast<std::int64_t>(x); }

class Denoter {
 public:
  Denoter(std::shared_ptr<const GradeLog> log, const DenoteOptions& opts) : log_(std::move(log)), opts_(opts) {}

  Tree run(const Environments& env, const Comp& c) const {
    switch (c->kind) {
      case CompKind::Return: return t_ret(eval(env, c->vals[0]));
      case CompKind::Let: {
        Tree first = run(env, c->first);
        Denoter self = *this;
        return tree_bind(first, [self, env, c](const Value& x) {
          Environments inner = env;
          inner.gamma[c->name] = x;
          return self.run(inner, c->second);
        });
      }
      case CompKind::Add:
      case CompKind::Sub:
      case CompKind::Less: {
        Value a = eval(env, c->vals[0]);
        Value b = eval(env, c->vals[1]);
        auto ua = static_cast<std::uint64_t>(a.i);
        auto ub = static_cast<std::uint64_t>(b.i);
        if (c->kind == CompKind::Add) return t_ret(Value::integer(wrap(ua + ub)));
        if (c->kind == CompKind::Sub) return t_ret(Value::integer(wrap(ua - ub)));
        return t_ret(Value::boolean(a.i < b.i));
      }
      case CompKind::If: {
        Value v = eval(env, c->vals[0]);
        const Comp& branch = v.b ? c->first : c->second;
        return coerce(env, run(env, branch), grade(branch), grade(c));
      }
      case CompKind::Send: {
        Message m{c->name, eval(env, c->vals[0])};
        Denoter self = *this;
        Comp k = c->first;
        return t_send_lazy(c->peer, m, [self, env, k] { return self.run(env, k); });
      }
      case CompKind::Recv: {
        std::vector<RecvArm> arms;
        Denoter self = *this;
        for (const auto& a : c->arms) {
          std::string binder = a.binder;
          Comp body = a.body;
          arms.push_back(make_arm(a.label, a.payload, [self, env, binder, body](const Value& v) {
            Environments inner = env;
            inner.gamma[binder] = v;
            return self.run(inner, body);
          }));
        }
        return t_recv(c->peer, std::move(arms));
      }
      case CompKind::LetRec: {
        auto cl = std::make_shared<Closure>();
        cl->node = c;
        cl->env = env;
        cl->log = log_;
        Environments scope = env;
        scope.phi[c->name] = cl;
        return run(scope, c->second);
      }
      case CompKind::Apply: {
        auto it = env.phi.find(c->name);
        if (it == env.phi.end()) throw DenotationError("unbound function " + c->name);
        std::vector<Value> args;
        for (const auto& v : c->vals) args.push_back(eval(env, v));
        return apply(it->second, args);
      }
      case CompKind::Ascribe:
        return coerce(env, run(env, c->first), grade(c->first), c->ascription);
    }
    throw DenotationError("unknown computation form");
  }

 private:
  const NodeGrade& node(const Comp& c) const {
    auto it = log_->find(c.get());
    if (it == log_->end()) throw DenotationError("no grade recorded for " + to_string(c));
    return it->second;
  }

  const Type& grade(const Comp& c) const { return node(c).grade; }

  Tree coerce(const Environments& env, const Tree& t, const Type& from, const Type& to) const {
    if (alpha_equal(from, to)) return t;
    return normalize(substitute(to, env.theta), t, opts_.fuel);
  }

  Tree apply(const std::shared_ptr<const Closure>& cl, const std::vector<Value>& args) const {
    const Comp& def = cl->node;
    if (args.size() != def->params.size()) throw DenotationError("arity mismatch calling " + def->name);
    const NodeGrade& g = node(def);
    Environments env = cl->env;
    env.phi[def->name] = cl;
    for (std::size_t i = 0; i < args.size(); ++i) env.gamma[def->params[i].name] = args[i];
    auto outer = cl->env.theta;
    outer.erase(g.rec_var);
    env.theta[g.rec_var] = substitute(rec(g.rec_var, g.rec_body), outer);
    return run(env, def->first);
  }

  std::shared_ptr<const GradeLog> log_;
  DenoteOptions opts_;
};

}  // namespace

Tree denote_in(const Environments& env, const Comp& t, const std::shared_ptr<const GradeLog>& log,
               const DenoteOptions& opts) {
  return Denoter(log, opts).run(env, t);
}

Tree denote_computation(const Comp& t, const DenoteOptions& opts) {
  Comp c = clone(t);
  auto log = std::make_shared<GradeLog>();
  Inference inf = infer_computation({}, c, opts.subtyping, log.get());
  if (!inf.ok) throw DenotationError(inf.error);
  return denote_in({}, c, log, opts);
}

Tree inject_send(const Derivation& d, const std::string& peer, const Message& msg, const Tree& inner) {
  switch (d->rule) {
    case ReductRule::Base: return t_send(peer, msg, inner);
    case ReductRule::Rec: return inject_send(d->subs.front(), peer, msg, inner);
    case ReductRule::Oplus: {
      if (inner->kind != TreeNode::Kind::Send || inner->peer != d->source->name)
        throw DenotationError("inject_send: expected a send to " + d->source->name);
      for (std::size_t i = 0; i < d->index_set.size(); ++i)
        if (d->index_set[i] == inner->msg.label)
          return t_send(inner->peer, inner->msg, inject_send(d->subs[i], peer, msg, inner->cont()));
      throw DenotationError("inject_send: label " + inner->msg.label + " is not kept by the derivation");
    }
    case ReductRule::Amp: {
      if (inner->kind != TreeNode::Kind::Recv || inner->peer != d->source->name)
        throw DenotationError("inject_send: expected a receive from " + d->source->name);
      std::vector<RecvArm> arms;
      for (std::size_t i = 0; i < d->index_set.size(); ++i) {
        const RecvArm* a = inner->find_arm(d->index_set[i]);
        if (!a) throw DenotationError("inject_send: missing arm " + d->index_set[i]);
        auto cont = a->cont;
        Derivation sub = d->subs[i];
        arms.push_back(make_arm(a->label, a->payload, [cont, sub, peer, msg](const Value& v) -> Tree {
          Tree t = cont->at(v);
          if (!t) return nullptr;
          return inject_send(sub, peer, msg, t);
        }));
      }
      return t_recv(inner->peer, std::move(arms));
    }
  }
  throw DenotationError("inject_send: unknown rule");
}

Tree denote_configuration(const Configuration& c, Ground b, const Type& T, const DenoteOptions& opts) {
  ConfigTyping ct = type_configuration(c, b, T, opts.subtyping);
  if (!ct.ok) throw DenotationError(ct.error);
  Comp comp = clone(c.comp);
  auto log = std::make_shared<GradeLog>();
  Inference inf = infer_computation({}, comp, opts.subtyping, log.get());
  if (!inf.ok) throw DenotationError(inf.error);
  Tree tree = denote_in({}, comp, log, opts);
  for (const auto& r : ct.recvs) {
    auto next = tree_step(tree, TreeAction::recv(r.peer, r.msg), opts.fuel);
    if (next.empty()) throw DenotationError("denotation cannot receive " + to_string(r.msg) + " from " + r.peer);
    tree = normalize(r.derivation->result, next.front(), opts.fuel);
  }
  if (!alpha_equal(ct.after_recvs, ct.after_sends)) tree = normalize(ct.after_sends, tree, opts.fuel);
  for (auto it = ct.sends.rbegin(); it != ct.sends.rend(); ++it)
    tree = inject_send(it->derivation, it->peer, it->msg, tree);
  return tree;
}

Adequacy adequacy_check(const Configuration& c1, const Configuration& c2, Ground b, const Type& T,
                        const ProbeConfig& probes, const DenoteOptions& opts) {
  Adequacy out;
  Tree d1 = denote_configuration(c1, b, T, opts);
  Tree d2 = denote_configuration(c2, b, T, opts);
  out.equal_denotations = tree_equal(d1, d2, probes);
  out.bisimilar = bisim_bounded(c1, c2, T, probes, opts.fuel);
  out.consistent = out.equal_denotations == out.bisimilar;
  return out;
}

}  // namespace mpst
