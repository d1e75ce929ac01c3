#include "mpst/global_type.hpp"

#include <algorithm>
#include <sstream>

namespace mpst {

namespace {

Global make(GlobalKind kind, std::string from, std::string to, std::vector<GlobalBranch> bs, Global body) {
  auto g = std::make_shared<GlobalType>();
  g->kind = kind;
  g->from = std::move(from);
  g->to = std::move(to);
  g->branches = std::move(bs);
  g->body = std::move(body);
  return g;
}

}  // namespace

Global g_end() {
  static const Global e = make(GlobalKind::End, "", "", {}, nullptr);
  return e;
}

Global g_comm(std::string from, std::string to, std::vector<GlobalBranch> branches) {
  return make(GlobalKind::Comm, std::move(from), std::move(to), std::move(branches), nullptr);
}

Global g_var(std::string name) { return make(GlobalKind::Var, std::move(name), "", {}, nullptr); }

Global g_rec(std::string name, Global body) {
  return make(GlobalKind::Rec, std::move(name), "", {}, std::move(body));
}

std::set<std::string> g_free_vars(const Global& g) {
  switch (g->kind) {
    case GlobalKind::End: return {};
    case GlobalKind::Var: return {g->from};
    case GlobalKind::Rec: {
      auto s = g_free_vars(g->body);
      s.erase(g->from);
      return s;
    }
    case GlobalKind::Comm: {
      std::set<std::string> s;
      for (const auto& b : g->branches) {
        auto c = g_free_vars(b.cont);
        s.insert(c.begin(), c.end());
      }
      return s;
    }
  }
  return {};
}

Global g_substitute(const Global& g, const std::string& x, const Global& by) {
  switch (g->kind) {
    case GlobalKind::End: return g;
    case GlobalKind::Var: return g->from == x ? by : g;
    case GlobalKind::Comm: {
      std::vector<GlobalBranch> bs;
      for (const auto& b : g->branches) bs.push_back({b.label, b.payload, g_substitute(b.cont, x, by)});
      return g_comm(g->from, g->to, std::move(bs));
    }
    case GlobalKind::Rec: {
      if (g->from == x) return g;
      auto body_free = g_free_vars(g->body);
      if (!body_free.count(x)) return g;
      auto by_free = g_free_vars(by);
      if (!by_free.count(g->from)) return g_rec(g->from, g_substitute(g->body, x, by));
      std::set<std::string> avoid = by_free;
      avoid.insert(body_free.begin(), body_free.end());
      avoid.insert(x);
      std::string fresh = fresh_name(g->from, avoid);
      Global body = g_substitute(g->body, g->from, g_var(fresh));
      return g_rec(fresh, g_substitute(body, x, by));
    }
  }
  return g;
}

Global g_unfold(const Global& g) {
  if (g->kind != GlobalKind::Rec) return g;
  return g_substitute(g_unfold(g->body), g->from, g);
}

std::set<std::string> g_participants(const Global& g) {
  std::set<std::string> out;
  switch (g->kind) {
    case GlobalKind::Comm:
      out.insert(g->from);
      out.insert(g->to);
      for (const auto& b : g->branches) {
        auto s = g_participants(b.cont);
        out.insert(s.begin(), s.end());
      }
      break;
    case GlobalKind::Rec: return g_participants(g->body);
    default: break;
  }
  return out;
}

namespace {

std::optional<Diagnostic> check(const Global& g, std::set<std::string>& bound, std::set<std::string>& unguarded) {
  switch (g->kind) {
    case GlobalKind::End: return std::nullopt;
    case GlobalKind::Var:
      if (!bound.count(g->from))
        return Diagnostic{"free-variable", "type variable " + g->from + " is not bound", g->from};
      if (unguarded.count(g->from))
        return Diagnostic{"guardedness", "recursion variable " + g->from + " is not under a communication",
                          g->from};
      return std::nullopt;
    case GlobalKind::Rec: {
      bool was_bound = bound.count(g->from) > 0;
      bound.insert(g->from);
      bool fresh = unguarded.insert(g->from).second;
      auto d = check(g->body, bound, unguarded);
      if (fresh) unguarded.erase(g->from);
      if (!was_bound) bound.erase(g->from);
      return d;
    }
    case GlobalKind::Comm: {
      if (g->from == g->to)
        return Diagnostic{"self-communication", g->from + " sends to itself", to_string(g)};
      if (g->branches.empty()) return Diagnostic{"nonempty-choice", "communication has no branches", to_string(g)};
      std::set<std::string> seen;
      for (const auto& b : g->branches)
        if (!seen.insert(b.label).second)
          return Diagnostic{"distinct-labels", "label " + b.label + " appears twice", to_string(g)};
      std::set<std::string> saved;
      saved.swap(unguarded);
      std::optional<Diagnostic> d;
      for (const auto& b : g->branches)
        if ((d = check(b.cont, bound, unguarded))) break;
      unguarded.swap(saved);
      return d;
    }
  }
  return std::nullopt;
}

void print(const Global& g, std::ostringstream& os) {
  switch (g->kind) {
    case GlobalKind::End: os << "end"; return;
    case GlobalKind::Var: os << g->from; return;
    case GlobalKind::Rec:
      os << "rec " << g->from << ". ";
      print(g->body, os);
      return;
    case GlobalKind::Comm: {
      os << g->from << "->" << g->to << '{';
      bool first = true;
      for (const auto& b : g->branches) {
        if (!first) os << ", ";
        first = false;
        os << b.label << '(' << ground_name(b.payload) << "). ";
        print(b.cont, os);
      }
      os << '}';
      return;
    }
  }
}

MergeResult merge_fail(std::string msg) { return MergeResult{nullptr, ProjectionError{{}, std::move(msg)}}; }

MergeResult merge_at(const Type& t, const Type& u, const std::string& label) {
  MergeResult r = merge(t, u);
  if (!r) r.error.path.insert(r.error.path.begin(), label);
  return r;
}

}  // namespace

std::optional<Diagnostic> g_well_formed(const Global& g) {
  std::set<std::string> bound, unguarded;
  return check(g, bound, unguarded);
}

std::string to_string(const Global& g) {
  std::ostringstream os;
  print(g, os);
  return os.str();
}

MergeResult merge(const Type& t, const Type& u) {
  if (t->kind != u->kind)
    return merge_fail("cannot merge " + to_string(t) + " with " + to_string(u));
  switch (t->kind) {
    case TypeKind::End: return MergeResult{t, {}};
    case TypeKind::Var:
      if (t->name == u->name) return MergeResult{t, {}};
      return merge_fail("cannot merge distinct variables " + t->name + " and " + u->name);
    case TypeKind::Rec: {
      Type ub = u->body;
      std::string x = t->name;
      Type tb = t->body;
      if (u->name != x) {
        auto avoid = free_vars(t);
        auto fu = free_vars(u);
        avoid.insert(fu.begin(), fu.end());
        if (avoid.count(x)) {
          auto more = free_vars(t->body);
          avoid.insert(more.begin(), more.end());
          x = fresh_name(x, avoid);
          tb = substitute(t->body, {{t->name, var(x)}});
        }
        ub = substitute(u->body, {{u->name, var(x)}});
      }
      MergeResult r = merge(tb, ub);
      if (!r) return r;
      return MergeResult{rec(x, r.type), {}};
    }
    case TypeKind::Internal: {
      if (t->name != u->name)
        return merge_fail("internal choices to different participants " + t->name + " and " + u->name);
      if (t->branches.size() != u->branches.size())
        return merge_fail("internal choices to " + t->name + " offer different labels");
      Branches bs;
      for (const auto& b : t->branches) {
        const Branch* o = u->find(b.label);
        if (!o) return merge_fail("internal choice to " + t->name + " lacks label " + b.label);
        if (o->payload != b.payload) return merge_fail("payload mismatch at label " + b.label);
        MergeResult r = merge_at(b.cont, o->cont, b.label);
        if (!r) return r;
        bs.push_back({b.label, b.payload, r.type});
      }
      return MergeResult{internal(t->name, std::move(bs)), {}};
    }
    case TypeKind::External: {
      if (t->name != u->name)
        return merge_fail("external choices from different participants " + t->name + " and " + u->name);
      Branches bs;
      for (const auto& b : t->branches) {
        const Branch* o = u->find(b.label);
        if (!o) {
          bs.push_back(b);
          continue;
        }
        if (o->payload != b.payload) return merge_fail("payload mismatch at label " + b.label);
        MergeResult r = merge_at(b.cont, o->cont, b.label);
        if (!r) return r;
        bs.push_back({b.label, b.payload, r.type});
      }
      for (const auto& b : u->branches)
        if (!t->find(b.label)) bs.push_back(b);
      return MergeResult{external(t->name, std::move(bs)), {}};
    }
  }
  return merge_fail("unreachable");
}

ProjectResult project(const Global& g, const std::string& role) {
  switch (g->kind) {
    case GlobalKind::End: return ProjectResult{end_type(), {}};
    case GlobalKind::Var: return ProjectResult{var(g->from), {}};
    case GlobalKind::Rec: {
      ProjectResult r = project(g->body, role);
      if (!r) return r;
      if (r.type->kind == TypeKind::Var) {
        if (r.type->name == g->from) return ProjectResult{end_type(), {}};
        return r;
      }
      return ProjectResult{rec(g->from, r.type), {}};
    }
    case GlobalKind::Comm: {
      std::vector<Type> subs;
      for (const auto& b : g->branches) {
        ProjectResult r = project(b.cont, role);
        if (!r) {
          r.error.path.insert(r.error.path.begin(), b.label);
          return r;
        }
        subs.push_back(r.type);
      }
      if (g->from == role || g->to == role) {
        Branches bs;
        for (std::size_t i = 0; i < subs.size(); ++i)
          bs.push_back({g->branches[i].label, g->branches[i].payload, subs[i]});
        return ProjectResult{g->from == role ? internal(g->to, std::move(bs)) : external(g->from, std::move(bs)), {}};
      }
      // Fold in label order so the result does not depend on how branches were written.
      std::vector<std::size_t> order(subs.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return g->branches[a].label < g->branches[b].label; });
      Type acc = subs[order[0]];
      for (std::size_t k = 1; k < order.size(); ++k) {
        MergeResult m = merge(acc, subs[order[k]]);
        if (!m) {
          ProjectionError e = m.error;
          e.message = "merge failed for " + role + " across " + g->from + "->" + g->to + " at label " +
                      g->branches[order[k]].label + ": " + e.message;
          return ProjectResult{nullptr, e};
        }
        acc = m.type;
      }
      return ProjectResult{acc, {}};
    }
  }
  return ProjectResult{nullptr, {{}, "unreachable"}};
}

}  // namespace mpst
