#include "mpst/session_type.hpp"

#include <algorithm>
#include <sstream>

namespace mpst {

const char* ground_name(Ground g) {
  switch (g) {
    case Ground::Unit: return "unit";
    case Ground::Bool: return "bool";
    case Ground::Int: return "int";
  }
  return "?";
}

std::optional<Ground> ground_from_name(const std::string& s) {
  if (s == "unit") return Ground::Unit;
  if (s == "bool") return Ground::Bool;
  if (s == "int") return Ground::Int;
  return std::nullopt;
}

const Branch* SessionType::find(const std::string& label) const {
  for (const auto& b : branches)
    if (b.label == label) return &b;
  return nullptr;
}

namespace {

Type make(TypeKind kind, std::string name, Branches branches, Type body) {
  auto t = std::make_shared<SessionType>();
  t->kind = kind;
  t->name = std::move(name);
  t->branches = std::move(branches);
  t->body = std::move(body);
  return t;
}

}  // namespace

Type end_type() {
  static const Type e = make(TypeKind::End, "", {}, nullptr);
  return e;
}

Type internal(std::string peer, Branches branches) {
  return make(TypeKind::Internal, std::move(peer), std::move(branches), nullptr);
}

Type external(std::string peer, Branches branches) {
  return make(TypeKind::External, std::move(peer), std::move(branches), nullptr);
}

Type choice(TypeKind kind, std::string peer, Branches branches) {
  return make(kind, std::move(peer), std::move(branches), nullptr);
}

Type var(std::string name) { return make(TypeKind::Var, std::move(name), {}, nullptr); }

Type rec(std::string name, Type body) {
  return make(TypeKind::Rec, std::move(name), {}, std::move(body));
}

namespace {

void collect_free(const Type& t, std::vector<std::string>& bound, std::set<std::string>& out) {
  switch (t->kind) {
    case TypeKind::End: return;
    case TypeKind::Var:
      if (std::find(bound.begin(), bound.end(), t->name) == bound.end()) out.insert(t->name);
      return;
    case TypeKind::Internal:
    case TypeKind::External:
      for (const auto& b : t->branches) collect_free(b.cont, bound, out);
      return;
    case TypeKind::Rec:
      bound.push_back(t->name);
      collect_free(t->body, bound, out);
      bound.pop_back();
      return;
  }
}

}  // namespace

std::set<std::string> free_vars(const Type& t) {
  std::vector<std::string> bound;
  std::set<std::string> out;
  collect_free(t, bound, out);
  return out;
}

bool is_closed(const Type& t) { return free_vars(t).empty(); }

bool has_rec(const Type& t) {
  switch (t->kind) {
    case TypeKind::Rec: return true;
    case TypeKind::Internal:
    case TypeKind::External:
      for (const auto& b : t->branches)
        if (has_rec(b.cont)) return true;
      return false;
    default: return false;
  }
}

std::size_t type_size(const Type& t) {
  switch (t->kind) {
    case TypeKind::Rec: return 1 + type_size(t->body);
    case TypeKind::Internal:
    case TypeKind::External: {
      std::size_t n = 1;
      for (const auto& b : t->branches) n += type_size(b.cont);
      return n;
    }
    default: return 1;
  }
}

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
  std::string name = base + "'";
  while (avoid.count(name)) name += "'";
  return name;
}

Type substitute(const Type& t, const std::map<std::string, Type>& bindings) {
  if (bindings.empty()) return t;
  switch (t->kind) {
    case TypeKind::End: return t;
    case TypeKind::Var: {
      auto it = bindings.find(t->name);
      return it == bindings.end() ? t : it->second;
    }
    case TypeKind::Internal:
    case TypeKind::External: {
      Branches bs;
      bs.reserve(t->branches.size());
      for (const auto& b : t->branches) bs.push_back({b.label, b.payload, substitute(b.cont, bindings)});
      return choice(t->kind, t->name, std::move(bs));
    }
    case TypeKind::Rec: {
      std::map<std::string, Type> inner = bindings;
      inner.erase(t->name);
      auto body_free = free_vars(t->body);
      std::set<std::string> image_free;
      bool any = false;
      for (auto it = inner.begin(); it != inner.end();) {
        if (!body_free.count(it->first)) {
          it = inner.erase(it);
          continue;
        }
        any = true;
        auto fv = free_vars(it->second);
        image_free.insert(fv.begin(), fv.end());
        ++it;
      }
      if (!any) return t;
      std::string binder = t->name;
      Type body = t->body;
      if (image_free.count(binder)) {
        std::set<std::string> avoid = image_free;
        avoid.insert(body_free.begin(), body_free.end());
        for (const auto& kv : inner) avoid.insert(kv.first);
        binder = fresh_name(t->name, avoid);
        body = substitute(body, {{t->name, var(binder)}});
      }
      return rec(binder, substitute(body, inner));
    }
  }
  return t;
}

Type unroll_once(const Type& t) {
  if (t->kind != TypeKind::Rec) return t;
  return substitute(t->body, {{t->name, t}});
}

Type unfold(const Type& t) {
  if (t->kind != TypeKind::Rec) return t;
  return substitute(unfold(t->body), {{t->name, t}});
}

Type multiply(const Type& t, const Type& u) {
  switch (t->kind) {
    case TypeKind::End: return u;
    case TypeKind::Var: return t;
    case TypeKind::Internal:
    case TypeKind::External: {
      Branches bs;
      bs.reserve(t->branches.size());
      for (const auto& b : t->branches) bs.push_back({b.label, b.payload, multiply(b.cont, u)});
      return choice(t->kind, t->name, std::move(bs));
    }
    case TypeKind::Rec: {
      auto fu = free_vars(u);
      if (!fu.count(t->name)) return rec(t->name, multiply(t->body, u));
      auto avoid = fu;
      auto fb = free_vars(t->body);
      avoid.insert(fb.begin(), fb.end());
      std::string binder = fresh_name(t->name, avoid);
      Type body = substitute(t->body, {{t->name, var(binder)}});
      return rec(binder, multiply(body, u));
    }
  }
  return t;
}

namespace {

std::optional<Diagnostic> check_wf(const Type& t, const std::set<std::string>& theta,
                                   std::vector<std::string>& bound, std::set<std::string>& unguarded) {
  switch (t->kind) {
    case TypeKind::End: return std::nullopt;
    case TypeKind::Var: {
      bool is_bound = std::find(bound.begin(), bound.end(), t->name) != bound.end();
      if (!is_bound && !theta.count(t->name))
        return Diagnostic{"free-variable", "type variable " + t->name + " is not bound", to_string(t)};
      if (is_bound && unguarded.count(t->name))
        return Diagnostic{"guardedness", "recursion variable " + t->name + " is not under a choice",
                          to_string(t)};
      return std::nullopt;
    }
    case TypeKind::Internal:
    case TypeKind::External: {
      if (t->name.empty()) return Diagnostic{"participant", "choice without a participant", to_string(t)};
      if (t->branches.empty())
        return Diagnostic{"nonempty-choice", "choice has no branches", to_string(t)};
      std::set<std::string> seen;
      for (const auto& b : t->branches)
        if (!seen.insert(b.label).second)
          return Diagnostic{"distinct-labels", "label " + b.label + " appears twice", to_string(t)};
      std::set<std::string> saved;
      saved.swap(unguarded);
      for (const auto& b : t->branches)
        if (auto d = check_wf(b.cont, theta, bound, unguarded)) {
          unguarded.swap(saved);
          return d;
        }
      unguarded.swap(saved);
      return std::nullopt;
    }
    case TypeKind::Rec: {
      bound.push_back(t->name);
      bool fresh = unguarded.insert(t->name).second;
      auto d = check_wf(t->body, theta, bound, unguarded);
      if (fresh) unguarded.erase(t->name);
      bound.pop_back();
      if (d && d->rule == "guardedness" && d->subterm == t->name)
        d->subterm = to_string(t);
      return d;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Diagnostic> well_formed(const Type& t, const std::set<std::string>& theta) {
  std::vector<std::string> bound;
  std::set<std::string> unguarded;
  return check_wf(t, theta, bound, unguarded);
}

namespace {

void key_into(const Type& t, std::vector<std::string>& binders, std::string& out) {
  switch (t->kind) {
    case TypeKind::End: out += "end"; return;
    case TypeKind::Var: {
      for (std::size_t i = binders.size(); i-- > 0;)
        if (binders[i] == t->name) {
          out += '#';
          out += std::to_string(i);
          return;
        }
      out += '$';
      out += t->name;
      return;
    }
    case TypeKind::Rec:
      out += "rec.";
      binders.push_back(t->name);
      key_into(t->body, binders, out);
      binders.pop_back();
      return;
    case TypeKind::Internal:
    case TypeKind::External: {
      out += t->kind == TypeKind::Internal ? '+' : '&';
      out += t->name;
      out += '{';
      std::vector<const Branch*> sorted;
      for (const auto& b : t->branches) sorted.push_back(&b);
      std::sort(sorted.begin(), sorted.end(),
                [](const Branch* a, const Branch* b) { return a->label < b->label; });
      for (const Branch* b : sorted) {
        out += b->label;
        out += '(';
        out += ground_name(b->payload);
        out += ").";
        key_into(b->cont, binders, out);
        out += ';';
      }
      out += '}';
      return;
    }
  }
}

void print_into(const Type& t, std::ostringstream& os) {
  switch (t->kind) {
    case TypeKind::End: os << "end"; return;
    case TypeKind::Var: os << t->name; return;
    case TypeKind::Rec:
      os << "rec " << t->name << ". ";
      print_into(t->body, os);
      return;
    case TypeKind::Internal:
    case TypeKind::External: {
      os << (t->kind == TypeKind::Internal ? '+' : '&') << t->name << '{';
      bool first = true;
      for (const auto& b : t->branches) {
        if (!first) os << ", ";
        first = false;
        os << b.label << '(' << ground_name(b.payload) << "). ";
        print_into(b.cont, os);
      }
      os << '}';
      return;
    }
  }
}

}  // namespace

std::string canonical_key(const Type& t) {
  std::vector<std::string> binders;
  std::string out;
  key_into(t, binders, out);
  return out;
}

bool alpha_equal(const Type& a, const Type& b) { return a == b || canonical_key(a) == canonical_key(b); }

std::string to_string(const Type& t) {
  std::ostringstream os;
  print_into(t, os);
  return os.str();
}

}  // namespace mpst
