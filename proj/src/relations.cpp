#include "mpst/relations.hpp"

#include <set>
#include <sstream>

namespace mpst {

const char* rule_name(ReductRule r) {
  switch (r) {
    case ReductRule::Base: return "base";
    case ReductRule::Oplus: return "oplus";
    case ReductRule::Amp: return "amp";
    case ReductRule::Rec: return "rec";
  }
  return "?";
}

namespace {

class ReductSearch {
 public:
  explicit ReductSearch(const ReductQuery& q) : q_(q) {}

  CanonicalReduct run(const Type& t, int budget) {
    auto key = std::make_pair(t.get(), budget);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    CanonicalReduct r = compute(t, budget);
    memo_.emplace(key, r);
    keep_.push_back(t);
    return r;
  }

 private:
  // The choice kind whose peer is the message partner (base rule), and the
  // kind that allows dropping branches (subset rule).
  TypeKind own_kind() const { return q_.dir == Direction::Send ? TypeKind::Internal : TypeKind::External; }

  CanonicalReduct compute(const Type& t, int budget) {
    CanonicalReduct out;
    switch (t->kind) {
      case TypeKind::End:
      case TypeKind::Var:
        return out;
      case TypeKind::Rec: {
        if (budget == 0) {
          out.budget_hit = true;
          return out;
        }
        CanonicalReduct sub = run(unroll_once(t), budget - 1);
        out.budget_hit = sub.budget_hit;
        if (!sub.derivation) return out;
        auto d = std::make_shared<ReductDerivation>();
        d->rule = ReductRule::Rec;
        d->source = t;
        d->subs.push_back(sub.derivation);
        d->result = sub.derivation->result;
        d->height = sub.derivation->height + 1;
        out.derivation = d;
        return out;
      }
      case TypeKind::Internal:
      case TypeKind::External:
        break;
    }
    bool own = t->kind == own_kind();
    if (own && t->name == q_.peer) {
      const Branch* b = t->find(q_.label);
      if (!b || b->payload != q_.payload) return out;
      auto d = std::make_shared<ReductDerivation>();
      d->rule = ReductRule::Base;
      d->source = t;
      d->index_set.push_back(b->label);
      d->result = b->cont;
      d->height = 0;
      out.derivation = d;
      return out;
    }
    if (budget == 0) {
      out.budget_hit = true;
      return out;
    }
    auto d = std::make_shared<ReductDerivation>();
    d->rule = own ? (q_.dir == Direction::Send ? ReductRule::Oplus : ReductRule::Amp)
                  : (q_.dir == Direction::Send ? ReductRule::Amp : ReductRule::Oplus);
    d->source = t;
    Branches kept;
    int height = 0;
    for (const auto& b : t->branches) {
      CanonicalReduct sub = run(b.cont, budget - 1);
      out.budget_hit = out.budget_hit || sub.budget_hit;
      if (!sub.derivation) {
        // The subset rule may drop this branch; the all-branches rule may not.
        if (own) continue;
        return CanonicalReduct{nullptr, out.budget_hit};
      }
      kept.push_back({b.label, b.payload, sub.derivation->result});
      d->index_set.push_back(b.label);
      d->subs.push_back(sub.derivation);
      height = std::max(height, sub.derivation->height + 1);
    }
    if (kept.empty()) return out;
    d->result = choice(t->kind, t->name, std::move(kept));
    d->height = height;
    out.derivation = d;
    return out;
  }

  ReductQuery q_;
  std::map<std::pair<const SessionType*, int>, CanonicalReduct> memo_;
  std::vector<Type> keep_;
};

std::vector<std::pair<Type, Derivation>> all_reducts(const Type& t, const ReductQuery& q, int fuel) {
  std::vector<std::pair<Type, Derivation>> out;
  std::set<std::string> seen;
  ReductSearch search(q);
  for (int h = 0; h <= fuel; ++h) {
    CanonicalReduct r = search.run(t, h);
    if (!r.derivation) continue;
    if (seen.insert(canonical_key(r.derivation->result)).second)
      out.emplace_back(r.derivation->result, r.derivation);
  }
  return out;
}

bool predicate(TypeKind own, const std::string& p, const Type& t) {
  switch (t->kind) {
    case TypeKind::Rec: return predicate(own, p, t->body);
    case TypeKind::Internal:
    case TypeKind::External: {
      if (t->kind != own) return false;
      if (t->name == p) return true;
      for (const auto& b : t->branches)
        if (!predicate(own, p, b.cont)) return false;
      return true;
    }
    default: return false;
  }
}

std::optional<PrefixFamily> prefix(TypeKind own, const Type& t, const std::string& p) {
  switch (t->kind) {
    case TypeKind::Rec: return prefix(own, unroll_once(t), p);
    case TypeKind::Internal:
    case TypeKind::External: {
      if (t->kind != own) return std::nullopt;
      PrefixFamily fam;
      if (t->name == p) {
        for (const auto& b : t->branches) fam.push_back({b.label, {b.payload, b.cont}});
        return fam;
      }
      std::vector<PrefixFamily> subs;
      for (const auto& b : t->branches) {
        auto f = prefix(own, b.cont, p);
        if (!f) return std::nullopt;
        subs.push_back(std::move(*f));
      }
      std::vector<std::string> order;
      std::map<std::string, Ground> payloads;
      for (const auto& f : subs)
        for (const auto& [label, br] : f) {
          auto [it, inserted] = payloads.emplace(label, br.payload);
          if (inserted) order.push_back(label);
          else if (it->second != br.payload) return std::nullopt;
        }
      for (const auto& label : order) {
        Branches inner;
        for (std::size_t j = 0; j < subs.size(); ++j)
          for (const auto& [l, br] : subs[j])
            if (l == label) inner.push_back({t->branches[j].label, t->branches[j].payload, br.cont});
        fam.push_back({label, {payloads[label], choice(own, t->name, std::move(inner))}});
      }
      return fam;
    }
    default: return std::nullopt;
  }
}

void derivation_into(const Derivation& d, int indent, std::ostringstream& os) {
  os << std::string(indent * 2, ' ') << rule_name(d->rule);
  if (!d->index_set.empty()) {
    os << " {";
    for (std::size_t i = 0; i < d->index_set.size(); ++i) os << (i ? "," : "") << d->index_set[i];
    os << "}";
  }
  os << ": " << to_string(d->source) << "  ~>  " << to_string(d->result) << '\n';
  for (const auto& s : d->subs) derivation_into(s, indent + 1, os);
}

}  // namespace

CanonicalReduct canonical_reduct(const Type& t, const ReductQuery& q, int budget) {
  ReductSearch search(q);
  return search.run(t, budget);
}

std::vector<std::pair<Type, Derivation>> send_reducts(const Type& t, const std::string& p,
                                                      const std::string& l, Ground b, int fuel) {
  return all_reducts(t, ReductQuery{Direction::Send, p, l, b}, fuel);
}

std::vector<std::pair<Type, Derivation>> recv_reducts(const Type& t, const std::string& p,
                                                      const std::string& l, Ground b, int fuel) {
  return all_reducts(t, ReductQuery{Direction::Recv, p, l, b}, fuel);
}

bool sends(const std::string& p, const Type& t) { return predicate(TypeKind::Internal, p, t); }
bool recvs(const std::string& p, const Type& t) { return predicate(TypeKind::External, p, t); }

std::optional<PrefixFamily> recv_prefix(const Type& t, const std::string& p) {
  if (!recvs(p, t)) return std::nullopt;
  return prefix(TypeKind::External, t, p);
}

std::optional<PrefixFamily> send_prefix(const Type& t, const std::string& p) {
  if (!sends(p, t)) return std::nullopt;
  return prefix(TypeKind::Internal, t, p);
}

Type family_type(Direction dir, const std::string& p, const PrefixFamily& family) {
  Branches bs;
  for (const auto& [label, br] : family) bs.push_back({label, br.payload, br.cont});
  return choice(dir == Direction::Send ? TypeKind::Internal : TypeKind::External, p, std::move(bs));
}

std::string derivation_to_string(const Derivation& d) {
  std::ostringstream os;
  if (d) derivation_into(d, 0, os);
  return os.str();
}

}  // namespace mpst
