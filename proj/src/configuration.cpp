#include "mpst/configuration.hpp"

#include <sstream>

namespace mpst {

std::string to_string(const Message& m) { return m.label + "(" + to_string(m.payload) + ")"; }

void Queue::push_front(const std::string& p, Message m) { lanes_[p].push_front(std::move(m)); }
void Queue::push_back(const std::string& p, Message m) { lanes_[p].push_back(std::move(m)); }

std::optional<Message> Queue::back(const std::string& p) const {
  auto it = lanes_.find(p);
  if (it == lanes_.end() || it->second.empty()) return std::nullopt;
  return it->second.back();
}

std::optional<Message> Queue::front(const std::string& p) const {
  auto it = lanes_.find(p);
  if (it == lanes_.end() || it->second.empty()) return std::nullopt;
  return it->second.front();
}

void Queue::pop_back(const std::string& p) {
  auto it = lanes_.find(p);
  if (it == lanes_.end()) return;
  it->second.pop_back();
  if (it->second.empty()) lanes_.erase(it);
}

void Queue::pop_front(const std::string& p) {
  auto it = lanes_.find(p);
  if (it == lanes_.end()) return;
  it->second.pop_front();
  if (it->second.empty()) lanes_.erase(it);
}

bool Queue::empty() const { return lanes_.empty(); }

std::size_t Queue::size() const {
  std::size_t n = 0;
  for (const auto& [_, d] : lanes_) n += d.size();
  return n;
}

std::size_t Queue::size(const std::string& p) const {
  auto it = lanes_.find(p);
  return it == lanes_.end() ? 0 : it->second.size();
}

std::string to_string(const Queue& q) {
  if (q.empty()) return "{}";
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [p, d] : q.lanes()) {
    if (!first) os << ", ";
    first = false;
    os << p << ": [";
    for (std::size_t i = 0; i < d.size(); ++i) os << (i ? ", " : "") << to_string(d[i]);
    os << ']';
  }
  os << '}';
  return os.str();
}

Configuration initial_configuration(Comp c) { return Configuration{Queue{}, std::move(c), Queue{}}; }

std::string to_string(const Configuration& c) {
  return "<" + to_string(c.rho) + " | " + to_string(c.comp) + " | " + to_string(c.sigma) + ">";
}

std::optional<Value> result(const Configuration& c) {
  if (!c.rho.empty() || !c.sigma.empty()) return std::nullopt;
  Comp cur = c.comp;
  while (cur->kind == CompKind::LetRec || cur->kind == CompKind::Ascribe)
    cur = cur->kind == CompKind::LetRec ? cur->second : cur->first;
  if (cur->kind != CompKind::Return || !cur->vals[0].is_constant()) return std::nullopt;
  return cur->vals[0];
}

}  // namespace mpst
