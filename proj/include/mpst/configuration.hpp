#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>

#include "mpst/syntax.hpp"

namespace mpst {

struct Message {
  std::string label;
  Value payload;  // always a constant

  bool operator==(const Message& o) const { return label == o.label && payload == o.payload; }
  bool operator<(const Message& o) const {
    if (label != o.label) return label < o.label;
    return payload < o.payload;
  }
};

std::string to_string(const Message& m);

// Per-participant FIFO. New messages enter at the front and leave from the back.
class Queue {
 public:
  void push_front(const std::string& p, Message m);
  void push_back(const std::string& p, Message m);
  std::optional<Message> back(const std::string& p) const;
  std::optional<Message> front(const std::string& p) const;
  void pop_back(const std::string& p);
  void pop_front(const std::string& p);

  bool empty() const;
  std::size_t size() const;
  std::size_t size(const std::string& p) const;
  const std::map<std::string, std::deque<Message>>& lanes() const { return lanes_; }

  bool operator==(const Queue& o) const { return lanes_ == o.lanes_; }
  bool operator<(const Queue& o) const { return lanes_ < o.lanes_; }

 private:
  std::map<std::string, std::deque<Message>> lanes_;  // empty lanes are erased
};

std::string to_string(const Queue& q);

struct Configuration {
  Queue rho;  // received, not yet consumed
  Comp comp;
  Queue sigma;  // produced, not yet delivered
};

Configuration initial_configuration(Comp c);

std::string to_string(const Configuration& c);

// Defined when both queues are empty and the computation is a return under
// letrec frames (and ascriptions) only.
std::optional<Value> result(const Configuration& c);

}  // namespace mpst
