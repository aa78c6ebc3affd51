#pragma once

#include <stdexcept>
#include <string>

namespace hiertraj {

// Rollout produced a non-finite state. time_index is the step at which the
// state first left the finite range (1-based, matching x_1..x_N).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int time_index, const std::string& what)
      : std::runtime_error(what), time_index_(time_index) {}
  int time_index() const { return time_index_; }

 private:
  int time_index_;
};

// The weight tuning loop at one priority level ran out of retries.
class TuningExhaustedError : public std::runtime_error {
 public:
  TuningExhaustedError(int level, const std::string& what)
      : std::runtime_error(what), level_(level) {}
  // 1-based priority level that failed.
  int level() const { return level_; }

 private:
  int level_;
};

}  // namespace hiertraj
