#pragma once

#include "riccatitron/common.hpp"

namespace riccatitron {

/// Closed-loop controller contract: each round the simulator calls Act with
/// the current state, applies the input, then reveals w_t through Observe.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Vector Act(const Vector& x) = 0;
  virtual void Observe(const Vector& w) = 0;
};

}  // namespace riccatitron
