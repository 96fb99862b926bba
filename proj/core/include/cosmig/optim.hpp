#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cosmig/param_store.hpp"

namespace cosmig {

// Adaptive-moment (Adam) optimizer state.
struct OptimizerState {
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
  };

  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, Moments> moments;
};

// One bias-corrected Adam update of every parameter. Grads are left in place;
// the caller zeroes them. Throws Error naming a parameter that has no grad.
void adam_step(ParamStore& params, OptimizerState& state);

}  // namespace cosmig
