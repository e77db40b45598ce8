#pragma once

#include <vector>

#include "nesy/tensor.hpp"

namespace nesy {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  long long step = 0;
  std::vector<std::vector<double>> m;  // first moments, one entry per param
  std::vector<std::vector<double>> v;  // second moments

  void reset() {
    step = 0;
    m.clear();
    v.clear();
  }
};

// One bias-corrected Adam update over the parameter list, reading each
// tensor's accumulated gradient. Moments are created as zeros on first use.
void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamConfig& cfg);

}  // namespace nesy
