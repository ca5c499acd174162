#pragma once

#include <cstdint>
#include <vector>

#include "qtomo/common.hpp"

namespace qtomo::nn {

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  double ortho_weight = 0.1;
};

struct AdamMoments {
  std::vector<double> m, v;
};

// Standard Adam with bias correction. t is 1-based; moments are resized to
// match on first use.
void adam_step(std::vector<double>& weights, const std::vector<double>& grads,
               AdamMoments& moments, const TrainConfig& cfg, std::uint64_t t);

}  // namespace qtomo::nn
