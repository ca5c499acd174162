#include "qtomo/nn/adam.hpp"

#include <cmath>

namespace qtomo::nn {

void adam_step(std::vector<double>& weights, const std::vector<double>& grads,
               AdamMoments& moments, const TrainConfig& cfg, std::uint64_t t) {
  if (grads.size() != weights.size())
    throw ShapeMismatch("gradient length does not match weights");
  if (t < 1) throw IndexOutOfRange("Adam step index starts at 1");
  if (moments.m.empty()) {
    moments.m.assign(weights.size(), 0.0);
    moments.v.assign(weights.size(), 0.0);
  }
  if (moments.m.size() != weights.size())
    throw ShapeMismatch("moment length does not match weights");

  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    moments.m[i] = b1 * moments.m[i] + (1.0 - b1) * grads[i];
    moments.v[i] = b2 * moments.v[i] + (1.0 - b2) * grads[i] * grads[i];
    double mhat = moments.m[i] / corr1;
    double vhat = moments.v[i] / corr2;
    weights[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

}  // namespace qtomo::nn
