#include "qtomo/nn/losses.hpp"

#include <cmath>

#include "qtomo/common.hpp"

namespace qtomo::nn {

namespace {

void check_batch(const std::vector<ComplexMatrix>& truths,
                 const std::vector<ComplexMatrix>& preds) {
  if (truths.size() != preds.size() || truths.empty())
    throw ShapeMismatch("batch sizes differ or batch is empty");
  for (std::size_t i = 0; i < truths.size(); ++i)
    if (truths[i].rows() != preds[i].rows() || truths[i].cols() != preds[i].cols())
      throw ShapeMismatch("batch item " + std::to_string(i) + " shape mismatch");
}

}  // namespace

double reconstruction_loss(const std::vector<ComplexMatrix>& truths,
                           const std::vector<ComplexMatrix>& preds) {
  check_batch(truths, preds);
  double total = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i)
    total += (truths[i] - preds[i]).norm();
  return total / static_cast<double>(truths.size());
}

double reconstruction_loss_grad(const std::vector<ComplexMatrix>& truths,
                                const std::vector<ComplexMatrix>& preds,
                                std::vector<ComplexMatrix>& dpreds) {
  check_batch(truths, preds);
  const double inv_n = 1.0 / static_cast<double>(truths.size());
  dpreds.resize(preds.size());
  double total = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ComplexMatrix diff = preds[i] - truths[i];
    double norm = diff.norm();
    total += norm;
    if (norm > 0.0)
      dpreds[i] = (inv_n / norm) * diff;
    else
      dpreds[i] = ComplexMatrix::Zero(diff.rows(), diff.cols());
  }
  return total * inv_n;
}

double cross_entropy(const RealVector& p, std::size_t target) {
  if (target >= static_cast<std::size_t>(p.size()))
    throw IndexOutOfRange("cross_entropy target " + std::to_string(target));
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) < 0.0)
      throw InvalidDistribution("negative probability " + std::to_string(p(i)));
    sum += p(i);
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw InvalidDistribution("probabilities sum to " + std::to_string(sum));
  return -std::log(std::max(p(static_cast<Eigen::Index>(target)), 1e-12));
}

RealVector softmax(const RealVector& logits) {
  RealVector shifted = logits.array() - logits.maxCoeff();
  RealVector e = shifted.array().exp();
  return e / e.sum();
}

}  // namespace qtomo::nn
