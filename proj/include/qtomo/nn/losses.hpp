#pragma once

#include <vector>

#include "qtomo/linalg.hpp"

namespace qtomo::nn {

// Mean over the batch of the Frobenius norm ||rho_true - rho_pred|| (not
// squared), real and imaginary parts together.
double reconstruction_loss(const std::vector<ComplexMatrix>& truths,
                           const std::vector<ComplexMatrix>& preds);

// Same, plus d(loss)/d(pred) per batch item. At an exactly zero difference
// the gradient is defined as zero. d/dRe and d/dIm are returned as the real
// and imaginary parts of the gradient matrices.
double reconstruction_loss_grad(const std::vector<ComplexMatrix>& truths,
                                const std::vector<ComplexMatrix>& preds,
                                std::vector<ComplexMatrix>& dpreds);

// -log p[target] with p clamped below at 1e-12. p must be a distribution
// (sum within 1e-6 of 1, entries >= 0).
double cross_entropy(const RealVector& p, std::size_t target);

RealVector softmax(const RealVector& logits);

}  // namespace qtomo::nn
