#pragma once

#include "qtomo/nn/weights.hpp"

namespace qtomo::nn {

// Fully connected net: affine + ReLU for every hidden layer, linear output.
// Batch convention: rows are samples. Weight tensors are "lN.w" (out x in)
// and "lN.b"; gradients use the same flat layout as the weights.
class Mlp {
 public:
  // sizes = {input, hidden..., output}
  explicit Mlp(std::vector<std::size_t> sizes);

  ModelWeights& weights() { return w_; }
  const ModelWeights& weights() const { return w_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }

  struct Cache {
    RealMatrix input;
    std::vector<RealMatrix> pre;  // pre-activations per layer
  };

  RealMatrix forward(const RealMatrix& x, Cache* cache = nullptr) const;
  RealVector forward1(const RealVector& x, Cache* cache = nullptr) const;

  // Accumulates parameter gradients into grad (flat layout, caller-zeroed);
  // optionally returns the gradient with respect to the input batch.
  void backward(const Cache& cache, const RealMatrix& dout,
                std::vector<double>& grad, RealMatrix* dinput = nullptr) const;

  // Zero a single tensor pair (used for zero-initialized output layers).
  void zero_layer(std::size_t layer);

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> w_idx_, b_idx_;
  ModelWeights w_;
};

}  // namespace qtomo::nn
