#include "qtomo/nn/mlp.hpp"

namespace qtomo::nn {

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ShapeMismatch("MLP needs at least input and output");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    std::string base = "l" + std::to_string(l);
    w_idx_.push_back(w_.add(base + ".w", {sizes_[l + 1], sizes_[l]}));
    b_idx_.push_back(w_.add(base + ".b", {sizes_[l + 1]}));
  }
}

RealMatrix Mlp::forward(const RealMatrix& x, Cache* cache) const {
  if (static_cast<std::size_t>(x.cols()) != sizes_.front())
    throw ShapeMismatch("MLP input width " + std::to_string(x.cols()) +
                        ", expected " + std::to_string(sizes_.front()));
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->pre.reserve(num_layers());
  }
  RealMatrix a = x;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    RealMatrix z = a * w_.mat(w_idx_[l]).transpose();
    z.rowwise() += w_.vec(b_idx_[l]).transpose();
    if (cache) cache->pre.push_back(z);
    if (l + 1 < num_layers())
      a = z.cwiseMax(0.0);
    else
      a = std::move(z);
  }
  return a;
}

RealVector Mlp::forward1(const RealVector& x, Cache* cache) const {
  RealMatrix row = x.transpose();
  RealMatrix out = forward(row, cache);
  return out.row(0).transpose();
}

void Mlp::backward(const Cache& cache, const RealMatrix& dout,
                   std::vector<double>& grad, RealMatrix* dinput) const {
  if (cache.pre.size() != num_layers())
    throw ShapeMismatch("cache does not match network depth");
  if (dout.rows() != cache.input.rows() ||
      static_cast<std::size_t>(dout.cols()) != sizes_.back())
    throw ShapeMismatch("output gradient shape mismatch");

  RealMatrix dz = dout;
  for (std::size_t l = num_layers(); l-- > 0;) {
    if (l + 1 < num_layers()) {
      // dz currently holds dL/da for this hidden layer; apply ReLU mask.
      dz = (cache.pre[l].array() > 0.0).select(dz, 0.0);
    }
    const RealMatrix act_prev =
        l == 0 ? cache.input : RealMatrix(cache.pre[l - 1].cwiseMax(0.0));
    w_.mat_in(grad, w_idx_[l]) += dz.transpose() * act_prev;
    w_.vec_in(grad, b_idx_[l]) += dz.colwise().sum().transpose();
    if (l > 0)
      dz = dz * w_.mat(w_idx_[l]);
    else if (dinput)
      *dinput = dz * w_.mat(w_idx_[0]);
  }
}

void Mlp::zero_layer(std::size_t layer) {
  w_.mat(w_idx_.at(layer)).setZero();
  w_.vec(b_idx_.at(layer)).setZero();
}

}  // namespace qtomo::nn
