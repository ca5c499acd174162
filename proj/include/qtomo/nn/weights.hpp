#pragma once

#include <string>
#include <vector>

#include "qtomo/linalg.hpp"
#include "qtomo/rng.hpp"

namespace qtomo::nn {

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;  // {rows, cols} or {len}
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Named parameter tensors over one contiguous flat buffer. The flat view is
// the serialization and optimizer layout: tensors in registration order,
// row-major within each tensor.
class ModelWeights {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape);

  Eigen::Map<RealMatrix> mat(std::size_t idx);
  Eigen::Map<const RealMatrix> mat(std::size_t idx) const;
  Eigen::Map<RealVector> vec(std::size_t idx);
  Eigen::Map<const RealVector> vec(std::size_t idx) const;

  // Same layout over an external buffer (gradients).
  Eigen::Map<RealMatrix> mat_in(std::vector<double>& buf, std::size_t idx) const;
  Eigen::Map<RealVector> vec_in(std::vector<double>& buf, std::size_t idx) const;

  std::vector<double>& flat() { return flat_; }
  const std::vector<double>& flat() const { return flat_; }
  const std::vector<TensorSpec>& specs() const { return specs_; }
  std::size_t total_size() const { return flat_.size(); }
  std::size_t index_of(const std::string& name) const;

  // Uniform +-sqrt(6/(fan_in+fan_out)) for 2-D tensors (shape {out, in}),
  // zeros for 1-D tensors. Draws in registration order, row-major.
  void init_glorot(rng::Xoshiro256pp& gen);

 private:
  const TensorSpec& checked(std::size_t idx, std::size_t ndim) const;
  std::vector<TensorSpec> specs_;
  std::vector<double> flat_;
};

}  // namespace qtomo::nn
