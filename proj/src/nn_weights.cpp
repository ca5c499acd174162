#include "qtomo/nn/weights.hpp"

#include <cmath>

namespace qtomo::nn {

std::size_t ModelWeights::add(std::string name, std::vector<std::size_t> shape) {
  if (shape.empty() || shape.size() > 2)
    throw ShapeMismatch("tensor rank must be 1 or 2");
  std::size_t size = 1;
  for (std::size_t s : shape) {
    if (s == 0) throw ShapeMismatch("zero-sized tensor dimension");
    size *= s;
  }
  TensorSpec spec{std::move(name), std::move(shape), flat_.size(), size};
  flat_.resize(flat_.size() + size, 0.0);
  specs_.push_back(std::move(spec));
  return specs_.size() - 1;
}

const TensorSpec& ModelWeights::checked(std::size_t idx, std::size_t ndim) const {
  if (idx >= specs_.size()) throw IndexOutOfRange("tensor index " + std::to_string(idx));
  if (specs_[idx].shape.size() != ndim)
    throw ShapeMismatch("tensor " + specs_[idx].name + " has rank " +
                        std::to_string(specs_[idx].shape.size()));
  return specs_[idx];
}

Eigen::Map<RealMatrix> ModelWeights::mat(std::size_t idx) {
  const TensorSpec& s = checked(idx, 2);
  return {flat_.data() + s.offset, static_cast<Eigen::Index>(s.shape[0]),
          static_cast<Eigen::Index>(s.shape[1])};
}

Eigen::Map<const RealMatrix> ModelWeights::mat(std::size_t idx) const {
  const TensorSpec& s = checked(idx, 2);
  return {flat_.data() + s.offset, static_cast<Eigen::Index>(s.shape[0]),
          static_cast<Eigen::Index>(s.shape[1])};
}

Eigen::Map<RealVector> ModelWeights::vec(std::size_t idx) {
  const TensorSpec& s = checked(idx, 1);
  return {flat_.data() + s.offset, static_cast<Eigen::Index>(s.shape[0])};
}

Eigen::Map<const RealVector> ModelWeights::vec(std::size_t idx) const {
  const TensorSpec& s = checked(idx, 1);
  return {flat_.data() + s.offset, static_cast<Eigen::Index>(s.shape[0])};
}

Eigen::Map<RealMatrix> ModelWeights::mat_in(std::vector<double>& buf,
                                            std::size_t idx) const {
  const TensorSpec& s = checked(idx, 2);
  if (buf.size() != flat_.size()) throw ShapeMismatch("buffer does not match layout");
  return {buf.data() + s.offset, static_cast<Eigen::Index>(s.shape[0]),
          static_cast<Eigen::Index>(s.shape[1])};
}

Eigen::Map<RealVector> ModelWeights::vec_in(std::vector<double>& buf,
                                            std::size_t idx) const {
  const TensorSpec& s = checked(idx, 1);
  if (buf.size() != flat_.size()) throw ShapeMismatch("buffer does not match layout");
  return {buf.data() + s.offset, static_cast<Eigen::Index>(s.shape[0])};
}

std::size_t ModelWeights::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i)
    if (specs_[i].name == name) return i;
  throw IndexOutOfRange("no tensor named " + name);
}

void ModelWeights::init_glorot(rng::Xoshiro256pp& gen) {
  for (const TensorSpec& s : specs_) {
    if (s.shape.size() == 2) {
      double limit = std::sqrt(6.0 / (s.shape[0] + s.shape[1]));
      for (std::size_t i = 0; i < s.size; ++i)
        flat_[s.offset + i] = limit * (2.0 * gen.uniform() - 1.0);
    } else {
      for (std::size_t i = 0; i < s.size; ++i) flat_[s.offset + i] = 0.0;
    }
  }
}

}  // namespace qtomo::nn
