#pragma once

#include "qtomo/nn/weights.hpp"

namespace qtomo::nn {

// Per-layer recurrent state; rows are batch samples.
struct LstmState {
  std::vector<RealMatrix> h, c;
};

struct LstmStepCache {
  std::vector<RealMatrix> xs;  // input to each layer (xs[0] = step input)
  std::vector<RealMatrix> h_prev, c_prev;
  std::vector<RealMatrix> i, f, g, o, c, tanh_c;
};

// Gradients carried backwards across time steps.
struct LstmCarry {
  std::vector<RealMatrix> dh, dc;
};

// Stacked LSTM (1-2 layers in practice) with a linear output head. Gate
// pre-activations are ordered [input, forget, candidate, output] inside the
// 4H-row weight blocks "lK.wx" (4H x in), "lK.wh" (4H x H), "lK.b". Head
// tensors are "head.w" (out x H), "head.b". init_params() is Glorot for all
// matrices plus a +1 forget-gate bias.
class LstmNet {
 public:
  LstmNet(std::size_t input, std::size_t hidden, std::size_t layers,
          std::size_t head_out);

  ModelWeights& weights() { return w_; }
  const ModelWeights& weights() const { return w_; }
  std::size_t input_size() const { return input_; }
  std::size_t hidden_size() const { return hidden_; }
  std::size_t layers() const { return layers_; }
  std::size_t head_size() const { return head_out_; }

  void init_params(rng::Xoshiro256pp& gen);

  LstmState zero_state(Eigen::Index batch) const;
  LstmCarry zero_carry(Eigen::Index batch) const;

  // Advances state in place; returns the top layer's hidden output.
  RealMatrix step(const RealMatrix& x, LstmState& state,
                  LstmStepCache* cache = nullptr) const;

  RealMatrix head_forward(const RealMatrix& h_top) const;
  void head_backward(const RealMatrix& h_top, const RealMatrix& dout,
                     std::vector<double>& grad, RealMatrix* dh_top) const;

  // One BPTT step: dh_top is the loss gradient on this step's top hidden
  // output; carry holds gradients from the following step and is replaced
  // with the ones for the preceding step. Parameter gradients accumulate
  // into grad (flat layout, caller-zeroed).
  void backward_step(const LstmStepCache& cache, const RealMatrix& dh_top,
                     LstmCarry& carry, std::vector<double>& grad,
                     RealMatrix* dx = nullptr) const;

 private:
  std::size_t input_, hidden_, layers_, head_out_;
  std::vector<std::size_t> wx_idx_, wh_idx_, b_idx_;
  std::size_t head_w_idx_, head_b_idx_;
  ModelWeights w_;
};

}  // namespace qtomo::nn
