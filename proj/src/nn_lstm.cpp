#include "qtomo/nn/lstm.hpp"

namespace qtomo::nn {

namespace {

RealMatrix sigmoid(const RealMatrix& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

}  // namespace

LstmNet::LstmNet(std::size_t input, std::size_t hidden, std::size_t layers,
                 std::size_t head_out)
    : input_(input), hidden_(hidden), layers_(layers), head_out_(head_out) {
  if (layers_ < 1) throw ShapeMismatch("LSTM needs at least one layer");
  for (std::size_t l = 0; l < layers_; ++l) {
    std::size_t in_l = l == 0 ? input_ : hidden_;
    std::string base = "l" + std::to_string(l);
    wx_idx_.push_back(w_.add(base + ".wx", {4 * hidden_, in_l}));
    wh_idx_.push_back(w_.add(base + ".wh", {4 * hidden_, hidden_}));
    b_idx_.push_back(w_.add(base + ".b", {4 * hidden_}));
  }
  head_w_idx_ = w_.add("head.w", {head_out_, hidden_});
  head_b_idx_ = w_.add("head.b", {head_out_});
}

void LstmNet::init_params(rng::Xoshiro256pp& gen) {
  w_.init_glorot(gen);
  const Eigen::Index h = static_cast<Eigen::Index>(hidden_);
  for (std::size_t l = 0; l < layers_; ++l)
    w_.vec(b_idx_[l]).segment(h, h).setConstant(1.0);
}

LstmState LstmNet::zero_state(Eigen::Index batch) const {
  LstmState s;
  s.h.assign(layers_, RealMatrix::Zero(batch, hidden_));
  s.c.assign(layers_, RealMatrix::Zero(batch, hidden_));
  return s;
}

LstmCarry LstmNet::zero_carry(Eigen::Index batch) const {
  LstmCarry c;
  c.dh.assign(layers_, RealMatrix::Zero(batch, hidden_));
  c.dc.assign(layers_, RealMatrix::Zero(batch, hidden_));
  return c;
}

RealMatrix LstmNet::step(const RealMatrix& x, LstmState& state,
                         LstmStepCache* cache) const {
  if (static_cast<std::size_t>(x.cols()) != input_)
    throw ShapeMismatch("LSTM input width " + std::to_string(x.cols()));
  if (state.h.size() != layers_)
    throw ShapeMismatch("LSTM state does not match layer count");
  const Eigen::Index h = static_cast<Eigen::Index>(hidden_);
  if (cache) {
    cache->xs.clear(); cache->h_prev.clear(); cache->c_prev.clear();
    cache->i.clear(); cache->f.clear(); cache->g.clear(); cache->o.clear();
    cache->c.clear(); cache->tanh_c.clear();
  }
  RealMatrix in = x;
  for (std::size_t l = 0; l < layers_; ++l) {
    RealMatrix z = in * w_.mat(wx_idx_[l]).transpose() +
                   state.h[l] * w_.mat(wh_idx_[l]).transpose();
    z.rowwise() += w_.vec(b_idx_[l]).transpose();
    RealMatrix gi = sigmoid(z.middleCols(0, h));
    RealMatrix gf = sigmoid(z.middleCols(h, h));
    RealMatrix gg = z.middleCols(2 * h, h).array().tanh().matrix();
    RealMatrix go = sigmoid(z.middleCols(3 * h, h));
    RealMatrix c_new = gf.cwiseProduct(state.c[l]) + gi.cwiseProduct(gg);
    RealMatrix tc = c_new.array().tanh().matrix();
    RealMatrix h_new = go.cwiseProduct(tc);
    if (cache) {
      cache->xs.push_back(in);
      cache->h_prev.push_back(state.h[l]);
      cache->c_prev.push_back(state.c[l]);
      cache->i.push_back(gi);
      cache->f.push_back(gf);
      cache->g.push_back(gg);
      cache->o.push_back(go);
      cache->c.push_back(c_new);
      cache->tanh_c.push_back(tc);
    }
    state.c[l] = std::move(c_new);
    state.h[l] = h_new;
    in = std::move(h_new);
  }
  return in;
}

RealMatrix LstmNet::head_forward(const RealMatrix& h_top) const {
  RealMatrix out = h_top * w_.mat(head_w_idx_).transpose();
  out.rowwise() += w_.vec(head_b_idx_).transpose();
  return out;
}

void LstmNet::head_backward(const RealMatrix& h_top, const RealMatrix& dout,
                            std::vector<double>& grad, RealMatrix* dh_top) const {
  w_.mat_in(grad, head_w_idx_) += dout.transpose() * h_top;
  w_.vec_in(grad, head_b_idx_) += dout.colwise().sum().transpose();
  if (dh_top) *dh_top = dout * w_.mat(head_w_idx_);
}

void LstmNet::backward_step(const LstmStepCache& cache, const RealMatrix& dh_top,
                            LstmCarry& carry, std::vector<double>& grad,
                            RealMatrix* dx) const {
  if (cache.xs.size() != layers_)
    throw ShapeMismatch("LSTM cache does not match layer count");
  RealMatrix dx_above;
  for (std::size_t l = layers_; l-- > 0;) {
    RealMatrix dh = carry.dh[l];
    if (l + 1 == layers_)
      dh += dh_top;
    else
      dh += dx_above;

    const RealMatrix& tc = cache.tanh_c[l];
    RealMatrix d_o = dh.cwiseProduct(tc);
    RealMatrix dc = carry.dc[l] +
        RealMatrix(dh.cwiseProduct(cache.o[l])
                       .cwiseProduct((1.0 - tc.array().square()).matrix()));
    RealMatrix d_i = dc.cwiseProduct(cache.g[l]);
    RealMatrix d_g = dc.cwiseProduct(cache.i[l]);
    RealMatrix d_f = dc.cwiseProduct(cache.c_prev[l]);
    carry.dc[l] = dc.cwiseProduct(cache.f[l]);

    const Eigen::Index h = static_cast<Eigen::Index>(hidden_);
    RealMatrix dz(dh.rows(), 4 * h);
    dz.middleCols(0, h) =
        d_i.cwiseProduct(cache.i[l]).cwiseProduct((1.0 - cache.i[l].array()).matrix());
    dz.middleCols(h, h) =
        d_f.cwiseProduct(cache.f[l]).cwiseProduct((1.0 - cache.f[l].array()).matrix());
    dz.middleCols(2 * h, h) =
        d_g.cwiseProduct((1.0 - cache.g[l].array().square()).matrix());
    dz.middleCols(3 * h, h) =
        d_o.cwiseProduct(cache.o[l]).cwiseProduct((1.0 - cache.o[l].array()).matrix());

    w_.mat_in(grad, wx_idx_[l]) += dz.transpose() * cache.xs[l];
    w_.mat_in(grad, wh_idx_[l]) += dz.transpose() * cache.h_prev[l];
    w_.vec_in(grad, b_idx_[l]) += dz.colwise().sum().transpose();

    carry.dh[l] = dz * w_.mat(wh_idx_[l]);
    RealMatrix dx_l = dz * w_.mat(wx_idx_[l]);
    if (l == 0) {
      if (dx) *dx = std::move(dx_l);
    } else {
      dx_above = std::move(dx_l);
    }
  }
}

}  // namespace qtomo::nn
