#include "qtomo/models/selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qtomo/nn/losses.hpp"

namespace qtomo::models {

namespace {

// Step input layout: [Re(Pi) row-major, Im(Pi) row-major, m].
void fill_step_input(RealMatrix& x, Eigen::Index row, const ComplexMatrix& pi,
                     double m) {
  const Eigen::Index d2 = pi.size();
  const Complex* p = pi.data();
  for (Eigen::Index j = 0; j < d2; ++j) {
    x(row, j) = p[j].real();
    x(row, d2 + j) = p[j].imag();
  }
  x(row, 2 * d2) = m;
}

// Reconstructor head output: two real channels reshaped row-major to d x d,
// then Hermitized.
ComplexMatrix decode_rho(const RealMatrix& y, Eigen::Index row, Eigen::Index d) {
  ComplexMatrix a(d, d);
  const Eigen::Index d2 = d * d;
  for (Eigen::Index j = 0; j < d2; ++j)
    a.data()[j] = Complex(y(row, j), y(row, d2 + j));
  return ComplexMatrix(0.5 * (a + a.adjoint()));
}

// Chain rule of rho = (A + A^dag)/2 for a complex-pair gradient G
// (dL/dRe + i dL/dIm of rho entries): dL/dA = (G + G^dag)/2. Accumulates into
// the two output channels of the given row.
void rho_grad_to_row(const ComplexMatrix& g, RealMatrix& dy, Eigen::Index row) {
  ComplexMatrix ga = 0.5 * (g + g.adjoint());
  const Eigen::Index d2 = ga.size();
  const Complex* p = ga.data();
  for (Eigen::Index j = 0; j < d2; ++j) {
    dy(row, j) += p[j].real();
    dy(row, d2 + j) += p[j].imag();
  }
}

double outcome_of(const ComplexMatrix& pi, const ComplexMatrix& rho) {
  return (pi * rho).trace().real();
}

ComplexVector kron_vec(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector r(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    r.segment(i * b.size(), b.size()) = a(i) * b;
  return r;
}

// Custom operator Pi = |psi><psi| with psi the product of per-qubit states
// decoded from 4 reals each (re0, im0, re1, im1), normalized with an |0>
// fallback below norm 1e-9. Keeps the factors for the backward pass.
struct CustomBuilt {
  std::vector<ComplexVector> phis;  // normalized 2-vectors, qubit order
  std::vector<double> norms;        // pre-normalization 4-vector norms
  std::vector<bool> fallback;
  ComplexVector psi;
  ComplexMatrix pi;
};

CustomBuilt build_custom(const RealVector& u, std::size_t n_qubits) {
  CustomBuilt out;
  out.phis.resize(n_qubits);
  out.norms.resize(n_qubits);
  out.fallback.resize(n_qubits);
  for (std::size_t k = 0; k < n_qubits; ++k) {
    const double* s = u.data() + 4 * k;
    double norm =
        std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3]);
    out.norms[k] = norm;
    ComplexVector phi(2);
    if (norm < 1e-9) {
      out.fallback[k] = true;
      phi << Complex(1.0, 0.0), Complex(0.0, 0.0);
    } else {
      out.fallback[k] = false;
      phi << Complex(s[0], s[1]) / norm, Complex(s[2], s[3]) / norm;
    }
    out.phis[k] = std::move(phi);
  }
  out.psi = out.phis[0];
  for (std::size_t k = 1; k < n_qubits; ++k)
    out.psi = kron_vec(out.psi, out.phis[k]);
  out.pi = out.psi * out.psi.adjoint();
  return out;
}

// Backward of build_custom plus the in-loop outcome m = Tr(Pi rho_true).
// Inputs are the accumulated complex-pair gradient wrt Pi and the scalar
// dL/dm; the outcome folds in as dm * rho_true (rho Hermitian). Through
// Pi = psi psi^dag the state gradient is (G + G^dag) psi; psi is multilinear
// in the per-qubit entries, so each entry collects conj(product of the other
// factors) times the state gradient; the normalization Jacobian maps back to
// the 4 raw reals per qubit. Fallback qubits emit a constant, so their raw
// outputs get no gradient.
void custom_backward(const CustomBuilt& cb, const ComplexMatrix& g_pi,
                     double dm, const ComplexMatrix& rho_true,
                     std::size_t n_qubits, RealMatrix& dy_s, Eigen::Index row) {
  ComplexMatrix g = g_pi + dm * rho_true;
  ComplexVector g_psi = (g + g.adjoint()) * cb.psi;
  const std::size_t d = static_cast<std::size_t>(cb.psi.size());
  for (std::size_t k = 0; k < n_qubits; ++k) {
    if (cb.fallback[k]) continue;
    Complex g_phi[2] = {Complex(0, 0), Complex(0, 0)};
    for (std::size_t i = 0; i < d; ++i) {
      int b = static_cast<int>((i >> (n_qubits - 1 - k)) & 1u);
      Complex others(1.0, 0.0);
      for (std::size_t j = 0; j < n_qubits; ++j) {
        if (j == k) continue;
        others *= cb.phis[j](static_cast<int>((i >> (n_qubits - 1 - j)) & 1u));
      }
      g_phi[b] += std::conj(others) * g_psi(static_cast<Eigen::Index>(i));
    }
    // hat(u) = u/|u|: dL/du = (dL/dhat - hat (hat . dL/dhat)) / |u|.
    Eigen::Vector4d dhat(g_phi[0].real(), g_phi[0].imag(), g_phi[1].real(),
                         g_phi[1].imag());
    Eigen::Vector4d hat(cb.phis[k](0).real(), cb.phis[k](0).imag(),
                        cb.phis[k](1).real(), cb.phis[k](1).imag());
    Eigen::Vector4d du = (dhat - hat * hat.dot(dhat)) / cb.norms[k];
    for (int j = 0; j < 4; ++j) dy_s(row, static_cast<Eigen::Index>(4 * k) + j) += du(j);
  }
}

// Splits a step-input gradient back into complex-pair operator gradients and
// outcome gradients, accumulating per row.
void add_input_grad(const RealMatrix& dx, std::vector<ComplexMatrix>& acc_pi,
                    RealVector& acc_m, Eigen::Index d) {
  const Eigen::Index d2 = d * d;
  for (Eigen::Index b = 0; b < dx.rows(); ++b) {
    Complex* p = acc_pi[static_cast<std::size_t>(b)].data();
    for (Eigen::Index j = 0; j < d2; ++j)
      p[j] += Complex(dx(b, j), dx(b, d2 + j));
    acc_m(b) += dx(b, 2 * d2);
  }
}

// Softmax, masked to unused indices, renormalized. Falls back to uniform over
// the unused set if the unmasked mass underflows to zero.
RealVector masked_probabilities(const RealVector& logits,
                                const std::vector<bool>& used) {
  RealVector p = nn::softmax(logits);
  double sum = 0.0;
  std::size_t unused = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (used[static_cast<std::size_t>(i)]) {
      p(i) = 0.0;
    } else {
      sum += p(i);
      ++unused;
    }
  }
  if (unused == 0) throw AllUsed("no unused measurement index left");
  if (sum > 0.0) {
    p /= sum;
  } else {
    for (Eigen::Index i = 0; i < p.size(); ++i)
      p(i) = used[static_cast<std::size_t>(i)] ? 0.0 : 1.0 / static_cast<double>(unused);
  }
  return p;
}

// 1-based argmax over unused entries; strict comparison on an ascending scan
// breaks ties toward the lowest index.
std::size_t argmax_unused(const RealVector& p, const std::vector<bool>& used) {
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (used[static_cast<std::size_t>(i)]) continue;
    if (p(i) > best_val) {
      best_val = p(i);
      best = static_cast<std::size_t>(i) + 1;
    }
  }
  if (best == 0) throw AllUsed("no unused measurement index left");
  return best;
}

// Uniform draw from the unused indices (ascending enumeration); marks and
// returns the 1-based pick.
std::size_t random_unused(std::vector<bool>& used, rng::Xoshiro256pp& gen) {
  std::size_t remaining = 0;
  for (bool u : used) remaining += u ? 0 : 1;
  if (remaining == 0) throw AllUsed("no unused measurement index left");
  std::uint64_t j = gen.below(remaining);
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (used[i]) continue;
    if (j == 0) {
      used[i] = true;
      return i + 1;
    }
    --j;
  }
  throw AllUsed("no unused measurement index left");
}

// Episode index order: 1 first, then a uniformly ordered draw of distinct
// indices from {2..total}.
std::vector<std::size_t> random_sequence(std::size_t steps, std::size_t total,
                                         rng::Xoshiro256pp& gen) {
  std::vector<std::size_t> pool;
  pool.reserve(total - 1);
  for (std::size_t nu = 2; nu <= total; ++nu) pool.push_back(nu);
  std::vector<std::size_t> seq;
  seq.reserve(steps);
  seq.push_back(1);
  for (std::size_t l = 1; l < steps; ++l) {
    std::size_t j = static_cast<std::size_t>(gen.below(pool.size()));
    seq.push_back(pool[j]);
    pool[j] = pool.back();
    pool.pop_back();
  }
  return seq;
}

// One predefined-basis training batch in lockstep: the whole batch follows a
// single shared index sequence. At each step every unused candidate is pushed
// through a frozen copy of the reconstructor state; the batch-argmin becomes
// the selector's cross-entropy target, and the walk continues at the argmax
// of the batch-mean masked probabilities. Gradients: step-summed
// reconstruction loss through the reconstructor (BPTT), per-step
// cross-entropy through the selector; input gradients are not propagated
// (index choice is discrete).
double predefined_batch(const SelectorReconstructor& model,
                        const std::vector<const DensityMatrix*>& batch,
                        std::size_t steps, std::vector<double>& grad_r,
                        std::vector<double>& grad_s, double& ce_mean) {
  const TomoContext& ctx = tomo_context(model.n_qubits);
  const Eigen::Index d = linalg::qubit_dim(model.n_qubits);
  const Eigen::Index d2 = d * d;
  const Eigen::Index bn = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(bn);
  const std::size_t T = steps;
  const nn::LstmNet& r = model.lstm_r;
  const nn::LstmNet& s = *model.lstm_s;

  RealMatrix all_m(bn, d2);
  for (Eigen::Index b = 0; b < bn; ++b)
    all_m.row(b) =
        outcomes(*batch[static_cast<std::size_t>(b)], ctx.pset).transpose();

  nn::LstmState r_state = r.zero_state(bn);
  nn::LstmState s_state = s.zero_state(bn);
  std::vector<nn::LstmStepCache> rc(T), sc(T > 1 ? T - 1 : 0);
  std::vector<RealMatrix> h_r(T), dy_r(T);
  std::vector<RealMatrix> h_s(T > 1 ? T - 1 : 0), dlogits(T > 1 ? T - 1 : 0);

  std::vector<bool> used(static_cast<std::size_t>(d2), false);
  used[0] = true;
  std::size_t nu_cur = 1;

  double rec_loss = 0.0, ce_total = 0.0;

  for (std::size_t t = 0; t < T; ++t) {
    RealMatrix x(bn, 2 * d2 + 1);
    for (Eigen::Index b = 0; b < bn; ++b)
      fill_step_input(x, b, ctx.pset.projector(nu_cur),
                      all_m(b, static_cast<Eigen::Index>(nu_cur) - 1));
    h_r[t] = r.step(x, r_state, &rc[t]);
    RealMatrix y = r.head_forward(h_r[t]);
    dy_r[t] = RealMatrix::Zero(bn, 2 * d2);
    for (Eigen::Index b = 0; b < bn; ++b) {
      ComplexMatrix diff =
          decode_rho(y, b, d) - batch[static_cast<std::size_t>(b)]->mat();
      double l = diff.norm();
      rec_loss += l * inv_b;
      if (l > 0.0) rho_grad_to_row(ComplexMatrix(diff * (inv_b / l)), dy_r[t], b);
    }
    if (t + 1 == T) break;

    // Candidate probe: one frozen forward step per unused index.
    std::size_t target = 0;
    double target_loss = std::numeric_limits<double>::infinity();
    for (std::size_t nu = 1; nu <= static_cast<std::size_t>(d2); ++nu) {
      if (used[nu - 1]) continue;
      const ComplexMatrix& cand = ctx.pset.projector(nu);
      RealMatrix xc(bn, 2 * d2 + 1);
      for (Eigen::Index b = 0; b < bn; ++b)
        fill_step_input(xc, b, cand, all_m(b, static_cast<Eigen::Index>(nu) - 1));
      nn::LstmState probe = r_state;
      RealMatrix yc = r.head_forward(r.step(xc, probe));
      double lc = 0.0;
      for (Eigen::Index b = 0; b < bn; ++b)
        lc += (decode_rho(yc, b, d) - batch[static_cast<std::size_t>(b)]->mat())
                  .norm() * inv_b;
      if (lc < target_loss) {
        target_loss = lc;
        target = nu;
      }
    }

    h_s[t] = s.step(x, s_state, &sc[t]);
    RealMatrix logits = s.head_forward(h_s[t]);
    dlogits[t] = RealMatrix::Zero(bn, d2);
    RealVector mean_p = RealVector::Zero(d2);
    for (Eigen::Index b = 0; b < bn; ++b) {
      RealVector p = masked_probabilities(logits.row(b).transpose(), used);
      ce_total += nn::cross_entropy(p, target - 1) * inv_b;
      for (Eigen::Index j = 0; j < d2; ++j)
        if (!used[static_cast<std::size_t>(j)])
          dlogits[t](b, j) =
              (p(j) - (static_cast<std::size_t>(j) == target - 1 ? 1.0 : 0.0)) *
              inv_b;
      mean_p += p * inv_b;
    }
    nu_cur = argmax_unused(mean_p, used);
    used[nu_cur - 1] = true;
  }

  grad_r.assign(r.weights().total_size(), 0.0);
  nn::LstmCarry carry_r = r.zero_carry(bn);
  for (std::size_t t = T; t-- > 0;) {
    RealMatrix dh;
    r.head_backward(h_r[t], dy_r[t], grad_r, &dh);
    r.backward_step(rc[t], dh, carry_r, grad_r, nullptr);
  }

  grad_s.assign(s.weights().total_size(), 0.0);
  if (T > 1) {
    nn::LstmCarry carry_s = s.zero_carry(bn);
    for (std::size_t t = T - 1; t-- > 0;) {
      RealMatrix dh;
      s.head_backward(h_s[t], dlogits[t], grad_s, &dh);
      s.backward_step(sc[t], dh, carry_s, grad_s, nullptr);
    }
  }
  ce_mean = T > 1 ? ce_total / static_cast<double>(T - 1) : 0.0;
  return rec_loss;
}

}  // namespace

SelectorReconstructor SelectorReconstructor::make(SelectionMode mode,
                                                  std::size_t n_qubits,
                                                  std::uint64_t seed,
                                                  std::size_t hidden,
                                                  std::size_t layers) {
  const Eigen::Index d = linalg::qubit_dim(n_qubits);
  const std::size_t d2 = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
  const std::size_t input = 2 * d2 + 1;
  if (hidden < 1) throw InvalidSpec("hidden size must be positive");
  const std::size_t nlayers = layers != 0 ? layers : (n_qubits >= 3 ? 2 : 1);
  nn::LstmNet r(input, hidden, nlayers, 2 * d2);
  std::optional<nn::LstmNet> s;
  if (mode == SelectionMode::PredefinedBasis)
    s.emplace(input, hidden, nlayers, d2);
  else if (mode == SelectionMode::CustomOperator)
    s.emplace(input, hidden, nlayers, 4 * n_qubits);
  rng::Xoshiro256pp gen(seed);
  r.init_params(gen);
  if (s) s->init_params(gen);
  return SelectorReconstructor{mode, n_qubits, std::move(r), std::move(s)};
}

PredefinedChoice select_next_predefined(const SelectorReconstructor& model,
                                        nn::LstmState& s_state,
                                        const ComplexMatrix& prev_pi,
                                        double prev_m,
                                        const std::vector<bool>& used) {
  if (model.mode != SelectionMode::PredefinedBasis || !model.lstm_s)
    throw UnsupportedCombination("index selection needs a predefined-basis model");
  const nn::LstmNet& s = *model.lstm_s;
  if (used.size() != s.head_size())
    throw ShapeMismatch("used mask does not match the basis size");
  bool any_unused = false;
  for (bool u : used) any_unused = any_unused || !u;
  if (!any_unused) throw AllUsed("no unused measurement index left");
  const Eigen::Index d2 = prev_pi.size();
  RealMatrix x(1, 2 * d2 + 1);
  fill_step_input(x, 0, prev_pi, prev_m);
  RealMatrix h = s.step(x, s_state);
  RealVector logits = s.head_forward(h).row(0).transpose();
  PredefinedChoice ch;
  ch.probabilities = masked_probabilities(logits, used);
  ch.nu = argmax_unused(ch.probabilities, used);
  return ch;
}

ComplexMatrix select_next_custom(const SelectorReconstructor& model,
                                 nn::LstmState& s_state,
                                 const ComplexMatrix& prev_pi, double prev_m) {
  if (model.mode != SelectionMode::CustomOperator || !model.lstm_s)
    throw UnsupportedCombination("operator selection needs a custom-operator model");
  const nn::LstmNet& s = *model.lstm_s;
  const Eigen::Index d2 = prev_pi.size();
  RealMatrix x(1, 2 * d2 + 1);
  fill_step_input(x, 0, prev_pi, prev_m);
  RealMatrix h = s.step(x, s_state);
  RealVector u = s.head_forward(h).row(0).transpose();
  return build_custom(u, model.n_qubits).pi;
}

std::vector<EpisodeStep> lstm_reconstruct_episode(const SelectorReconstructor& model,
                                                  const DensityMatrix& rho,
                                                  std::size_t steps,
                                                  rng::Xoshiro256pp* gen) {
  if (steps < 1) throw InvalidSpec("episode needs at least one step");
  if (rho.n_qubits() != model.n_qubits)
    throw ShapeMismatch("state does not match the model's qubit count");
  const TomoContext& ctx = tomo_context(model.n_qubits);
  const Eigen::Index d = rho.dim();
  const Eigen::Index d2 = d * d;
  const bool indexed = model.mode != SelectionMode::CustomOperator;
  if (indexed && steps > static_cast<std::size_t>(d2))
    throw AllUsed("episode longer than the measurement basis");
  if (model.mode == SelectionMode::RandomBasis && gen == nullptr)
    throw InvalidSpec("random-basis episode needs a generator");

  nn::LstmState r_state = model.lstm_r.zero_state(1);
  nn::LstmState s_state;
  if (model.lstm_s) s_state = model.lstm_s->zero_state(1);

  std::vector<bool> used(static_cast<std::size_t>(d2), false);
  used[0] = true;
  std::size_t nu = 1;
  ComplexMatrix pi = ctx.pset.projector(1);

  std::vector<EpisodeStep> out;
  out.reserve(steps);
  for (std::size_t l = 0; l < steps; ++l) {
    double m = outcome_of(pi, rho.mat());
    RealMatrix x(1, 2 * d2 + 1);
    fill_step_input(x, 0, pi, m);
    RealMatrix h = model.lstm_r.step(x, r_state);
    RealMatrix y = model.lstm_r.head_forward(h);
    out.push_back({nu, pi, m, decode_rho(y, 0, d)});
    if (l + 1 == steps) break;
    switch (model.mode) {
      case SelectionMode::PredefinedBasis: {
        PredefinedChoice ch = select_next_predefined(model, s_state, pi, m, used);
        used[ch.nu - 1] = true;
        nu = ch.nu;
        pi = ctx.pset.projector(nu);
        break;
      }
      case SelectionMode::CustomOperator: {
        pi = select_next_custom(model, s_state, pi, m);
        nu = 0;
        break;
      }
      case SelectionMode::RandomBasis: {
        nu = random_unused(used, *gen);
        pi = ctx.pset.projector(nu);
        break;
      }
    }
  }
  return out;
}

double episode_loss_and_grad(
    const SelectorReconstructor& model,
    const std::vector<const DensityMatrix*>& batch, std::size_t steps,
    std::vector<double>* grad_r, std::vector<double>* grad_s,
    const std::vector<std::vector<std::size_t>>* rnd_sequences) {
  if (model.mode == SelectionMode::PredefinedBasis)
    throw UnsupportedCombination(
        "episode loss gradients cover the random and custom modes only");
  if (batch.empty()) throw ShapeMismatch("empty batch");
  if (steps < 1) throw InvalidSpec("episode needs at least one step");
  const TomoContext& ctx = tomo_context(model.n_qubits);
  const Eigen::Index d = linalg::qubit_dim(model.n_qubits);
  const Eigen::Index d2 = d * d;
  const Eigen::Index bn = static_cast<Eigen::Index>(batch.size());
  const std::size_t T = steps;
  const bool custom = model.mode == SelectionMode::CustomOperator;
  const bool want_grad = grad_r != nullptr && (!custom || grad_s != nullptr);

  if (!custom) {
    if (rnd_sequences == nullptr)
      throw InvalidSpec("random-basis episodes need index sequences");
    if (rnd_sequences->size() != batch.size())
      throw ShapeMismatch("sequence count does not match the batch");
    for (const auto& seq : *rnd_sequences) {
      if (seq.size() != T || seq[0] != 1)
        throw InvalidSpec("sequences must have length steps and start at 1");
      std::vector<bool> seen(static_cast<std::size_t>(d2), false);
      for (std::size_t nu : seq) {
        if (nu < 1 || nu > static_cast<std::size_t>(d2) || seen[nu - 1])
          throw IndexOutOfRange("bad episode index " + std::to_string(nu));
        seen[nu - 1] = true;
      }
    }
  }
  for (const auto* st : batch)
    if (st->n_qubits() != model.n_qubits)
      throw ShapeMismatch("batch state does not match the model's qubit count");

  const nn::LstmNet& r = model.lstm_r;

  std::vector<nn::LstmStepCache> rc, sc;
  std::vector<RealMatrix> h_r, dy_r, h_s;
  std::vector<std::vector<CustomBuilt>> built;
  if (want_grad) {
    rc.resize(T);
    h_r.resize(T);
    dy_r.resize(T);
    if (custom && T > 1) {
      sc.resize(T - 1);
      h_s.resize(T - 1);
    }
  }
  if (custom && T > 1) built.resize(T - 1);

  nn::LstmState r_state = r.zero_state(bn);
  nn::LstmState s_state;
  if (custom) s_state = model.lstm_s->zero_state(bn);

  std::vector<ComplexMatrix> pi_cur(batch.size(), ctx.pset.projector(1));
  const double inv_b = 1.0 / static_cast<double>(bn);
  double loss = 0.0;

  for (std::size_t t = 0; t < T; ++t) {
    RealMatrix x(bn, 2 * d2 + 1);
    for (Eigen::Index b = 0; b < bn; ++b) {
      auto& pi = pi_cur[static_cast<std::size_t>(b)];
      if (!custom) pi = ctx.pset.projector((*rnd_sequences)[static_cast<std::size_t>(b)][t]);
      fill_step_input(x, b, pi, outcome_of(pi, batch[static_cast<std::size_t>(b)]->mat()));
    }
    RealMatrix h = r.step(x, r_state, want_grad ? &rc[t] : nullptr);
    RealMatrix y = r.head_forward(h);
    if (want_grad) {
      h_r[t] = std::move(h);
      dy_r[t] = RealMatrix::Zero(bn, 2 * d2);
    }
    for (Eigen::Index b = 0; b < bn; ++b) {
      ComplexMatrix diff =
          decode_rho(y, b, d) - batch[static_cast<std::size_t>(b)]->mat();
      double l = diff.norm();
      loss += l * inv_b;
      if (want_grad && l > 0.0)
        rho_grad_to_row(ComplexMatrix(diff * (inv_b / l)), dy_r[t], b);
    }
    if (custom && t + 1 < T) {
      nn::LstmStepCache* scache = want_grad ? &sc[t] : nullptr;
      RealMatrix hs = model.lstm_s->step(x, s_state, scache);
      RealMatrix ys = model.lstm_s->head_forward(hs);
      built[t].reserve(batch.size());
      for (Eigen::Index b = 0; b < bn; ++b) {
        built[t].push_back(
            build_custom(RealVector(ys.row(b).transpose()), model.n_qubits));
        pi_cur[static_cast<std::size_t>(b)] = built[t].back().pi;
      }
      if (want_grad) h_s[t] = std::move(hs);
    }
  }
  if (!want_grad) return loss;

  grad_r->assign(r.weights().total_size(), 0.0);
  if (custom) grad_s->assign(model.lstm_s->weights().total_size(), 0.0);

  nn::LstmCarry carry_r = r.zero_carry(bn);
  nn::LstmCarry carry_s;
  if (custom) carry_s = model.lstm_s->zero_carry(bn);

  // Gradients wrt the inputs (Pi_t, m_t) of the step being processed; filled
  // at step t, consumed when the selector step that emitted Pi_t is reached.
  std::vector<ComplexMatrix> acc_pi;
  RealVector acc_m;

  for (std::size_t t = T; t-- > 0;) {
    RealMatrix dh;
    r.head_backward(h_r[t], dy_r[t], *grad_r, &dh);
    RealMatrix dx_r;
    r.backward_step(rc[t], dh, carry_r, *grad_r, custom ? &dx_r : nullptr);
    if (!custom) continue;

    std::vector<ComplexMatrix> new_pi(batch.size(),
                                      ComplexMatrix(ComplexMatrix::Zero(d, d)));
    RealVector new_m = RealVector::Zero(bn);
    add_input_grad(dx_r, new_pi, new_m, d);

    if (t + 1 < T) {
      // The selector step at t emitted Pi_{t+1}; fold that operator's (and
      // outcome's) accumulated gradient back through the construction.
      RealMatrix dy_s = RealMatrix::Zero(bn, static_cast<Eigen::Index>(4 * model.n_qubits));
      for (Eigen::Index b = 0; b < bn; ++b)
        custom_backward(built[t][static_cast<std::size_t>(b)],
                        acc_pi[static_cast<std::size_t>(b)], acc_m(b),
                        batch[static_cast<std::size_t>(b)]->mat(),
                        model.n_qubits, dy_s, b);
      RealMatrix dh_s;
      model.lstm_s->head_backward(h_s[t], dy_s, *grad_s, &dh_s);
      RealMatrix dx_s;
      model.lstm_s->backward_step(sc[t], dh_s, carry_s, *grad_s, &dx_s);
      add_input_grad(dx_s, new_pi, new_m, d);
    }
    acc_pi = std::move(new_pi);
    acc_m = std::move(new_m);
  }
  return loss;
}

SelectorReconstructor train_selector_reconstructor(
    const std::vector<DensityMatrix>& dataset, SelectionMode mode,
    const nn::TrainConfig& cfg, std::size_t n_qubits, std::size_t steps,
    std::size_t hidden, std::size_t layers, std::vector<TrainLogRow>* log,
    SelectorResume* resume) {
  if (dataset.empty()) throw ShapeMismatch("training set is empty");
  for (const auto& rho : dataset)
    if (rho.n_qubits() != n_qubits)
      throw ShapeMismatch("dataset state does not match qubit count");
  if (steps < 1) throw InvalidSpec("episodes need at least one step");
  const Eigen::Index d = linalg::qubit_dim(n_qubits);
  const std::size_t total = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
  if (mode != SelectionMode::CustomOperator && steps > total)
    throw AllUsed("episode longer than the measurement basis");

  SelectorReconstructor model =
      SelectorReconstructor::make(mode, n_qubits, cfg.seed, hidden, layers);
  if (resume && !resume->weights_r.empty()) {
    if (resume->weights_r.size() != model.lstm_r.weights().total_size())
      throw ShapeMismatch("resume weights do not match the architecture");
    model.lstm_r.weights().flat() = resume->weights_r;
    if (model.lstm_s) {
      if (resume->weights_s.size() != model.lstm_s->weights().total_size())
        throw ShapeMismatch("resume weights do not match the architecture");
      model.lstm_s->weights().flat() = resume->weights_s;
    } else if (!resume->weights_s.empty()) {
      throw ShapeMismatch("resume carries selector weights for a mode without one");
    }
  }

  nn::AdamMoments own_r, own_s;
  nn::AdamMoments& mom_r = resume ? resume->moments_r : own_r;
  nn::AdamMoments& mom_s = resume ? resume->moments_s : own_s;
  std::uint64_t t = resume ? resume->step : 0;

  rng::Xoshiro256pp gen(cfg.seed + 0xd1342543de82ef95ULL);

  const std::size_t bsz = std::min<std::size_t>(cfg.batch_size, dataset.size());
  const std::size_t steps_per_epoch = dataset.size() / bsz;

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> grad_r, grad_s;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[gen.below(i)]);

    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      std::vector<const DensityMatrix*> batch(bsz);
      for (std::size_t s = 0; s < bsz; ++s)
        batch[s] = &dataset[order[step * bsz + s]];

      double loss = 0.0, aux = 0.0;
      if (mode == SelectionMode::PredefinedBasis) {
        loss = predefined_batch(model, batch, steps, grad_r, grad_s, aux);
      } else if (mode == SelectionMode::CustomOperator) {
        loss = episode_loss_and_grad(model, batch, steps, &grad_r, &grad_s);
      } else {
        std::vector<std::vector<std::size_t>> seqs(bsz);
        for (auto& seq : seqs) seq = random_sequence(steps, total, gen);
        loss = episode_loss_and_grad(model, batch, steps, &grad_r, &grad_s, &seqs);
      }

      ++t;
      nn::adam_step(model.lstm_r.weights().flat(), grad_r, mom_r, cfg, t);
      if (model.lstm_s)
        nn::adam_step(model.lstm_s->weights().flat(), grad_s, mom_s, cfg, t);
      if (log) log->push_back({epoch, step, loss, aux});
    }
  }
  if (resume) resume->step = t;
  return model;
}

std::vector<std::vector<ComplexMatrix>> episode_reconstructions(
    const SelectorReconstructor& model,
    const std::vector<const DensityMatrix*>& states,
    const std::vector<std::size_t>& step_marks, std::uint64_t seed) {
  std::vector<std::vector<ComplexMatrix>> out(step_marks.size());
  if (step_marks.empty()) return out;
  std::size_t T = 0;
  for (std::size_t mark : step_marks) {
    if (mark < 1) throw InvalidSpec("step marks are 1-based step counts");
    T = std::max(T, mark);
  }
  const TomoContext& ctx = tomo_context(model.n_qubits);
  const Eigen::Index d = linalg::qubit_dim(model.n_qubits);
  const Eigen::Index d2 = d * d;
  const bool indexed = model.mode != SelectionMode::CustomOperator;
  if (indexed && T > static_cast<std::size_t>(d2))
    throw AllUsed("episode longer than the measurement basis");
  for (auto& v : out) v.resize(states.size());
  if (states.empty()) return out;
  for (const auto* st : states)
    if (st->n_qubits() != model.n_qubits)
      throw ShapeMismatch("state does not match the model's qubit count");
  const Eigen::Index bn = static_cast<Eigen::Index>(states.size());

  // Full outcome tables for the indexed modes; custom operators are priced
  // per step.
  RealMatrix all_m;
  if (indexed) {
    all_m.resize(bn, d2);
    for (Eigen::Index b = 0; b < bn; ++b)
      all_m.row(b) =
          outcomes(*states[static_cast<std::size_t>(b)], ctx.pset).transpose();
  }

  std::vector<std::size_t> nu_cur(states.size(), 1);
  std::vector<ComplexMatrix> pi_cur;
  if (!indexed) pi_cur.assign(states.size(), ctx.pset.projector(1));
  std::vector<std::vector<bool>> used(
      states.size(), std::vector<bool>(static_cast<std::size_t>(d2), false));
  for (auto& u : used) u[0] = true;

  std::vector<rng::Xoshiro256pp> gens;
  if (model.mode == SelectionMode::RandomBasis) {
    gens.reserve(states.size());
    for (std::size_t b = 0; b < states.size(); ++b) {
      std::uint64_t st = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(b) + 1);
      gens.emplace_back(rng::splitmix64(st));
    }
  }

  nn::LstmState r_state = model.lstm_r.zero_state(bn);
  nn::LstmState s_state;
  if (model.lstm_s) s_state = model.lstm_s->zero_state(bn);

  for (std::size_t t = 0; t < T; ++t) {
    RealMatrix x(bn, 2 * d2 + 1);
    for (Eigen::Index b = 0; b < bn; ++b) {
      const std::size_t bi = static_cast<std::size_t>(b);
      if (indexed)
        fill_step_input(x, b, ctx.pset.projector(nu_cur[bi]),
                        all_m(b, static_cast<Eigen::Index>(nu_cur[bi]) - 1));
      else
        fill_step_input(x, b, pi_cur[bi],
                        outcome_of(pi_cur[bi], states[bi]->mat()));
    }
    RealMatrix h = model.lstm_r.step(x, r_state);
    RealMatrix y = model.lstm_r.head_forward(h);
    for (std::size_t mi = 0; mi < step_marks.size(); ++mi)
      if (step_marks[mi] == t + 1)
        for (Eigen::Index b = 0; b < bn; ++b)
          out[mi][static_cast<std::size_t>(b)] = decode_rho(y, b, d);
    if (t + 1 == T) break;

    switch (model.mode) {
      case SelectionMode::PredefinedBasis: {
        RealMatrix hs = model.lstm_s->step(x, s_state);
        RealMatrix logits = model.lstm_s->head_forward(hs);
        for (Eigen::Index b = 0; b < bn; ++b) {
          const std::size_t bi = static_cast<std::size_t>(b);
          RealVector p = masked_probabilities(logits.row(b).transpose(), used[bi]);
          nu_cur[bi] = argmax_unused(p, used[bi]);
          used[bi][nu_cur[bi] - 1] = true;
        }
        break;
      }
      case SelectionMode::CustomOperator: {
        RealMatrix hs = model.lstm_s->step(x, s_state);
        RealMatrix ys = model.lstm_s->head_forward(hs);
        for (Eigen::Index b = 0; b < bn; ++b)
          pi_cur[static_cast<std::size_t>(b)] = build_custom(
              RealVector(ys.row(b).transpose()), model.n_qubits).pi;
        break;
      }
      case SelectionMode::RandomBasis: {
        for (std::size_t b = 0; b < states.size(); ++b)
          nu_cur[b] = random_unused(used[b], gens[b]);
        break;
      }
    }
  }
  return out;
}

}  // namespace qtomo::models
