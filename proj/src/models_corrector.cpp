#include "qtomo/models/corrector.hpp"

#include <cmath>

#include "qtomo/nn/losses.hpp"

namespace qtomo::models {

namespace {

// Flattened Pauli basis, one row per Gamma_mu, for coefficient <-> matrix
// conversion as plain GEMV.
struct GammaFlat {
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows;
};

const GammaFlat& gamma_flat(std::size_t n_qubits) {
  static const std::vector<GammaFlat>* cache = [] {
    auto* all = new std::vector<GammaFlat>;
    for (std::size_t n = 1; n <= 4; ++n) {
      const TomoContext& ctx = tomo_context(n);
      Eigen::Index d = Eigen::Index{1} << n;
      GammaFlat g;
      g.rows.resize(ctx.paulis.gammas.size(), d * d);
      for (std::size_t mu = 0; mu < ctx.paulis.gammas.size(); ++mu)
        g.rows.row(mu) = Eigen::Map<const ComplexVector>(
            ctx.paulis.gammas[mu].data(), d * d).transpose();
      all->push_back(std::move(g));
    }
    return all;
  }();
  return (*cache)[n_qubits - 1];
}

ComplexMatrix coeffs_to_matrix(const RealVector& coeffs, std::size_t n_qubits) {
  const GammaFlat& g = gamma_flat(n_qubits);
  Eigen::Index d = Eigen::Index{1} << n_qubits;
  ComplexVector flat = g.rows.transpose() * coeffs.cast<Complex>();
  return Eigen::Map<const ComplexMatrix>(flat.data(), d, d);
}

RealVector matrix_grad_to_coeffs(const ComplexMatrix& w, std::size_t n_qubits) {
  const GammaFlat& g = gamma_flat(n_qubits);
  Eigen::Index d = w.rows();
  Eigen::Map<const ComplexVector> wflat(w.data(), d * d);
  RealVector out(g.rows.rows());
  for (Eigen::Index mu = 0; mu < g.rows.rows(); ++mu)
    out(mu) = g.rows.row(mu).dot(wflat).real();
  return out;
}

void encode_slot(double* dst, const ComplexMatrix& pi, double m, bool with_m) {
  Eigen::Index n = pi.size();
  for (Eigen::Index k = 0; k < n; ++k) dst[k] = pi.data()[k].real();
  for (Eigen::Index k = 0; k < n; ++k) dst[n + k] = pi.data()[k].imag();
  if (with_m) dst[2 * n] = m;
}

CorrectionTerms decode_terms(const CorrectorModel& model, const RealVector& y) {
  Eigen::Index dim2 = Eigen::Index{1} << (2 * model.n_qubits);
  Eigen::Index m = static_cast<Eigen::Index>(model.m_size);
  CorrectionTerms t;
  t.b = Eigen::Map<const RealMatrix>(y.data(), dim2, m);
  t.c = y.segment(dim2 * m, dim2);
  if (model.variant == CorrectorVariant::Quadratic) {
    std::vector<RealMatrix> s(dim2);
    for (Eigen::Index mu = 0; mu < dim2; ++mu) {
      Eigen::Map<const RealMatrix> raw(y.data() + dim2 * m + dim2 + mu * m * m, m, m);
      s[mu] = 0.5 * (raw + raw.transpose());
    }
    t.s = std::move(s);
  }
  return t;
}

}  // namespace

std::size_t CorrectorModel::input_size(CorrectorVariant variant,
                                       std::size_t n_qubits, std::size_t m_size) {
  std::size_t d2 = std::size_t{1} << (2 * n_qubits);
  return m_size * (2 * d2 + (variant == CorrectorVariant::FullM ? 1 : 0));
}

std::size_t CorrectorModel::output_size(CorrectorVariant variant,
                                        std::size_t n_qubits, std::size_t m_size) {
  std::size_t dim2 = std::size_t{1} << (2 * n_qubits);
  std::size_t out = dim2 * m_size + dim2;
  if (variant == CorrectorVariant::Quadratic) out += dim2 * m_size * m_size;
  return out;
}

CorrectorModel CorrectorModel::make(CorrectorVariant variant, std::size_t n_qubits,
                                    std::size_t m_size, std::uint64_t seed,
                                    std::size_t hidden, std::size_t hidden_layers) {
  std::size_t total = std::size_t{1} << (2 * n_qubits);
  if (m_size < 1 || m_size > total)
    throw IndexOutOfRange("corrector M must be in 1..4^N");
  std::vector<std::size_t> sizes;
  sizes.push_back(input_size(variant, n_qubits, m_size));
  for (std::size_t i = 0; i < hidden_layers; ++i) sizes.push_back(hidden);
  sizes.push_back(output_size(variant, n_qubits, m_size));
  CorrectorModel model{variant, n_qubits, m_size, nn::Mlp(std::move(sizes))};
  rng::Xoshiro256pp gen(seed);
  model.mlp.weights().init_glorot(gen);
  model.mlp.zero_layer(model.mlp.num_layers() - 1);
  return model;
}

RealVector encode_input(const MeasurementRecord& record, CorrectorVariant variant) {
  if (record.size() == 0) return RealVector(0);
  Eigen::Index d2 = record.operators[0].size();
  bool with_m = variant == CorrectorVariant::FullM;
  Eigen::Index slot = 2 * d2 + (with_m ? 1 : 0);
  RealVector x(slot * static_cast<Eigen::Index>(record.size()));
  for (std::size_t i = 0; i < record.size(); ++i)
    encode_slot(x.data() + slot * static_cast<Eigen::Index>(i), record.operators[i],
                record.outcomes(i), with_m);
  return x;
}

CorrectionTerms corrector_predict(const CorrectorModel& model,
                                  const MeasurementRecord& record) {
  if (record.size() != model.m_size)
    throw ShapeMismatch("record has " + std::to_string(record.size()) +
                        " measurements, model expects " + std::to_string(model.m_size));
  RealVector y = model.mlp.forward1(encode_input(record, model.variant));
  return decode_terms(model, y);
}

std::vector<ComplexMatrix> corrector_reconstruct_batch(
    const CorrectorModel& model, const std::vector<std::size_t>& subset,
    const std::vector<const DensityMatrix*>& states) {
  const TomoContext& ctx = tomo_context(model.n_qubits);
  if (subset.size() != model.m_size)
    throw ShapeMismatch("subset size does not match model M");
  Eigen::Index mm = static_cast<Eigen::Index>(model.m_size);
  RealMatrix b_sub(mm, ctx.b_full.cols());
  for (Eigen::Index i = 0; i < mm; ++i)
    b_sub.row(i) = ctx.b_full.row(subset[i] - 1);
  RealMatrix b_pinv = linalg::pseudoinverse(b_sub);

  bool with_m = model.variant == CorrectorVariant::FullM;
  Eigen::Index d2 = Eigen::Index{1} << (2 * model.n_qubits);
  Eigen::Index slot = 2 * d2 + (with_m ? 1 : 0);
  RealMatrix x(states.size(), slot * mm);
  RealMatrix ms(states.size(), mm);
  for (std::size_t s = 0; s < states.size(); ++s) {
    RealVector all = outcomes(*states[s], ctx.pset);
    for (Eigen::Index i = 0; i < mm; ++i) {
      ms(s, i) = all(subset[i] - 1);
      encode_slot(x.data() + s * x.cols() + slot * i,
                  ctx.pset.projectors[subset[i] - 1], ms(s, i), with_m);
    }
  }
  RealMatrix y = model.mlp.forward(x);
  std::vector<ComplexMatrix> out;
  out.reserve(states.size());
  for (std::size_t s = 0; s < states.size(); ++s) {
    CorrectionTerms terms = decode_terms(model, y.row(s).transpose());
    RealVector m = ms.row(s).transpose();
    RealVector coeffs = b_pinv * m + terms.b * m + terms.c;
    if (terms.s)
      for (Eigen::Index mu = 0; mu < coeffs.size(); ++mu)
        coeffs(mu) += m.dot((*terms.s)[mu] * m);
    out.push_back(coeffs_to_matrix(coeffs, model.n_qubits));
  }
  return out;
}

CorrectorModel train_corrector(const std::vector<DensityMatrix>& dataset,
                               const std::optional<std::vector<std::size_t>>& subset,
                               CorrectorVariant variant, const nn::TrainConfig& cfg,
                               std::size_t n_qubits, std::size_t m_size,
                               std::vector<TrainLogRow>* log,
                               nn::AdamMoments* resume_moments,
                               std::uint64_t* resume_step,
                               const std::vector<double>* resume_weights) {
  if (dataset.empty()) throw ShapeMismatch("training set is empty");
  for (const auto& rho : dataset)
    if (rho.n_qubits() != n_qubits)
      throw ShapeMismatch("dataset state does not match qubit count");
  if (subset && subset->size() != m_size)
    throw ShapeMismatch("fixed subset size does not match M");

  const TomoContext& ctx = tomo_context(n_qubits);
  std::size_t total = ctx.pset.size();
  if (subset) {
    std::vector<bool> seen(total + 1, false);
    for (std::size_t nu : *subset) {
      if (nu < 1 || nu > total || seen[nu])
        throw IndexOutOfRange("bad fixed-subset index " + std::to_string(nu));
      seen[nu] = true;
    }
  }
  CorrectorModel model = CorrectorModel::make(variant, n_qubits, m_size, cfg.seed);
  if (resume_weights) {
    if (resume_weights->size() != model.mlp.weights().total_size())
      throw ShapeMismatch("resume weights do not match architecture");
    model.mlp.weights().flat() = *resume_weights;
  }
  rng::Xoshiro256pp gen(cfg.seed + 0x517cc1b727220a95ULL);

  // Full outcome vectors, computed once.
  std::vector<RealVector> all_m;
  all_m.reserve(dataset.size());
  for (const auto& rho : dataset) all_m.push_back(outcomes(rho, ctx.pset));

  bool with_m = variant == CorrectorVariant::FullM;
  Eigen::Index d2 = Eigen::Index{1} << (2 * n_qubits);
  Eigen::Index mm = static_cast<Eigen::Index>(m_size);
  Eigen::Index slot = 2 * d2 + (with_m ? 1 : 0);
  Eigen::Index bsz = static_cast<Eigen::Index>(
      std::min<std::size_t>(cfg.batch_size, dataset.size()));

  nn::AdamMoments own_moments;
  nn::AdamMoments& moments = resume_moments ? *resume_moments : own_moments;
  std::uint64_t t = resume_step ? *resume_step : 0;

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> grad(model.mlp.weights().total_size());
  std::size_t steps_per_epoch = dataset.size() / static_cast<std::size_t>(bsz);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates shuffle of the visiting order.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[gen.below(i)]);

    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      std::vector<std::size_t> sub =
          subset ? *subset
                 : [&] {
                     auto zero_based = rng::sample_without_replacement(m_size, total, gen);
                     for (auto& v : zero_based) ++v;
                     return zero_based;
                   }();
      RealMatrix b_sub(mm, ctx.b_full.cols());
      for (Eigen::Index i = 0; i < mm; ++i)
        b_sub.row(i) = ctx.b_full.row(sub[i] - 1);
      RealMatrix b_pinv = linalg::pseudoinverse(b_sub);

      RealMatrix x(bsz, slot * mm);
      RealMatrix ms(bsz, mm);
      for (Eigen::Index s = 0; s < bsz; ++s) {
        const RealVector& all = all_m[order[step * bsz + s]];
        for (Eigen::Index i = 0; i < mm; ++i) {
          ms(s, i) = all(sub[i] - 1);
          encode_slot(x.data() + s * x.cols() + slot * i,
                      ctx.pset.projectors[sub[i] - 1], ms(s, i), with_m);
        }
      }

      nn::Mlp::Cache cache;
      RealMatrix y = model.mlp.forward(x, &cache);
      RealMatrix dy = RealMatrix::Zero(y.rows(), y.cols());

      double loss_sum = 0.0, ortho_sum = 0.0;
      const double inv_b = 1.0 / static_cast<double>(bsz);
      for (Eigen::Index s = 0; s < bsz; ++s) {
        CorrectionTerms terms = decode_terms(model, y.row(s).transpose());
        RealVector m = ms.row(s).transpose();
        RealVector coeffs = b_pinv * m + terms.b * m + terms.c;
        if (terms.s)
          for (Eigen::Index mu = 0; mu < d2; ++mu)
            coeffs(mu) += m.dot((*terms.s)[mu] * m);
        ComplexMatrix pred = coeffs_to_matrix(coeffs, n_qubits);
        const ComplexMatrix& truth = dataset[order[step * bsz + s]].mat();

        ComplexMatrix diff = pred - truth;
        double norm = diff.norm();
        loss_sum += norm * inv_b;
        RealVector dcoeff = norm > 0.0
            ? RealVector(matrix_grad_to_coeffs(diff, n_qubits) * (inv_b / norm))
            : RealVector(RealVector::Zero(d2));

        // Orthogonality penalty on v = b m + c: squared max row residual.
        RealVector v = terms.b * m + terms.c;
        double r = 0.0;
        Eigen::Index worst = 0;
        for (Eigen::Index i = 0; i < mm; ++i) {
          double dot = ctx.b_full.row(sub[i] - 1).dot(v);
          if (std::abs(dot) > std::abs(r)) { r = dot; worst = i; }
        }
        ortho_sum += std::abs(r) * inv_b;
        loss_sum += cfg.ortho_weight * r * r * inv_b;
        RealVector dv = (2.0 * cfg.ortho_weight * r * inv_b) *
                        ctx.b_full.row(sub[worst] - 1).transpose();

        // Pack gradients into the output layout.
        Eigen::Map<RealMatrix> db(dy.row(s).data(), d2, mm);
        db += (dcoeff + dv) * m.transpose();
        dy.row(s).segment(d2 * mm, d2) += (dcoeff + dv).transpose();
        if (terms.s) {
          RealMatrix mmT = m * m.transpose();
          for (Eigen::Index mu = 0; mu < d2; ++mu)
            Eigen::Map<RealMatrix>(dy.row(s).data() + d2 * mm + d2 + mu * mm * mm,
                                   mm, mm) += dcoeff(mu) * mmT;
        }
      }

      std::fill(grad.begin(), grad.end(), 0.0);
      model.mlp.backward(cache, dy, grad);
      nn::adam_step(model.mlp.weights().flat(), grad, moments, cfg, ++t);
      if (log) log->push_back({epoch, step, loss_sum, ortho_sum});
    }
  }
  if (resume_step) *resume_step = t;
  return model;
}

}  // namespace qtomo::models
