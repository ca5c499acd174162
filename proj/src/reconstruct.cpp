#include "qtomo/reconstruct.hpp"

#include <cmath>

namespace qtomo {

namespace {

ComplexMatrix from_pauli_coeffs(const RealVector& coeffs, const TomoContext& ctx) {
  Eigen::Index d = Eigen::Index{1} << ctx.pset.n_qubits;
  ComplexMatrix rho = ComplexMatrix::Zero(d, d);
  for (Eigen::Index mu = 0; mu < coeffs.size(); ++mu)
    rho += coeffs(mu) * ctx.paulis.gammas[mu];
  return rho;
}

RealMatrix subset_b(const MeasurementRecord& record, const TomoContext& ctx) {
  RealMatrix b(record.size(), ctx.b_full.cols());
  for (std::size_t i = 0; i < record.size(); ++i)
    b.row(i) = ctx.b_full.row(record.subset[i] - 1);
  return b;
}

void check_terms(const MeasurementRecord& record, const CorrectionTerms& terms,
                 std::size_t n_qubits) {
  Eigen::Index dim2 = Eigen::Index{1} << (2 * n_qubits);
  Eigen::Index m = static_cast<Eigen::Index>(record.size());
  if (terms.b.rows() != dim2 || terms.b.cols() != m || terms.c.size() != dim2)
    throw ShapeMismatch("correction terms do not match 4^N x M");
  if (terms.s) {
    if (static_cast<Eigen::Index>(terms.s->size()) != dim2)
      throw ShapeMismatch("quadratic term must have 4^N slices");
    for (const auto& slice : *terms.s)
      if (slice.rows() != m || slice.cols() != m)
        throw ShapeMismatch("quadratic slice must be M x M");
  }
}

}  // namespace

CorrectionTerms CorrectionTerms::zero(std::size_t n_qubits, std::size_t m_size,
                                      bool quadratic) {
  Eigen::Index dim2 = Eigen::Index{1} << (2 * n_qubits);
  CorrectionTerms t;
  t.b = RealMatrix::Zero(dim2, m_size);
  t.c = RealVector::Zero(dim2);
  if (quadratic)
    t.s = std::vector<RealMatrix>(dim2, RealMatrix::Zero(m_size, m_size));
  return t;
}

DensityMatrix full_linear(const RealVector& m, std::size_t n_qubits) {
  const TomoContext& ctx = tomo_context(n_qubits);
  if (m.size() != ctx.b_full.rows())
    throw ShapeMismatch("outcome vector must have length 4^N");
  RealVector coeffs = ctx.b_full_inv * m;
  return validate(from_pauli_coeffs(coeffs, ctx));
}

ComplexMatrix pinv_reconstruct(const MeasurementRecord& record,
                               std::size_t n_qubits) {
  const TomoContext& ctx = tomo_context(n_qubits);
  RealMatrix b = subset_b(record, ctx);
  RealVector coeffs = linalg::pseudoinverse(b) * record.outcomes;
  return from_pauli_coeffs(coeffs, ctx);
}

ComplexMatrix apply_corrector(const MeasurementRecord& record,
                              const CorrectionTerms& terms, std::size_t n_qubits) {
  const TomoContext& ctx = tomo_context(n_qubits);
  check_terms(record, terms, n_qubits);
  RealMatrix b = subset_b(record, ctx);
  RealVector coeffs = linalg::pseudoinverse(b) * record.outcomes;
  coeffs += terms.b * record.outcomes + terms.c;
  if (terms.s) {
    for (Eigen::Index mu = 0; mu < coeffs.size(); ++mu)
      coeffs(mu) += record.outcomes.dot((*terms.s)[mu] * record.outcomes);
  }
  return from_pauli_coeffs(coeffs, ctx);
}

ComplexMatrix analytic_1q(std::pair<std::size_t, std::size_t> pair, double m_nu,
                          double m_nup) {
  auto [nu, nup] = pair;
  if (nu < 1 || nup > 4 || nu >= nup)
    throw InvalidPair("analytic_1q requires 1 <= nu < nu' <= 4");
  double a = 0.5, re_b = 0.0, im_b = 0.0;
  auto absorb = [&](std::size_t idx, double m) {
    switch (idx) {
      case 1: a = m; break;
      case 2: a = 1.0 - m; break;
      case 3: re_b = m - 0.5; break;
      case 4: im_b = m - 0.5; break;
    }
  };
  absorb(nu, m_nu);
  absorb(nup, m_nup);
  ComplexMatrix rho(2, 2);
  rho(0, 0) = a;
  rho(1, 1) = 1.0 - a;
  rho(0, 1) = Complex{re_b, im_b};
  rho(1, 0) = Complex{re_b, -im_b};
  return rho;
}

double orthogonality_residual(const MeasurementRecord& record,
                              const CorrectionTerms& terms, std::size_t n_qubits) {
  const TomoContext& ctx = tomo_context(n_qubits);
  check_terms(record, terms, n_qubits);
  RealVector v = terms.b * record.outcomes + terms.c;
  double worst = 0.0;
  for (std::size_t nu : record.subset)
    worst = std::max(worst, std::abs(ctx.b_full.row(nu - 1).dot(v)));
  return worst;
}

}  // namespace qtomo
