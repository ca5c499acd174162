#include "qtomo/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace qtomo::eval {

ComplexMatrix psd_repair(const ComplexMatrix& rho) {
  linalg::HermitianEig eig = linalg::hermitian_eig(rho);
  RealVector lam = eig.eigenvalues.cwiseMax(0.0);
  double mass = lam.sum();
  if (mass <= 1e-12)
    throw NotPSD("no positive mass left after clipping negative eigenvalues");
  lam /= mass;
  return ComplexMatrix(eig.eigenvectors * lam.asDiagonal() *
                       eig.eigenvectors.adjoint());
}

double fidelity(const ComplexMatrix& r1, const ComplexMatrix& r2) {
  if (r1.rows() != r2.rows() || r1.cols() != r2.cols())
    throw DimensionMismatch("fidelity arguments differ in shape");
  ComplexMatrix a = psd_repair(r1);
  ComplexMatrix b = psd_repair(r2);
  ComplexMatrix sa = linalg::matrix_sqrt_psd(a);
  ComplexMatrix inner = sa * b * sa;
  inner = ComplexMatrix(0.5 * (inner + inner.adjoint()));  // roundoff cleanup
  ComplexMatrix s = linalg::matrix_sqrt_psd(inner);
  double f = s.trace().real();
  f *= f;
  if (f > 1.0 + 1e-8)
    throw Error("fidelity exceeds 1 beyond tolerance: " + std::to_string(f));
  return std::clamp(f, 0.0, 1.0);
}

double bures(const ComplexMatrix& r1, const ComplexMatrix& r2) {
  double f = fidelity(r1, r2);
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * std::sqrt(f)));
}

ErrorMap error_map(const std::vector<DensityMatrix>& test,
                   const Reconstructor& reconstruct,
                   std::pair<std::size_t, std::size_t> pair,
                   std::size_t n_qubits) {
  const TomoContext& ctx = tomo_context(n_qubits);
  const std::size_t total = ctx.pset.size();
  if (pair.first < 1 || pair.second <= pair.first || pair.second > total)
    throw InvalidPair("measurement pair must satisfy 1 <= nu < nu' <= 4^N");
  const Eigen::Index d = linalg::qubit_dim(n_qubits);
  ErrorMap map{pair.first, pair.second, RealMatrix::Zero(d, d)};
  if (test.empty()) return map;
  const std::vector<std::size_t> subset{pair.first, pair.second};
  for (const DensityMatrix& rho : test) {
    MeasurementRecord record = make_record(ctx.pset, subset, rho);
    ComplexMatrix rec = reconstruct(record);
    map.values += (rho.mat() - rec).cwiseAbs();
  }
  map.values /= static_cast<double>(test.size());
  return map;
}

EigStats psd_stats(const std::vector<ComplexMatrix>& reconstructions) {
  EigStats st;
  st.n = reconstructions.size();
  if (st.n == 0) return st;
  double s1 = 0.0, q1 = 0.0, s2 = 0.0, q2 = 0.0;
  for (const ComplexMatrix& rec : reconstructions) {
    linalg::HermitianEig eig = linalg::hermitian_eig(rec);
    double lo = eig.eigenvalues(0);
    double second = eig.eigenvalues.size() > 1 ? eig.eigenvalues(1) : lo;
    s1 += lo;
    q1 += lo * lo;
    s2 += second;
    q2 += second * second;
  }
  const double n = static_cast<double>(st.n);
  st.mean_lowest = s1 / n;
  st.mean_second = s2 / n;
  if (st.n >= 2) {
    st.std_lowest = std::sqrt(std::max(0.0, (q1 - n * st.mean_lowest * st.mean_lowest) / (n - 1.0)));
    st.std_second = std::sqrt(std::max(0.0, (q2 - n * st.mean_second * st.mean_second) / (n - 1.0)));
  }
  return st;
}

}  // namespace qtomo::eval
