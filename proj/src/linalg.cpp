#include "qtomo/linalg.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace qtomo::linalg {

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

HermitianEig hermitian_eig(const ComplexMatrix& h) {
  if (h.rows() != h.cols())
    throw ShapeMismatch("hermitian_eig: matrix is " + std::to_string(h.rows()) +
                        "x" + std::to_string(h.cols()));
  double asym = (h - h.adjoint()).norm();
  if (asym > 1e-8 * h.norm())
    throw NotHermitian("hermitian_eig: ||h - h^dag||_F = " + std::to_string(asym));
  ComplexMatrix sym = 0.5 * (h + ComplexMatrix(h.adjoint()));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw ConvergenceFailure("hermitian_eig: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

ComplexMatrix matrix_sqrt_psd(const ComplexMatrix& h) {
  HermitianEig eig = hermitian_eig(h);
  RealVector vals = eig.eigenvalues;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) < -1e-9)
      throw NotPSD("matrix_sqrt_psd: eigenvalue " + std::to_string(vals(i)));
    vals(i) = std::sqrt(std::max(0.0, vals(i)));
  }
  return eig.eigenvectors * vals.asDiagonal() *
         ComplexMatrix(eig.eigenvectors.adjoint());
}

namespace {

template <typename Mat>
Mat pinv_impl(const Mat& b) {
  Eigen::JacobiSVD<Mat> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cutoff = sv.size() > 0 ? 1e-12 * sv(0) : 0.0;
  Eigen::VectorXd inv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace

ComplexMatrix pseudoinverse(const ComplexMatrix& b) { return pinv_impl(b); }
RealMatrix pseudoinverse(const RealMatrix& b) { return pinv_impl(b); }

double frobenius(const ComplexMatrix& a) { return a.norm(); }

Complex trace(const ComplexMatrix& a) { return a.trace(); }

ComplexMatrix identity(Eigen::Index d) { return ComplexMatrix::Identity(d, d); }

ComplexMatrix partial_trace_right(const ComplexMatrix& ab, Eigen::Index db) {
  if (ab.rows() != ab.cols() || db <= 0 || ab.rows() % db != 0)
    throw ShapeMismatch("partial_trace_right: incompatible dimensions");
  Eigen::Index da = ab.rows() / db;
  ComplexMatrix out = ComplexMatrix::Zero(da, da);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < da; ++j)
      for (Eigen::Index k = 0; k < db; ++k)
        out(i, j) += ab(i * db + k, j * db + k);
  return out;
}

Eigen::Index qubit_dim(std::size_t n_qubits) {
  if (n_qubits == 0 || n_qubits > 16)
    throw DimensionMismatch("qubit count out of range: " + std::to_string(n_qubits));
  return Eigen::Index{1} << n_qubits;
}

}  // namespace qtomo::linalg
