#pragma once

#include <Eigen/Dense>
#include <complex>

#include "qtomo/common.hpp"

namespace qtomo {

using Complex = std::complex<double>;

// Dense complex matrix, row-major storage. Row-major is load-bearing: flat
// serialization and network input encodings index entries as row*cols + col.
using ComplexMatrix =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

namespace linalg {

// Kronecker product; block (i,j) of the result is a(i,j) * b.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

struct HermitianEig {
  RealVector eigenvalues;     // ascending
  ComplexMatrix eigenvectors; // columns, unitary
};

// Throws NotHermitian when ||h - h^dag||_F > 1e-8 * ||h||_F.
HermitianEig hermitian_eig(const ComplexMatrix& h);

// Principal square root of a PSD Hermitian matrix. Eigenvalues in
// [-1e-9, 0) are treated as rounding noise and clamped to zero; anything
// below that throws NotPSD.
ComplexMatrix matrix_sqrt_psd(const ComplexMatrix& h);

// Moore-Penrose pseudoinverse via SVD. Singular values <= 1e-12 * sigma_max
// are treated as zero.
ComplexMatrix pseudoinverse(const ComplexMatrix& b);
RealMatrix pseudoinverse(const RealMatrix& b);

double frobenius(const ComplexMatrix& a);
Complex trace(const ComplexMatrix& a);

ComplexMatrix identity(Eigen::Index d);

// Trace out the second factor of a (da*db) x (da*db) matrix, keeping the
// first: out(i,j) = sum_k in(i*db+k, j*db+k).
ComplexMatrix partial_trace_right(const ComplexMatrix& ab, Eigen::Index db);

// 2^n for qubit counts, with an overflow guard.
Eigen::Index qubit_dim(std::size_t n_qubits);

}  // namespace linalg
}  // namespace qtomo
