#include <cmath>

#include "doctest.h"
#include "qtomo/linalg.hpp"
#include "qtomo/rng.hpp"

using namespace qtomo;

namespace {

ComplexMatrix random_complex(Eigen::Index r, Eigen::Index c, rng::Xoshiro256pp& gen) {
  ComplexMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = gen.cnormal();
  return m;
}

RealMatrix random_real(Eigen::Index r, Eigen::Index c, rng::Xoshiro256pp& gen) {
  RealMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = gen.normal();
  return m;
}

ComplexMatrix random_hermitian(Eigen::Index d, rng::Xoshiro256pp& gen) {
  ComplexMatrix a = random_complex(d, d, gen);
  return ComplexMatrix(0.5 * (a + a.adjoint()));
}

}  // namespace

TEST_CASE("kron matches the block definition") {
  ComplexMatrix a(2, 2), b(2, 2);
  a << Complex(1, 0), Complex(2, 1), Complex(0, -1), Complex(3, 0);
  b << Complex(0, 1), Complex(1, 0), Complex(2, 0), Complex(0, 0);
  ComplexMatrix k = linalg::kron(a, b);
  REQUIRE(k.rows() == 4);
  REQUIRE(k.cols() == 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(std::abs(k(i, j) - a(i / 2, j / 2) * b(i % 2, j % 2)) < 1e-15);
}

TEST_CASE("kron mixed-product identity") {
  rng::Xoshiro256pp gen(1);
  ComplexMatrix a = random_complex(2, 3, gen), b = random_complex(3, 2, gen);
  ComplexMatrix c = random_complex(3, 2, gen), d = random_complex(2, 3, gen);
  ComplexMatrix lhs = linalg::kron(a, c) * linalg::kron(b, d);
  ComplexMatrix rhs = linalg::kron(ComplexMatrix(a * b), ComplexMatrix(c * d));
  CHECK((lhs - rhs).norm() < 1e-12);
}

TEST_CASE("hermitian_eig reconstructs and orders") {
  rng::Xoshiro256pp gen(2);
  for (Eigen::Index d : {2, 4, 8, 16}) {
    ComplexMatrix h = random_hermitian(d, gen);
    linalg::HermitianEig e = linalg::hermitian_eig(h);
    ComplexMatrix rebuilt = e.eigenvectors *
                            e.eigenvalues.cast<Complex>().asDiagonal() *
                            e.eigenvectors.adjoint();
    CHECK((rebuilt - h).norm() < 1e-10 * std::max(1.0, h.norm()));
    ComplexMatrix vtv = e.eigenvectors.adjoint() * e.eigenvectors;
    CHECK((vtv - linalg::identity(d)).norm() < 1e-10);
    for (Eigen::Index i = 1; i < d; ++i)
      CHECK(e.eigenvalues(i) >= e.eigenvalues(i - 1));
  }
}

TEST_CASE("hermitian_eig rejects non-Hermitian input") {
  ComplexMatrix m(2, 2);
  m << Complex(1, 0), Complex(1, 0), Complex(0, 0), Complex(1, 0);
  CHECK_THROWS_AS(linalg::hermitian_eig(m), NotHermitian);
}

TEST_CASE("matrix_sqrt_psd squares back") {
  rng::Xoshiro256pp gen(3);
  for (int rep = 0; rep < 20; ++rep) {
    ComplexMatrix a = random_complex(4, 4, gen);
    ComplexMatrix h = a * a.adjoint();  // PSD
    ComplexMatrix s = linalg::matrix_sqrt_psd(h);
    CHECK((s * s - h).norm() < 1e-9 * std::max(1.0, h.norm()));
  }
}

TEST_CASE("matrix_sqrt_psd clamps rounding noise but rejects real negatives") {
  ComplexMatrix tiny = ComplexMatrix::Zero(2, 2);
  tiny(0, 0) = Complex(1.0, 0.0);
  tiny(1, 1) = Complex(-1e-10, 0.0);  // inside the clamp window
  CHECK_NOTHROW(linalg::matrix_sqrt_psd(tiny));

  ComplexMatrix neg = ComplexMatrix::Zero(2, 2);
  neg(0, 0) = Complex(1.0, 0.0);
  neg(1, 1) = Complex(-1e-3, 0.0);
  CHECK_THROWS_AS(linalg::matrix_sqrt_psd(neg), NotPSD);
}

TEST_CASE("pseudoinverse satisfies the Penrose conditions") {
  rng::Xoshiro256pp gen(4);
  int done = 0;
  // Mix of shapes and ranks, complex and real, all within 16x16.
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::Index r = 1 + static_cast<Eigen::Index>(gen.below(16));
    Eigen::Index c = 1 + static_cast<Eigen::Index>(gen.below(16));
    ComplexMatrix b;
    if (rep % 3 == 0) {
      // rank-deficient by construction
      Eigen::Index k = 1 + static_cast<Eigen::Index>(gen.below(std::min(r, c)));
      b = random_complex(r, k, gen) * random_complex(k, c, gen);
    } else {
      b = random_complex(r, c, gen);
    }
    ComplexMatrix p = linalg::pseudoinverse(b);
    double scale = std::max(1.0, b.norm());
    CHECK((b * p * b - b).norm() < 1e-9 * scale);
    CHECK((p * b * p - p).norm() < 1e-9 * std::max(1.0, p.norm()));
    CHECK(((b * p) - (b * p).adjoint()).norm() < 1e-9);
    CHECK(((p * b) - (p * b).adjoint()).norm() < 1e-9);
    ++done;
  }
  CHECK(done == 100);

  rng::Xoshiro256pp gen2(5);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::Index r = 1 + static_cast<Eigen::Index>(gen2.below(16));
    Eigen::Index c = 1 + static_cast<Eigen::Index>(gen2.below(16));
    RealMatrix b = random_real(r, c, gen2);
    RealMatrix p = linalg::pseudoinverse(b);
    CHECK((b * p * b - b).norm() < 1e-9 * std::max(1.0, b.norm()));
    CHECK((p * b * p - p).norm() < 1e-9 * std::max(1.0, p.norm()));
    CHECK(((b * p) - (b * p).transpose()).norm() < 1e-9);
    CHECK(((p * b) - (p * b).transpose()).norm() < 1e-9);
  }
}

TEST_CASE("pseudoinverse pinned values") {
  // Rank-1 symmetric: pinv(a a^T) = a a^T / |a|^4 with a = (1,2).
  RealMatrix a(2, 2);
  a << 1, 2, 2, 4;
  RealMatrix p = linalg::pseudoinverse(a);
  CHECK(p(0, 0) == doctest::Approx(1.0 / 25).epsilon(1e-12));
  CHECK(p(0, 1) == doctest::Approx(2.0 / 25).epsilon(1e-12));
  CHECK(p(1, 1) == doctest::Approx(4.0 / 25).epsilon(1e-12));

  // Orthogonal rows: pinv = B^T (B B^T)^{-1} = B^T / 2 for these rows.
  RealMatrix b(2, 4);
  b << 1, 0, 0, 1, 1, 0, 0, -1;
  RealMatrix bp = linalg::pseudoinverse(b);
  RealMatrix expect(4, 2);
  expect << 0.5, 0.5, 0, 0, 0, 0, 0.5, -0.5;
  CHECK((bp - expect).norm() < 1e-12);
}

TEST_CASE("partial_trace_right of a product factorizes") {
  rng::Xoshiro256pp gen(6);
  ComplexMatrix a = random_complex(2, 2, gen), b = random_complex(4, 4, gen);
  ComplexMatrix ab = linalg::kron(a, b);
  ComplexMatrix reduced = linalg::partial_trace_right(ab, 4);
  ComplexMatrix expect = a * b.trace();
  CHECK((reduced - expect).norm() < 1e-12);
}

TEST_CASE("qubit_dim doubles and guards") {
  CHECK(linalg::qubit_dim(1) == 2);
  CHECK(linalg::qubit_dim(4) == 16);
  CHECK_THROWS_AS(linalg::qubit_dim(400), Error);
}

TEST_CASE("frobenius and trace agree with Eigen") {
  rng::Xoshiro256pp gen(7);
  ComplexMatrix m = random_complex(3, 3, gen);
  CHECK(linalg::frobenius(m) == doctest::Approx(m.norm()).epsilon(1e-14));
  CHECK(std::abs(linalg::trace(m) - m.trace()) < 1e-14);
}
