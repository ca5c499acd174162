#include "qtomo/states.hpp"

#include <cmath>
#include <numbers>

namespace qtomo {

namespace {

std::size_t qubit_count_for_dim(Eigen::Index d) {
  if (d < 2 || (d & (d - 1)) != 0)
    throw DimensionMismatch("dimension " + std::to_string(d) +
                            " is not a power of two >= 2");
  std::size_t n = 0;
  while ((Eigen::Index{1} << n) < d) ++n;
  return n;
}

// Per-state seed, independent of draw history so datasets can be sharded.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  return rng::splitmix64(s);
}

ComplexVector haar_vector(Eigen::Index d, rng::Xoshiro256pp& gen) {
  // Normalized Ginibre column == first column of a QR-derived Haar unitary
  // with the R-diagonal phase fix (a1/||a1|| either way).
  ComplexVector psi(d);
  for (Eigen::Index i = 0; i < d; ++i) psi(i) = gen.cnormal();
  psi /= psi.norm();
  return psi;
}

}  // namespace

DensityMatrix validate(const ComplexMatrix& rho) {
  if (rho.rows() != rho.cols())
    throw ShapeMismatch("density matrix must be square");
  std::size_t nq = qubit_count_for_dim(rho.rows());
  if ((rho - rho.adjoint()).norm() > 1e-10)
    throw NotHermitian("density matrix is not Hermitian within 1e-10");
  if (std::abs(rho.trace() - Complex{1.0, 0.0}) > 1e-10)
    throw TraceNotOne("trace is " + std::to_string(rho.trace().real()));
  auto eig = linalg::hermitian_eig(rho);
  if (eig.eigenvalues(0) < -1e-9)
    throw NotPSD("lowest eigenvalue " + std::to_string(eig.eigenvalues(0)));
  return DensityMatrix(rho, nq);
}

DensityMatrix random_haar_pure(std::size_t n_qubits, rng::Xoshiro256pp& gen) {
  Eigen::Index d = linalg::qubit_dim(n_qubits);
  ComplexVector psi = haar_vector(d, gen);
  return validate(psi * psi.adjoint());
}

DensityMatrix random_mixed(std::size_t n_qubits, rng::Xoshiro256pp& gen,
                           SampleMethod method) {
  Eigen::Index d = linalg::qubit_dim(n_qubits);
  if (method == SampleMethod::GinibreMixed) {
    ComplexMatrix g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) g(i, j) = gen.cnormal();
    ComplexMatrix rho = g * g.adjoint();
    rho /= rho.trace();
    return validate(rho);
  }
  if (method == SampleMethod::PurifiedMixed) {
    // Haar pure state on 2N qubits, ancilla half traced out. With the pure
    // state reshaped to a d x d matrix M (system row, ancilla column) the
    // reduced state is M M^dag.
    ComplexVector psi = haar_vector(d * d, gen);
    Eigen::Map<const ComplexMatrix> m(psi.data(), d, d);
    ComplexMatrix rho = m * m.adjoint();
    return validate(rho);
  }
  throw UnsupportedCombination("random_mixed requires GinibreMixed or PurifiedMixed");
}

XStateParams random_x_state_params(rng::Xoshiro256pp& gen) {
  // Flat Dirichlet over the diagonal via normalized exponentials.
  double e[4];
  double sum = 0.0;
  for (double& v : e) {
    v = -std::log(1.0 - gen.uniform());
    sum += v;
  }
  XStateParams p;
  p.a = e[0] / sum;
  p.b = e[1] / sum;
  p.c = e[2] / sum;
  p.d = e[3] / sum;
  double rz = gen.uniform();
  double phz = 2.0 * std::numbers::pi * gen.uniform();
  p.z = rz * std::sqrt(p.b * p.c) * Complex{std::cos(phz), std::sin(phz)};
  double rw = gen.uniform();
  double phw = 2.0 * std::numbers::pi * gen.uniform();
  p.w = rw * std::sqrt(p.a * p.d) * Complex{std::cos(phw), std::sin(phw)};
  return p;
}

DensityMatrix x_state(const XStateParams& p) {
  if (p.a < 0 || p.b < 0 || p.c < 0 || p.d < 0 ||
      std::abs(p.a + p.b + p.c + p.d - 1.0) > 1e-12)
    throw InvalidSpec("X-state populations must be nonnegative and sum to 1");
  if (std::abs(p.z) > std::sqrt(p.b * p.c) + 1e-12 ||
      std::abs(p.w) > std::sqrt(p.a * p.d) + 1e-12)
    throw InvalidSpec("X-state coherence exceeds its positivity bound");
  ComplexMatrix rho = ComplexMatrix::Zero(4, 4);
  rho(0, 0) = p.a;
  rho(1, 1) = p.b;
  rho(2, 2) = p.c;
  rho(3, 3) = p.d;
  rho(0, 3) = p.w;
  rho(3, 0) = std::conj(p.w);
  rho(1, 2) = p.z;
  rho(2, 1) = std::conj(p.z);
  return validate(rho);
}

DensityMatrix random_x_state(rng::Xoshiro256pp& gen) {
  return x_state(random_x_state_params(gen));
}

DensityMatrix maximally_entangled(BellKind kind) {
  ComplexVector psi = ComplexVector::Zero(4);
  const double s = 1.0 / std::numbers::sqrt2;
  switch (kind) {
    case BellKind::PhiPlus:  psi(0) = s; psi(3) = s;  break;
    case BellKind::PhiMinus: psi(0) = s; psi(3) = -s; break;
    case BellKind::PsiPlus:  psi(1) = s; psi(2) = s;  break;
    case BellKind::PsiMinus: psi(1) = s; psi(2) = -s; break;
  }
  return validate(psi * psi.adjoint());
}

std::vector<DensityMatrix> generate_dataset(std::size_t n_qubits, std::size_t count,
                                            std::uint64_t seed,
                                            const MixtureSpec& mix) {
  double g = mix.ginibre, p = mix.purified, bell = mix.bell;
  if (g < 0 || p < 0 || bell < 0 || g + p + bell <= 0)
    throw InvalidSpec("mixture proportions must be nonnegative and not all zero");
  if (n_qubits != 2) {
    g += bell / 2;
    p += bell / 2;
    bell = 0;
  }
  double total = g + p + bell;
  std::vector<DensityMatrix> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    rng::Xoshiro256pp gen(derive_seed(seed, i));
    double u = gen.uniform() * total;
    if (u < g) {
      out.push_back(random_mixed(n_qubits, gen, SampleMethod::GinibreMixed));
    } else if (u < g + p) {
      out.push_back(random_mixed(n_qubits, gen, SampleMethod::PurifiedMixed));
    } else {
      out.push_back(maximally_entangled(static_cast<BellKind>(gen.below(4))));
    }
  }
  return out;
}

std::vector<DensityMatrix> generate_x_dataset(std::size_t count, std::uint64_t seed) {
  std::vector<DensityMatrix> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    rng::Xoshiro256pp gen(derive_seed(seed, i));
    out.push_back(random_x_state(gen));
  }
  return out;
}

}  // namespace qtomo
