#pragma once

#include <cstdint>
#include <vector>

#include "qtomo/linalg.hpp"
#include "qtomo/rng.hpp"

namespace qtomo {

// Validated density matrix: Hermitian within 1e-10, trace 1 within 1e-10,
// min eigenvalue >= -1e-9, dimension 2^N. Construct through validate().
class DensityMatrix {
 public:
  const ComplexMatrix& mat() const { return mat_; }
  Eigen::Index dim() const { return mat_.rows(); }
  std::size_t n_qubits() const { return n_qubits_; }

 private:
  friend DensityMatrix validate(const ComplexMatrix& rho);
  DensityMatrix(ComplexMatrix m, std::size_t nq) : mat_(std::move(m)), n_qubits_(nq) {}
  ComplexMatrix mat_;
  std::size_t n_qubits_;
};

DensityMatrix validate(const ComplexMatrix& rho);

// 2-qubit X state: nonzero entries only on diagonal (a,b,c,d) and
// anti-diagonal (w between |00> and |11>, z between |01> and |10>).
struct XStateParams {
  double a, b, c, d;
  Complex z, w;
};

enum class SampleMethod { HaarPure, GinibreMixed, PurifiedMixed, XState, MaxEntangled };

struct RandomStateConfig {
  SampleMethod method;
  std::size_t n_qubits;
  std::uint64_t seed;
};

enum class BellKind { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

DensityMatrix random_haar_pure(std::size_t n_qubits, rng::Xoshiro256pp& gen);

// method must be GinibreMixed or PurifiedMixed.
DensityMatrix random_mixed(std::size_t n_qubits, rng::Xoshiro256pp& gen,
                           SampleMethod method);

XStateParams random_x_state_params(rng::Xoshiro256pp& gen);
DensityMatrix x_state(const XStateParams& p);
DensityMatrix random_x_state(rng::Xoshiro256pp& gen);

DensityMatrix maximally_entangled(BellKind kind);

// Training/test ensemble: a mixture of the samplers above. At 2 qubits the
// default is 40% Ginibre, 40% purified, 20% Bell; at other qubit counts the
// Bell share is folded equally into the other two.
struct MixtureSpec {
  double ginibre = 0.4;
  double purified = 0.4;
  double bell = 0.2;
};

std::vector<DensityMatrix> generate_dataset(std::size_t n_qubits, std::size_t count,
                                            std::uint64_t seed,
                                            const MixtureSpec& mix = {});

// X-state-only dataset (2 qubits), for the measurement-selection experiments.
std::vector<DensityMatrix> generate_x_dataset(std::size_t count, std::uint64_t seed);

}  // namespace qtomo
