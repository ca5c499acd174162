#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qtomo/measurement.hpp"

namespace qtomo {

// Additive corrections to the pseudoinverse reconstruction: coefficient
// vector becomes B+ m + b m + c (+ S m m' when the quadratic term is used).
struct CorrectionTerms {
  RealMatrix b;   // 4^N x M
  RealVector c;   // 4^N
  std::optional<std::vector<RealMatrix>> s;  // per mu, M x M, symmetric

  static CorrectionTerms zero(std::size_t n_qubits, std::size_t m_size,
                              bool quadratic = false);
};

// Exact linear tomography from the complete outcome vector.
DensityMatrix full_linear(const RealVector& m, std::size_t n_qubits);

// Least-squares reconstruction from an undercomplete record. Hermitian by
// construction; trace and positivity are not guaranteed, so the result is
// returned raw rather than validated.
ComplexMatrix pinv_reconstruct(const MeasurementRecord& record, std::size_t n_qubits);

ComplexMatrix apply_corrector(const MeasurementRecord& record,
                              const CorrectionTerms& terms, std::size_t n_qubits);

// Optimal 1-qubit reconstruction from a pair of outcomes. Parameters the
// pair does not determine fall back to the maximally mixed values (a = 1/2,
// coherence 0). m_nu/m_nup are the outcomes of nu/nup.
ComplexMatrix analytic_1q(std::pair<std::size_t, std::size_t> pair, double m_nu,
                          double m_nup);

// max over measured rows nu' of |B_nu'mu v_mu| with v = b m + c. Zero means
// the correction cannot change any measured outcome.
double orthogonality_residual(const MeasurementRecord& record,
                              const CorrectionTerms& terms, std::size_t n_qubits);

}  // namespace qtomo
