#pragma once

#include <optional>
#include <vector>

#include "qtomo/linalg.hpp"
#include "qtomo/states.hpp"

namespace qtomo {

// Ordering conventions used everywhere downstream:
//  - nu is 1-based and enumerates multi-indices (i_1,...,i_N) row-major,
//    nu = sum_k i_k * 4^(N-k) + 1, with i_1 (first qubit) most significant.
//  - Pauli labels mu are 1-based over (j_1,...,j_N) in the same row-major
//    order, single-qubit order (I, X, Y, Z).
// Containers store position nu-1 / mu-1.

struct ProjectorSet {
  std::size_t n_qubits;
  std::vector<ComplexVector> states;      // |psi_nu>
  std::vector<ComplexMatrix> projectors;  // Pi_nu = |psi_nu><psi_nu|
  std::vector<std::vector<int>> indices;  // (i_1,...,i_N)

  std::size_t size() const { return projectors.size(); }
  const ComplexMatrix& projector(std::size_t nu) const;  // 1-based
};

struct PauliBasis {
  std::size_t n_qubits;
  std::vector<ComplexMatrix> gammas;  // Gamma_mu, Tr(Gamma Gamma') = 2^N delta

  std::size_t size() const { return gammas.size(); }
};

// A collection of M distinct measurements with exact outcomes m = Tr(Pi rho).
struct MeasurementRecord {
  std::vector<std::size_t> subset;        // 1-based nu, distinct
  std::vector<ComplexMatrix> operators;   // Pi_nu in subset order
  RealVector outcomes;

  std::size_t size() const { return subset.size(); }
};

// The four single-qubit projectors onto |0>, |1>, (|0>+|1>)/sqrt2,
// (|0>-i|1>)/sqrt2, in this order.
std::vector<ComplexMatrix> james_basis();

ProjectorSet projector_set(std::size_t n_qubits);

PauliBasis pauli_basis(std::size_t n_qubits);

// m_nu = Tr(Pi_nu rho), exact-outcome regime (normalization constant 1).
// Imaginary residue above 1e-12 is an internal-consistency failure.
RealVector outcomes(const DensityMatrix& rho, const ProjectorSet& pset);

// B_numu = Tr(Pi_nu Gamma_mu), shape M x 4^N. Entries are real by
// construction; imaginary parts are checked against 1e-12 and dropped.
// Without a subset, all rows in nu order.
RealMatrix b_matrix(const ProjectorSet& pset,
                    const std::optional<std::vector<std::size_t>>& subset = {});

// G_nunu' = Tr(Pi_nu Pi_nu'), symmetric positive definite. Real by the same
// argument as b_matrix.
RealMatrix gramian(const ProjectorSet& pset);

// Shared immutable per-qubit-count fixtures. Built once on first use and
// cached; read-only afterwards, safe to share across threads.
struct TomoContext {
  ProjectorSet pset;
  PauliBasis paulis;
  RealMatrix b_full;      // 4^N x 4^N
  RealMatrix b_full_inv;  // exact inverse of b_full
};

const TomoContext& tomo_context(std::size_t n_qubits);

// Record for a given subset of a projector set, outcomes from rho.
MeasurementRecord make_record(const ProjectorSet& pset,
                              const std::vector<std::size_t>& subset,
                              const DensityMatrix& rho);
// Record with externally supplied outcomes (must lie in [0,1]).
MeasurementRecord make_record(const ProjectorSet& pset,
                              const std::vector<std::size_t>& subset,
                              const RealVector& m);

}  // namespace qtomo
