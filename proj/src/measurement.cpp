#include "qtomo/measurement.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace qtomo {

namespace {

Complex checked_real(Complex v, const char* what) {
  if (std::abs(v.imag()) > 1e-12)
    throw NotHermitian(std::string(what) + ": imaginary residue " +
                       std::to_string(v.imag()));
  return v;
}

std::vector<ComplexVector> james_states() {
  const double s = 1.0 / std::numbers::sqrt2;
  std::vector<ComplexVector> st(4, ComplexVector(2));
  st[0] << Complex{1, 0}, Complex{0, 0};
  st[1] << Complex{0, 0}, Complex{1, 0};
  st[2] << Complex{s, 0}, Complex{s, 0};
  st[3] << Complex{s, 0}, Complex{0, -s};
  return st;
}

std::vector<ComplexMatrix> single_paulis() {
  std::vector<ComplexMatrix> p(4, ComplexMatrix(2, 2));
  p[0] << 1, 0, 0, 1;
  p[1] << 0, 1, 1, 0;
  p[2] << Complex{0, 0}, Complex{0, -1}, Complex{0, 1}, Complex{0, 0};
  p[3] << 1, 0, 0, -1;
  return p;
}

void check_n(std::size_t n_qubits) {
  if (n_qubits < 1 || n_qubits > 4)
    throw DimensionMismatch("qubit count must be in 1..4, got " +
                            std::to_string(n_qubits));
}

std::vector<std::size_t> checked_subset(const std::vector<std::size_t>& subset,
                                        std::size_t set_size) {
  if (subset.empty()) throw IndexOutOfRange("subset must not be empty");
  std::set<std::size_t> seen;
  for (std::size_t nu : subset) {
    if (nu < 1 || nu > set_size)
      throw IndexOutOfRange("index " + std::to_string(nu) + " outside 1.." +
                            std::to_string(set_size));
    if (!seen.insert(nu).second)
      throw IndexOutOfRange("duplicate index " + std::to_string(nu));
  }
  return subset;
}

}  // namespace

const ComplexMatrix& ProjectorSet::projector(std::size_t nu) const {
  if (nu < 1 || nu > projectors.size())
    throw IndexOutOfRange("nu = " + std::to_string(nu));
  return projectors[nu - 1];
}

std::vector<ComplexMatrix> james_basis() {
  std::vector<ComplexMatrix> out;
  out.reserve(4);
  for (const auto& psi : james_states()) out.push_back(psi * psi.adjoint());
  return out;
}

ProjectorSet projector_set(std::size_t n_qubits) {
  check_n(n_qubits);
  auto singles = james_states();
  ProjectorSet out;
  out.n_qubits = n_qubits;
  std::size_t total = std::size_t{1} << (2 * n_qubits);
  out.states.reserve(total);
  out.projectors.reserve(total);
  out.indices.reserve(total);
  for (std::size_t pos = 0; pos < total; ++pos) {
    // Digits of pos in base 4, i_1 most significant.
    std::vector<int> idx(n_qubits);
    std::size_t rem = pos;
    for (std::size_t k = n_qubits; k-- > 0;) {
      idx[k] = static_cast<int>(rem % 4);
      rem /= 4;
    }
    ComplexVector psi = singles[idx[0]];
    for (std::size_t k = 1; k < n_qubits; ++k) {
      ComplexVector next(psi.size() * 2);
      for (Eigen::Index i = 0; i < psi.size(); ++i)
        next.segment(i * 2, 2) = psi(i) * singles[idx[k]];
      psi = std::move(next);
    }
    out.projectors.push_back(psi * psi.adjoint());
    out.states.push_back(std::move(psi));
    out.indices.push_back(std::move(idx));
  }
  return out;
}

PauliBasis pauli_basis(std::size_t n_qubits) {
  check_n(n_qubits);
  auto singles = single_paulis();
  PauliBasis out;
  out.n_qubits = n_qubits;
  std::size_t total = std::size_t{1} << (2 * n_qubits);
  out.gammas.reserve(total);
  for (std::size_t pos = 0; pos < total; ++pos) {
    std::vector<int> idx(n_qubits);
    std::size_t rem = pos;
    for (std::size_t k = n_qubits; k-- > 0;) {
      idx[k] = static_cast<int>(rem % 4);
      rem /= 4;
    }
    ComplexMatrix g = singles[idx[0]];
    for (std::size_t k = 1; k < n_qubits; ++k) g = linalg::kron(g, singles[idx[k]]);
    out.gammas.push_back(std::move(g));
  }
  return out;
}

RealVector outcomes(const DensityMatrix& rho, const ProjectorSet& pset) {
  if (rho.dim() != (Eigen::Index{1} << pset.n_qubits))
    throw DimensionMismatch("state dimension does not match projector set");
  RealVector m(pset.size());
  for (std::size_t pos = 0; pos < pset.size(); ++pos) {
    // Tr(|psi><psi| rho) = <psi|rho|psi>.
    Complex v = pset.states[pos].adjoint() * rho.mat() * pset.states[pos];
    m(pos) = checked_real(v, "outcome").real();
  }
  return m;
}

RealMatrix b_matrix(const ProjectorSet& pset,
                    const std::optional<std::vector<std::size_t>>& subset) {
  PauliBasis pb = pauli_basis(pset.n_qubits);
  std::vector<std::size_t> rows;
  if (subset) {
    rows = checked_subset(*subset, pset.size());
  } else {
    rows.resize(pset.size());
    for (std::size_t i = 0; i < pset.size(); ++i) rows[i] = i + 1;
  }
  RealMatrix b(rows.size(), pb.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const ComplexVector& psi = pset.states[rows[r] - 1];
    for (std::size_t mu = 0; mu < pb.size(); ++mu) {
      Complex v = psi.adjoint() * pb.gammas[mu] * psi;
      b(r, mu) = checked_real(v, "b_matrix entry").real();
    }
  }
  return b;
}

RealMatrix gramian(const ProjectorSet& pset) {
  RealMatrix g(pset.size(), pset.size());
  for (std::size_t i = 0; i < pset.size(); ++i)
    for (std::size_t j = 0; j < pset.size(); ++j) {
      // Tr(Pi Pi') = |<psi|psi'>|^2 for rank-1 projectors.
      Complex ov = pset.states[i].adjoint() * pset.states[j];
      g(i, j) = std::norm(ov);
    }
  return g;
}

const TomoContext& tomo_context(std::size_t n_qubits) {
  check_n(n_qubits);
  static const std::vector<TomoContext>* cache = [] {
    auto* all = new std::vector<TomoContext>;
    for (std::size_t n = 1; n <= 4; ++n) {
      TomoContext ctx;
      ctx.pset = projector_set(n);
      ctx.paulis = pauli_basis(n);
      ctx.b_full = b_matrix(ctx.pset);
      Eigen::FullPivLU<RealMatrix> lu(ctx.b_full);
      if (!lu.isInvertible())
        throw NotInvertible("full B matrix is singular at n = " + std::to_string(n));
      ctx.b_full_inv = lu.inverse();
      all->push_back(std::move(ctx));
    }
    return all;
  }();
  return (*cache)[n_qubits - 1];
}

MeasurementRecord make_record(const ProjectorSet& pset,
                              const std::vector<std::size_t>& subset,
                              const DensityMatrix& rho) {
  RealVector all = outcomes(rho, pset);
  auto checked = checked_subset(subset, pset.size());
  MeasurementRecord rec;
  rec.subset = checked;
  rec.outcomes.resize(checked.size());
  rec.operators.reserve(checked.size());
  for (std::size_t i = 0; i < checked.size(); ++i) {
    rec.operators.push_back(pset.projectors[checked[i] - 1]);
    rec.outcomes(i) = all(checked[i] - 1);
  }
  return rec;
}

MeasurementRecord make_record(const ProjectorSet& pset,
                              const std::vector<std::size_t>& subset,
                              const RealVector& m) {
  auto checked = checked_subset(subset, pset.size());
  if (static_cast<std::size_t>(m.size()) != checked.size())
    throw ShapeMismatch("outcome count does not match subset size");
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (m(i) < -1e-12 || m(i) > 1.0 + 1e-12)
      throw InvalidDistribution("outcome outside [0,1]: " + std::to_string(m(i)));
  MeasurementRecord rec;
  rec.subset = checked;
  rec.outcomes = m;
  rec.operators.reserve(checked.size());
  for (std::size_t nu : checked) rec.operators.push_back(pset.projectors[nu - 1]);
  return rec;
}

}  // namespace qtomo
