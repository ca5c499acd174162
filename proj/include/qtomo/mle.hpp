#pragma once

#include "qtomo/measurement.hpp"

namespace qtomo {

struct MleConfig {
  std::size_t max_iters = 2000;
  double tol = 1e-10;      // stop when the log-likelihood change falls below
  double dilution = 0.5;   // epsilon in (0,1]
};

// Diluted R rho R fixed-point iteration from the measured subset only.
//
// Each exact outcome m_nu is a full binary measurement (Pi_nu, I - Pi_nu), so
// the likelihood is L = sum_nu [m_nu log p_nu + (1-m_nu) log(1-p_nu)] with
// p_nu = Tr(Pi_nu rho). Its stationarity operator is
//   R = sum_nu [ m_nu/p_nu * Pi_nu + (1-m_nu)/(1-p_nu) * (I - Pi_nu) ],
// whose interior fixed points are exactly the data-consistent states
// (p_nu = m_nu). A likelihood over the measured projectors alone would be
// maximized by states that overshoot the recorded probabilities toward 1,
// contradicting data consistency; the complement terms are what make the
// missing-basis ("intensity-aware") baseline well posed.
//
// Update: rho <- normalize((1-eps) rho + eps * R rho R / Tr(R rho R)), with
// eps backtracked by halving whenever the step would lower L. Initialization
// at I/d. Output is always a valid state.
DensityMatrix mle_reconstruct(const MeasurementRecord& record, std::size_t n_qubits,
                              const MleConfig& cfg = {});

}  // namespace qtomo
