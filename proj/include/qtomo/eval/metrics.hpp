#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "qtomo/measurement.hpp"

namespace qtomo::eval {

// Clip negative eigenvalues to zero and renormalize the trace. Used only to
// admit raw reconstructions into fidelity/bures; statistics of raw outputs
// (psd_stats) never see it. Throws NotPSD when the positive mass is <= 1e-12,
// i.e. there is essentially no state left to renormalize.
ComplexMatrix psd_repair(const ComplexMatrix& rho);

// (Tr sqrt(sqrt(r1) r2 sqrt(r1)))^2 after repairing both arguments. Values
// above 1 + 1e-8 are an internal-consistency failure; smaller excess is
// clamped.
double fidelity(const ComplexMatrix& r1, const ComplexMatrix& r2);

// sqrt(2 - 2 sqrt(F)).
double bures(const ComplexMatrix& r1, const ComplexMatrix& r2);

// Mean absolute element-wise reconstruction error over a test set for one
// measurement pair.
struct ErrorMap {
  std::size_t nu, nup;
  RealMatrix values;  // d x d, mean |rho_ab - rec_ab|
};

using Reconstructor = std::function<ComplexMatrix(const MeasurementRecord&)>;

ErrorMap error_map(const std::vector<DensityMatrix>& test,
                   const Reconstructor& reconstruct,
                   std::pair<std::size_t, std::size_t> pair,
                   std::size_t n_qubits);

// Statistics of the two lowest eigenvalues across raw (unrepaired)
// reconstructions. Sample standard deviation (n-1); zeros when fewer than
// two samples.
struct EigStats {
  double mean_lowest = 0.0, std_lowest = 0.0;
  double mean_second = 0.0, std_second = 0.0;
  std::size_t n = 0;
};

EigStats psd_stats(const std::vector<ComplexMatrix>& reconstructions);

}  // namespace qtomo::eval
