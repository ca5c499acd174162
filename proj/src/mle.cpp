#include "qtomo/mle.hpp"

#include <algorithm>
#include <cmath>

namespace qtomo {

namespace {

constexpr double kProbFloor = 1e-12;

double log_likelihood(const MeasurementRecord& record, const ComplexMatrix& rho) {
  double ll = 0.0;
  for (std::size_t i = 0; i < record.size(); ++i) {
    double p = (record.operators[i] * rho).trace().real();
    p = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
    double m = record.outcomes(i);
    if (m > 0.0) ll += m * std::log(p);
    if (m < 1.0) ll += (1.0 - m) * std::log(1.0 - p);
  }
  return ll;
}

ComplexMatrix r_operator(const MeasurementRecord& record, const ComplexMatrix& rho) {
  Eigen::Index d = rho.rows();
  ComplexMatrix r = ComplexMatrix::Zero(d, d);
  ComplexMatrix eye = ComplexMatrix::Identity(d, d);
  for (std::size_t i = 0; i < record.size(); ++i) {
    double p = (record.operators[i] * rho).trace().real();
    p = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
    double m = record.outcomes(i);
    r += (m / p) * record.operators[i];
    r += ((1.0 - m) / (1.0 - p)) * (eye - record.operators[i]);
  }
  return r;
}

}  // namespace

DensityMatrix mle_reconstruct(const MeasurementRecord& record, std::size_t n_qubits,
                              const MleConfig& cfg) {
  if (record.size() == 0) throw ShapeMismatch("record must contain measurements");
  if (cfg.tol <= 0.0 || cfg.dilution <= 0.0 || cfg.dilution > 1.0)
    throw InvalidSpec("MleConfig requires tol > 0 and dilution in (0,1]");
  Eigen::Index d = Eigen::Index{1} << n_qubits;
  if (record.operators[0].rows() != d)
    throw DimensionMismatch("record operators do not match qubit count");

  ComplexMatrix rho = ComplexMatrix::Identity(d, d) / static_cast<double>(d);
  double ll = log_likelihood(record, rho);
  int consecutive_drops = 0;

  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    ComplexMatrix r = r_operator(record, rho);
    ComplexMatrix step = r * rho * r;
    Complex tr = step.trace();
    if (std::abs(tr) < 1e-300) throw Divergence("R rho R collapsed to zero");
    step /= tr;

    // Backtrack the dilution until the step no longer lowers the likelihood.
    double eps = cfg.dilution;
    ComplexMatrix next;
    double ll_next = 0.0;
    for (int halvings = 0;; ++halvings) {
      next = (1.0 - eps) * rho + eps * step;
      next = 0.5 * (next + ComplexMatrix(next.adjoint()));
      next /= next.trace().real();
      ll_next = log_likelihood(record, next);
      if (ll_next >= ll - 1e-12 || halvings >= 30) break;
      eps *= 0.5;
    }

    if (ll_next < ll - 1e-12) {
      if (++consecutive_drops >= 10)
        throw Divergence("likelihood decreased over 10 consecutive steps");
    } else {
      consecutive_drops = 0;
    }

    double change = std::abs(ll_next - ll);
    rho = std::move(next);
    ll = ll_next;
    if (change < cfg.tol) break;
  }
  return validate(rho);
}

}  // namespace qtomo
