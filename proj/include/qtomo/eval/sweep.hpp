#pragma once

#include <functional>
#include <vector>

#include "qtomo/eval/metrics.hpp"
#include "qtomo/mle.hpp"
#include "qtomo/models/corrector.hpp"
#include "qtomo/models/selector.hpp"

namespace qtomo::eval {

enum class Method {
  Pseudoinverse,
  Mle,
  Analytic1q,
  CorrectorFullM,
  CorrectorPiOnly,
  CorrectorQuadratic,
  LstmRandom,
  LstmPredefined,
  LstmCustom,
};

// Stable label used in reports and the CLI.
const char* method_name(Method method);

struct SweepSpec {
  Method method = Method::Pseudoinverse;
  std::size_t n_qubits = 1;
  std::vector<std::size_t> m_values;  // measurement budgets; 0 = the I/d anchor
  std::size_t collections_per_m = 100;
  std::uint64_t seed = 0;
  MleConfig mle;  // used by Method::Mle only
  // Worker threads over collections (subset methods only; LSTM episodes run
  // batched on one thread). Per-collection results merge in index order, so
  // output is bit-identical for every jobs value.
  std::size_t jobs = 1;
};

struct SweepRow {
  std::size_t m;
  double mean_bures;
  double std_bures;  // sample std over all (state, collection) samples
  std::size_t n_samples;
};

struct SweepResult {
  Method method;
  std::size_t n_qubits;
  std::uint64_t seed;
  std::vector<SweepRow> rows;  // in m_values order
};

// Supplies the trained corrector for a given measurement budget M (corrector
// methods train one model per M). Returning nullptr fails the sweep.
using CorrectorProvider =
    std::function<const models::CorrectorModel*(std::size_t m)>;

// Mean Bures distance between reconstructions and truth across the test set.
// Subset methods draw collections_per_m measurement subsets per M, derived
// from (seed, M, collection index) only, so different methods see identical
// subsets under the same seed. LSTM methods run one episode per state and
// read the reconstruction at each requested step count; Method::LstmRandom
// derives its index streams per state from the same seed. Raw reconstructions
// are PSD-repaired inside the metric only.
SweepResult bures_sweep(const std::vector<DensityMatrix>& test,
                        const SweepSpec& spec,
                        const CorrectorProvider& correctors = {},
                        const models::SelectorReconstructor* selector = nullptr);

// Same sampling scheme, but collects raw-reconstruction eigenvalue statistics
// instead of distances. M = 0 rows are not meaningful here and are rejected.
struct PsdSweepRow {
  std::size_t m;
  EigStats stats;
};

std::vector<PsdSweepRow> psd_sweep(const std::vector<DensityMatrix>& test,
                                   const SweepSpec& spec,
                                   const CorrectorProvider& correctors = {},
                                   const models::SelectorReconstructor* selector = nullptr);

}  // namespace qtomo::eval
