#include "qtomo/eval/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "qtomo/reconstruct.hpp"

namespace qtomo::eval {

namespace {

bool is_corrector(Method m) {
  return m == Method::CorrectorFullM || m == Method::CorrectorPiOnly ||
         m == Method::CorrectorQuadratic;
}

bool is_lstm(Method m) {
  return m == Method::LstmRandom || m == Method::LstmPredefined ||
         m == Method::LstmCustom;
}

models::CorrectorVariant variant_of(Method m) {
  switch (m) {
    case Method::CorrectorFullM: return models::CorrectorVariant::FullM;
    case Method::CorrectorPiOnly: return models::CorrectorVariant::PiOnly;
    default: return models::CorrectorVariant::Quadratic;
  }
}

models::SelectionMode mode_of(Method m) {
  switch (m) {
    case Method::LstmRandom: return models::SelectionMode::RandomBasis;
    case Method::LstmPredefined: return models::SelectionMode::PredefinedBasis;
    default: return models::SelectionMode::CustomOperator;
  }
}

// Collection subsets depend on (seed, M, collection) only, so every method
// sees identical subsets under the same seed.
std::vector<std::size_t> draw_subset(std::size_t m, std::size_t total,
                                     std::uint64_t seed, std::size_t c) {
  std::uint64_t h = seed;
  h += 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(m) + 1);
  h += 0x517cc1b727220a95ULL * (static_cast<std::uint64_t>(c) + 1);
  rng::Xoshiro256pp gen(rng::splitmix64(h));
  std::vector<std::size_t> sub = rng::sample_without_replacement(m, total, gen);
  for (auto& v : sub) ++v;
  return sub;
}

struct Accum {
  double sum = 0.0, sumsq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  void merge(const Accum& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    n += o.n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double stddev() const {
    if (n < 2) return 0.0;
    double m = mean();
    double nn = static_cast<double>(n);
    return std::sqrt(std::max(0.0, (sumsq - nn * m * m) / (nn - 1.0)));
  }
};

// Runs fn(c) for c in [0, count), on up to `jobs` threads. Each call writes
// only its own output slot, so the later in-order merge is what fixes the
// result bits, not the schedule.
void run_collections(std::size_t jobs, std::size_t count,
                     const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t c = 0; c < count; ++c) fn(c);
    return;
  }
  std::size_t workers = std::min(jobs, count);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < count; c += workers) fn(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Raw reconstructions of the whole test set for one measurement subset.
std::vector<ComplexMatrix> collection_recs(const std::vector<DensityMatrix>& test,
                                           const std::vector<std::size_t>& subset,
                                           const SweepSpec& spec,
                                           const models::CorrectorModel* corrector) {
  if (is_corrector(spec.method)) {
    std::vector<const DensityMatrix*> ptrs;
    ptrs.reserve(test.size());
    for (const auto& rho : test) ptrs.push_back(&rho);
    return models::corrector_reconstruct_batch(*corrector, subset, ptrs);
  }
  const TomoContext& ctx = tomo_context(spec.n_qubits);
  std::vector<ComplexMatrix> out;
  out.reserve(test.size());
  for (const auto& rho : test) {
    MeasurementRecord record = make_record(ctx.pset, subset, rho);
    switch (spec.method) {
      case Method::Pseudoinverse:
        out.push_back(pinv_reconstruct(record, spec.n_qubits));
        break;
      case Method::Mle:
        out.push_back(mle_reconstruct(record, spec.n_qubits, spec.mle).mat());
        break;
      case Method::Analytic1q:
        out.push_back(analytic_1q({subset[0], subset[1]}, record.outcomes(0),
                                  record.outcomes(1)));
        break;
      default:
        throw UnsupportedCombination("not a subset-based method");
    }
  }
  return out;
}

// Shared pre-validation; returns the basis size.
std::size_t validate_sweep(const std::vector<DensityMatrix>& test,
                           const SweepSpec& spec,
                           const CorrectorProvider& correctors,
                           const models::SelectorReconstructor* selector,
                           bool allow_anchor) {
  if (test.empty()) throw InvalidSpec("empty test set");
  for (const auto& rho : test)
    if (rho.n_qubits() != spec.n_qubits)
      throw ShapeMismatch("test state does not match the sweep's qubit count");
  if (spec.m_values.empty()) throw InvalidSpec("no measurement budgets given");
  const Eigen::Index d = linalg::qubit_dim(spec.n_qubits);
  const std::size_t total =
      static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
  const bool lstm = is_lstm(spec.method);
  if (!lstm && spec.collections_per_m < 1)
    throw InvalidSpec("need at least one collection per M");
  for (std::size_t m : spec.m_values) {
    if (m == 0) {
      if (!allow_anchor) throw InvalidSpec("M=0 has no reconstruction");
      continue;
    }
    if (m > total && spec.method != Method::LstmCustom)
      throw UnsupportedCombination("M exceeds the basis size");
    if (spec.method == Method::Analytic1q && m != 2)
      throw UnsupportedCombination("the analytic method is defined for M=2 only");
  }
  if (spec.method == Method::Analytic1q && spec.n_qubits != 1)
    throw UnsupportedCombination("the analytic method is defined for one qubit");
  if (is_corrector(spec.method) && !correctors)
    throw UnsupportedCombination("corrector sweeps need trained models");
  if (lstm) {
    if (selector == nullptr)
      throw UnsupportedCombination("LSTM sweeps need a trained model");
    if (selector->mode != mode_of(spec.method) ||
        selector->n_qubits != spec.n_qubits)
      throw UnsupportedCombination("LSTM model does not match the sweep spec");
  }
  return total;
}

const models::CorrectorModel* corrector_for(const SweepSpec& spec,
                                            const CorrectorProvider& correctors,
                                            std::size_t m) {
  if (!is_corrector(spec.method)) return nullptr;
  const models::CorrectorModel* model = correctors(m);
  if (model == nullptr)
    throw UnsupportedCombination("no corrector available for M=" + std::to_string(m));
  if (model->n_qubits != spec.n_qubits || model->m_size != m ||
      model->variant != variant_of(spec.method))
    throw UnsupportedCombination("corrector does not match the sweep spec");
  return model;
}

}  // namespace

const char* method_name(Method method) {
  switch (method) {
    case Method::Pseudoinverse: return "pinv";
    case Method::Mle: return "mle";
    case Method::Analytic1q: return "analytic";
    case Method::CorrectorFullM: return "corr_m";
    case Method::CorrectorPiOnly: return "corr_pi";
    case Method::CorrectorQuadratic: return "corr_q";
    case Method::LstmRandom: return "lstm_rnd";
    case Method::LstmPredefined: return "lstm_pre";
    case Method::LstmCustom: return "lstm_cus";
  }
  return "unknown";
}

SweepResult bures_sweep(const std::vector<DensityMatrix>& test,
                        const SweepSpec& spec,
                        const CorrectorProvider& correctors,
                        const models::SelectorReconstructor* selector) {
  const std::size_t total = validate_sweep(test, spec, correctors, selector, true);
  const Eigen::Index d = linalg::qubit_dim(spec.n_qubits);
  SweepResult res{spec.method, spec.n_qubits, spec.seed, {}};

  auto anchor_row = [&] {
    ComplexMatrix eye = linalg::identity(d) / Complex(static_cast<double>(d), 0.0);
    Accum a;
    for (const auto& rho : test) a.add(bures(eye, rho.mat()));
    return SweepRow{0, a.mean(), a.stddev(), a.n};
  };

  if (is_lstm(spec.method)) {
    std::vector<std::size_t> marks;
    for (std::size_t m : spec.m_values)
      if (m > 0) marks.push_back(m);
    std::vector<const DensityMatrix*> ptrs;
    ptrs.reserve(test.size());
    for (const auto& rho : test) ptrs.push_back(&rho);
    auto recs = models::episode_reconstructions(*selector, ptrs, marks, spec.seed);
    std::size_t mi = 0;
    for (std::size_t m : spec.m_values) {
      if (m == 0) {
        res.rows.push_back(anchor_row());
        continue;
      }
      Accum a;
      for (std::size_t i = 0; i < test.size(); ++i)
        a.add(bures(recs[mi][i], test[i].mat()));
      res.rows.push_back({m, a.mean(), a.stddev(), a.n});
      ++mi;
    }
    return res;
  }

  for (std::size_t m : spec.m_values) {
    if (m == 0) {
      res.rows.push_back(anchor_row());
      continue;
    }
    const models::CorrectorModel* model = corrector_for(spec, correctors, m);
    std::vector<Accum> parts(spec.collections_per_m);
    run_collections(spec.jobs, spec.collections_per_m, [&](std::size_t c) {
      auto subset = draw_subset(m, total, spec.seed, c);
      auto recs = collection_recs(test, subset, spec, model);
      for (std::size_t i = 0; i < test.size(); ++i)
        parts[c].add(bures(recs[i], test[i].mat()));
    });
    Accum a;
    for (const Accum& p : parts) a.merge(p);
    res.rows.push_back({m, a.mean(), a.stddev(), a.n});
  }
  return res;
}

std::vector<PsdSweepRow> psd_sweep(const std::vector<DensityMatrix>& test,
                                   const SweepSpec& spec,
                                   const CorrectorProvider& correctors,
                                   const models::SelectorReconstructor* selector) {
  const std::size_t total = validate_sweep(test, spec, correctors, selector, false);
  std::vector<PsdSweepRow> rows;

  auto eig_row = [](std::size_t m, const Accum& lo, const Accum& sec) {
    EigStats st;
    st.mean_lowest = lo.mean();
    st.std_lowest = lo.stddev();
    st.mean_second = sec.mean();
    st.std_second = sec.stddev();
    st.n = lo.n;
    return PsdSweepRow{m, st};
  };
  auto add_eigs = [](const ComplexMatrix& rec, Accum& lo, Accum& sec) {
    linalg::HermitianEig eig = linalg::hermitian_eig(rec);
    lo.add(eig.eigenvalues(0));
    sec.add(eig.eigenvalues.size() > 1 ? eig.eigenvalues(1) : eig.eigenvalues(0));
  };

  if (is_lstm(spec.method)) {
    std::vector<const DensityMatrix*> ptrs;
    ptrs.reserve(test.size());
    for (const auto& rho : test) ptrs.push_back(&rho);
    auto recs = models::episode_reconstructions(*selector, ptrs, spec.m_values,
                                                spec.seed);
    for (std::size_t mi = 0; mi < spec.m_values.size(); ++mi) {
      Accum lo, sec;
      for (const auto& rec : recs[mi]) add_eigs(rec, lo, sec);
      rows.push_back(eig_row(spec.m_values[mi], lo, sec));
    }
    return rows;
  }

  for (std::size_t m : spec.m_values) {
    const models::CorrectorModel* model = corrector_for(spec, correctors, m);
    std::vector<std::pair<Accum, Accum>> parts(spec.collections_per_m);
    run_collections(spec.jobs, spec.collections_per_m, [&](std::size_t c) {
      auto subset = draw_subset(m, total, spec.seed, c);
      auto recs = collection_recs(test, subset, spec, model);
      for (const auto& rec : recs) add_eigs(rec, parts[c].first, parts[c].second);
    });
    Accum lo, sec;
    for (const auto& p : parts) {
      lo.merge(p.first);
      sec.merge(p.second);
    }
    rows.push_back(eig_row(m, lo, sec));
  }
  return rows;
}

}  // namespace qtomo::eval
