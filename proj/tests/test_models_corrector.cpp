#include <cmath>

#include "doctest.h"
#include "qtomo/models/corrector.hpp"

using namespace qtomo;
using models::CorrectorModel;
using models::CorrectorVariant;

TEST_CASE("untrained model reproduces the least-squares estimate exactly") {
  auto pset = projector_set(1);
  rng::Xoshiro256pp gen(3);
  DensityMatrix rho = random_mixed(1, gen, SampleMethod::GinibreMixed);
  MeasurementRecord rec = make_record(pset, {1, 3}, rho);
  for (CorrectorVariant v : {CorrectorVariant::FullM, CorrectorVariant::PiOnly,
                             CorrectorVariant::Quadratic}) {
    CorrectorModel model = CorrectorModel::make(v, 1, 2, /*seed=*/7);
    CorrectionTerms t = corrector_predict(model, rec);
    CHECK(t.b.norm() == 0.0);
    CHECK(t.c.norm() == 0.0);
    CHECK(t.s.has_value() == (v == CorrectorVariant::Quadratic));
    ComplexMatrix est = apply_corrector(rec, t, 1);
    CHECK((est - pinv_reconstruct(rec, 1)).norm() == 0.0);
  }
}

TEST_CASE("input encoding concatenates projector entries and outcomes") {
  auto pset = projector_set(1);
  RealVector m(2);
  m << 0.25, 0.75;
  MeasurementRecord rec = make_record(pset, {3, 1}, m);
  // Slot layout per measurement: Re(Pi) row-major, Im(Pi) row-major, then
  // the outcome (FullM only).
  RealVector full = models::encode_input(rec, CorrectorVariant::FullM);
  REQUIRE(full.size() == 2 * (4 + 4 + 1));
  const ComplexMatrix& pi3 = pset.projector(3);
  for (Eigen::Index r = 0; r < 2; ++r) {
    for (Eigen::Index c = 0; c < 2; ++c) {
      CHECK(full(2 * r + c) == doctest::Approx(pi3(r, c).real()).epsilon(1e-15));
      CHECK(full(4 + 2 * r + c) == doctest::Approx(pi3(r, c).imag()).epsilon(1e-15));
    }
  }
  CHECK(full(8) == 0.25);
  // Second slot starts at 9 and belongs to Pi_1.
  const ComplexMatrix& pi1 = pset.projector(1);
  CHECK(full(9) == doctest::Approx(pi1(0, 0).real()).epsilon(1e-15));
  CHECK(full(17) == 0.75);

  RealVector pi_only = models::encode_input(rec, CorrectorVariant::PiOnly);
  REQUIRE(pi_only.size() == 2 * (4 + 4));
  CHECK(pi_only(0) == full(0));
  CHECK(pi_only(8) == full(9));  // no outcome slot between the projectors

  // The quadratic variant reads operators only; its outcome dependence lives
  // in the b m + S m m' structure instead of the encoding.
  RealVector quad = models::encode_input(rec, CorrectorVariant::Quadratic);
  CHECK(quad == pi_only);
}

TEST_CASE("input and output sizes follow the variant") {
  // n = 2, M = 16: a 4x4 projector contributes 32 reals per slot (+1 outcome
  // for the value-aware variants); outputs are b (16x16) + c (16)
  // [+ S 16x16x16].
  CHECK(CorrectorModel::input_size(CorrectorVariant::FullM, 2, 16) == 16 * 33);
  CHECK(CorrectorModel::input_size(CorrectorVariant::PiOnly, 2, 16) == 16 * 32);
  CHECK(CorrectorModel::input_size(CorrectorVariant::Quadratic, 2, 16) == 16 * 32);
  CHECK(CorrectorModel::output_size(CorrectorVariant::FullM, 2, 16) == 256 + 16);
  CHECK(CorrectorModel::output_size(CorrectorVariant::PiOnly, 2, 16) == 256 + 16);
  CHECK(CorrectorModel::output_size(CorrectorVariant::Quadratic, 2, 16) ==
        256 + 16 + 4096);
}

TEST_CASE("operator-only variant ignores the measured values") {
  auto pset = projector_set(1);
  RealVector m1(2), m2(2);
  m1 << 0.2, 0.9;
  m2 << 0.7, 0.1;
  MeasurementRecord a = make_record(pset, {2, 4}, m1);
  MeasurementRecord b = make_record(pset, {2, 4}, m2);
  CorrectorModel model = CorrectorModel::make(CorrectorVariant::PiOnly, 1, 2, 11);
  // Give the output layer some weights so predictions are nonzero.
  rng::Xoshiro256pp gen(5);
  model.mlp.weights().init_glorot(gen);
  CorrectionTerms ta = corrector_predict(model, a);
  CorrectionTerms tb = corrector_predict(model, b);
  CHECK((ta.b - tb.b).norm() == 0.0);
  CHECK((ta.c - tb.c).norm() == 0.0);
  CHECK(ta.b.norm() > 0.0);  // the prediction itself is nontrivial
}

TEST_CASE("quadratic slices come out symmetric") {
  auto pset = projector_set(1);
  RealVector m(3);
  m << 0.3, 0.5, 0.6;
  MeasurementRecord rec = make_record(pset, {1, 2, 3}, m);
  CorrectorModel model = CorrectorModel::make(CorrectorVariant::Quadratic, 1, 3, 2);
  rng::Xoshiro256pp gen(6);
  model.mlp.weights().init_glorot(gen);
  CorrectionTerms t = corrector_predict(model, rec);
  REQUIRE(t.s.has_value());
  REQUIRE(t.s->size() == 4);
  double total = 0.0;
  for (const RealMatrix& slice : *t.s) {
    CHECK((slice - slice.transpose()).norm() < 1e-14);
    total += slice.norm();
  }
  CHECK(total > 0.0);
}

TEST_CASE("parameter count for the 2-qubit full-information model") {
  CorrectorModel model = CorrectorModel::make(CorrectorVariant::FullM, 2, 16, 0);
  // 528 -> 64 repeated x6 -> 272, all affine:
  // 528*64+64 + 5*(64*64+64) + 64*272+272 = 72336.
  std::size_t expect = 528 * 64 + 64 + 5 * (64 * 64 + 64) + 64 * 272 + 272;
  CHECK(expect == 72336);
  CHECK(model.mlp.weights().total_size() == expect);
}

TEST_CASE("training reduces the loss on a fixed pair") {
  auto dataset = generate_dataset(1, 256, 42);
  nn::TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 64;
  cfg.learning_rate = 1e-3;
  cfg.seed = 1;
  std::vector<models::TrainLogRow> log;
  CorrectorModel model = models::train_corrector(
      dataset, std::vector<std::size_t>{1, 3}, CorrectorVariant::FullM, cfg, 1, 2,
      &log);
  // One row per batch: 256/64 = 4 steps over 6 epochs, 0-based counters.
  REQUIRE(log.size() == 24);
  CHECK(log.front().epoch == 0);
  CHECK(log.back().epoch == 5);
  CHECK(log.back().step == 3);
  // Loss averaged over the first vs last epoch must drop noticeably.
  double first = 0.0, last = 0.0;
  std::size_t nf = 0, nl = 0;
  for (const auto& row : log) {
    if (row.epoch == 0) { first += row.loss; ++nf; }
    if (row.epoch == log.back().epoch) { last += row.loss; ++nl; }
  }
  first /= static_cast<double>(nf);
  last /= static_cast<double>(nl);
  CHECK(last < 0.8 * first);
  // The learned correction never leaks into measured outcomes.
  for (const auto& row : log) CHECK(row.ortho < 1e-8);
}

TEST_CASE("resume continues the optimizer instead of restarting") {
  auto dataset = generate_dataset(1, 128, 9);
  nn::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 64;
  cfg.seed = 3;
  std::vector<std::size_t> subset{1, 4};

  nn::AdamMoments moments;
  std::uint64_t step = 0;
  CorrectorModel first =
      models::train_corrector(dataset, subset, CorrectorVariant::FullM, cfg, 1, 2,
                              nullptr, &moments, &step);
  CHECK(step == 4);  // 128/64 batches x 2 epochs
  CHECK(moments.m.size() == first.mlp.weights().total_size());

  std::vector<double> carried = first.mlp.weights().flat();
  CorrectorModel second =
      models::train_corrector(dataset, subset, CorrectorVariant::FullM, cfg, 1, 2,
                              nullptr, &moments, &step, &carried);
  CHECK(step == 8);
  // Training moved the weights somewhere new.
  CHECK(second.mlp.weights().flat() != carried);
}

TEST_CASE("batched reconstruction equals per-record prediction") {
  auto pset = projector_set(1);
  auto dataset = generate_dataset(1, 6, 31);
  CorrectorModel model = CorrectorModel::make(CorrectorVariant::FullM, 1, 2, 17);
  rng::Xoshiro256pp gen(8);
  model.mlp.weights().init_glorot(gen);
  std::vector<std::size_t> subset{2, 3};
  std::vector<const DensityMatrix*> ptrs;
  for (const auto& s : dataset) ptrs.push_back(&s);
  auto batch = models::corrector_reconstruct_batch(model, subset, ptrs);
  REQUIRE(batch.size() == dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    MeasurementRecord rec = make_record(pset, subset, dataset[i]);
    ComplexMatrix solo = apply_corrector(rec, corrector_predict(model, rec), 1);
    CHECK((batch[i] - solo).norm() < 1e-12);
  }
}
