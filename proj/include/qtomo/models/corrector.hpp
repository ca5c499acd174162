#pragma once

#include <optional>
#include <vector>

#include "qtomo/models/train_log.hpp"
#include "qtomo/nn/adam.hpp"
#include "qtomo/nn/mlp.hpp"
#include "qtomo/reconstruct.hpp"

namespace qtomo::models {

enum class CorrectorVariant { FullM, PiOnly, Quadratic };

// MLP that maps an encoded measurement collection to correction terms.
// Output layout: b row-major (mu major, nu minor), then c, then for the
// quadratic variant S row-major (mu, nu, nu'), symmetrized before use.
struct CorrectorModel {
  CorrectorVariant variant;
  std::size_t n_qubits;
  std::size_t m_size;
  nn::Mlp mlp;

  // 6 hidden layers x 64 units by default; final layer zero-initialized so
  // an untrained model reproduces the pseudoinverse.
  static CorrectorModel make(CorrectorVariant variant, std::size_t n_qubits,
                             std::size_t m_size, std::uint64_t seed,
                             std::size_t hidden = 64, std::size_t hidden_layers = 6);

  static std::size_t input_size(CorrectorVariant variant, std::size_t n_qubits,
                                std::size_t m_size);
  static std::size_t output_size(CorrectorVariant variant, std::size_t n_qubits,
                                 std::size_t m_size);
};

// Per measurement slot: Re(Pi) row-major, Im(Pi) row-major, then the outcome
// for FullM. Slots concatenated in record order.
RealVector encode_input(const MeasurementRecord& record, CorrectorVariant variant);

CorrectionTerms corrector_predict(const CorrectorModel& model,
                                  const MeasurementRecord& record);

// Corrected reconstructions for one shared subset across many states, with
// the MLP evaluated as a single batch.
std::vector<ComplexMatrix> corrector_reconstruct_batch(
    const CorrectorModel& model, const std::vector<std::size_t>& subset,
    const std::vector<const DensityMatrix*>& states);

// Supervised training on reconstruction loss plus the squared orthogonality
// residual. With a fixed subset every batch uses that collection; without
// one, each batch draws a fresh random collection of size m_size (one model
// per M, amortized over collections).
CorrectorModel train_corrector(const std::vector<DensityMatrix>& dataset,
                               const std::optional<std::vector<std::size_t>>& subset,
                               CorrectorVariant variant, const nn::TrainConfig& cfg,
                               std::size_t n_qubits, std::size_t m_size,
                               std::vector<TrainLogRow>* log = nullptr,
                               nn::AdamMoments* resume_moments = nullptr,
                               std::uint64_t* resume_step = nullptr,
                               const std::vector<double>* resume_weights = nullptr);

}  // namespace qtomo::models
