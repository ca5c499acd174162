#pragma once

#include <optional>
#include <vector>

#include "qtomo/measurement.hpp"
#include "qtomo/models/train_log.hpp"
#include "qtomo/nn/adam.hpp"
#include "qtomo/nn/lstm.hpp"

namespace qtomo::models {

enum class SelectionMode { PredefinedBasis, CustomOperator, RandomBasis };

// LSTM pair: lstm_r consumes (Pi_l, m_l) steps and emits the running
// reconstruction as two real channels (Hermitized d x d); lstm_s proposes the
// next measurement (index logits for PredefinedBasis, per-qubit state
// parameters for CustomOperator). RandomBasis carries no selector net.
struct SelectorReconstructor {
  SelectionMode mode;
  std::size_t n_qubits;
  nn::LstmNet lstm_r;
  std::optional<nn::LstmNet> lstm_s;

  // layers = 0 picks the capacity default: 2 layers for n >= 3, 1 otherwise.
  static SelectorReconstructor make(SelectionMode mode, std::size_t n_qubits,
                                    std::uint64_t seed, std::size_t hidden = 256,
                                    std::size_t layers = 0);
};

struct EpisodeStep {
  std::size_t nu;     // 1-based predefined index; 0 for a custom operator
  ComplexMatrix pi;
  double m;
  ComplexMatrix rho;  // raw reconstruction after this measurement
};

// One measurement episode on a true state, starting from Pi_1 = mu0^(x)N and
// computing m_l = Tr(Pi_l rho) in-loop. gen drives the RandomBasis index
// stream and is ignored by the other modes.
std::vector<EpisodeStep> lstm_reconstruct_episode(const SelectorReconstructor& model,
                                                  const DensityMatrix& rho,
                                                  std::size_t steps,
                                                  rng::Xoshiro256pp* gen = nullptr);

struct PredefinedChoice {
  RealVector probabilities;  // masked-renormalized softmax over 4^N indices
  std::size_t nu;            // argmax, ties broken toward the lowest index
};

// Advances s_state by one step. Throws AllUsed when the mask is full.
PredefinedChoice select_next_predefined(const SelectorReconstructor& model,
                                        nn::LstmState& s_state,
                                        const ComplexMatrix& prev_pi, double prev_m,
                                        const std::vector<bool>& used);

// Advances s_state by one step; emits a rank-1 product projector built from
// normalized per-qubit states (fallback |0> below norm 1e-9).
ComplexMatrix select_next_custom(const SelectorReconstructor& model,
                                 nn::LstmState& s_state,
                                 const ComplexMatrix& prev_pi, double prev_m);

// Step-summed episode loss (1/B) sum_{i,l} ||rho_i - rho_hat_{i,l}|| of one
// batch at the current weights, with full parameter gradients (episode
// rollout included, so CustomOperator gradients flow through the emitted
// operators and their outcomes). RandomBasis requires the per-row index
// sequences (1-based, starting at 1) that define the episodes. Not defined
// for PredefinedBasis, whose selector trains on a different objective.
// Null gradient outputs skip the backward pass.
double episode_loss_and_grad(
    const SelectorReconstructor& model,
    const std::vector<const DensityMatrix*>& batch, std::size_t steps,
    std::vector<double>* grad_r, std::vector<double>* grad_s,
    const std::vector<std::vector<std::size_t>>* rnd_sequences = nullptr);

// Optimizer state for continuing a training run from a checkpoint.
struct SelectorResume {
  std::vector<double> weights_r;
  std::vector<double> weights_s;  // empty when the mode has no selector net
  nn::AdamMoments moments_r, moments_s;
  std::uint64_t step = 0;
};

// RandomBasis/CustomOperator: joint end-to-end training on the step-summed
// reconstruction loss. PredefinedBasis: per step, every unused candidate is
// probed through a copy of the reconstructor state, the batch-argmin becomes
// the cross-entropy target for the selector, and the batch episode follows
// the selector's batch-mean argmax in lockstep (per-row argmax remains the
// evaluation-time rule). Log rows carry the batch reconstruction loss; the
// ortho column holds the selector's mean cross-entropy (0 for other modes).
SelectorReconstructor train_selector_reconstructor(
    const std::vector<DensityMatrix>& dataset, SelectionMode mode,
    const nn::TrainConfig& cfg, std::size_t n_qubits, std::size_t steps,
    std::size_t hidden = 256, std::size_t layers = 0,
    std::vector<TrainLogRow>* log = nullptr, SelectorResume* resume = nullptr);

// Frozen-model evaluation in lockstep over many states: one episode of
// max(step_marks) steps per state; returns [mark][state] raw reconstructions
// at each requested step count. RandomBasis streams are derived per state
// from seed and the state's position.
std::vector<std::vector<ComplexMatrix>> episode_reconstructions(
    const SelectorReconstructor& model,
    const std::vector<const DensityMatrix*>& states,
    const std::vector<std::size_t>& step_marks, std::uint64_t seed);

}  // namespace qtomo::models
