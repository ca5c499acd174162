#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qtomo/models/corrector.hpp"
#include "qtomo/models/selector.hpp"

namespace qtomo::io {

// Checkpoint file: magic "QTNN", u32 version, a model-kind tag, key=value
// metadata, a named shape table, the flat weight buffer (little-endian f64,
// tensors in registration order), and optionally the training step plus Adam
// moment vectors.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string kind;
  std::map<std::string, std::string> meta;
  std::vector<nn::TensorSpec> shapes;  // offsets/sizes recomputed on read
  std::vector<double> flat;
  std::optional<std::uint64_t> step;
  std::optional<nn::AdamMoments> moments;
};

void write_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint read_checkpoint(const std::string& path);

// Kind tags: CORR_M / CORR_PI / CORR_Q and LSTM_RND / LSTM_PRE / LSTM_CUS.
const char* kind_of(models::CorrectorVariant variant);
const char* kind_of(models::SelectionMode mode);

void save_corrector(const std::string& path, const models::CorrectorModel& model,
                    std::optional<std::uint64_t> step = {},
                    const nn::AdamMoments* moments = nullptr,
                    const std::map<std::string, std::string>& extra_meta = {});

struct LoadedCorrector {
  models::CorrectorModel model;
  std::map<std::string, std::string> meta;
  std::uint64_t step = 0;
  nn::AdamMoments moments;  // empty when the file carries no optimizer state
};

LoadedCorrector load_corrector(const std::string& path);

// The two nets are packed as one shape table ("r."/"s." name prefixes) and
// one flat buffer, reconstructor first; Adam moments concatenate the same way.
void save_selector(const std::string& path,
                   const models::SelectorReconstructor& model,
                   std::optional<std::uint64_t> step = {},
                   const nn::AdamMoments* moments_r = nullptr,
                   const nn::AdamMoments* moments_s = nullptr,
                   const std::map<std::string, std::string>& extra_meta = {});

struct LoadedSelector {
  models::SelectorReconstructor model;
  std::map<std::string, std::string> meta;
  std::uint64_t step = 0;
  nn::AdamMoments moments_r, moments_s;
};

LoadedSelector load_selector(const std::string& path);

}  // namespace qtomo::io
