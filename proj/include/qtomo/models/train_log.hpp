#pragma once

#include <cstddef>

namespace qtomo::models {

// One training-log line: loss is the full batch objective; ortho carries the
// mode's auxiliary scalar (orthogonality residual for correctors,
// cross-entropy for the predefined-basis selector, 0 otherwise).
struct TrainLogRow {
  std::size_t epoch;
  std::size_t step;
  double loss;
  double ortho;
};

}  // namespace qtomo::models
