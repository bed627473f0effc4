#pragma once

#include "distil/tensor.hpp"

namespace distil {

// Label value marking positions that are not prediction targets.
inline constexpr int kIgnoreLabel = -100;

// One training unit: token ids, 0/1 attention mask and per-position target
// labels (kIgnoreLabel where no prediction is asked).
struct Batch {
    IntMat token_ids;
    IntMat attention_mask;
    IntMat mlm_labels;

    int batch_size() const { return token_ids.rows; }
    int seq_len() const { return token_ids.cols; }
};

}  // namespace distil
