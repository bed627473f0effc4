#pragma once
// Run configuration: one INI-style file describing file locations, the
// teacher/student model pair and all training hyperparameters.

#include <cstdint>
#include <string>

#include "distil/distill.hpp"
#include "distil/encoder.hpp"
#include "distil/finetune.hpp"

namespace distil {

// Everything a command needs to run. Loaded from a plain-text config file
// with [section] headers and key = value lines; unspecified keys keep the
// full-scale defaults built into full_scale_config().
struct RunConfig {
    // [paths]
    std::string corpus;                      // raw sentences, one per line
    std::string vocab;                       // token-per-line vocabulary
    std::string checkpoint_dir = "checkpoints";
    std::string dataset;                     // task data (CoNLL or TSV)
    std::string split;                       // optional train/test split file
    std::string report_dir = "reports";

    // [model] — the teacher; the student shares every dimension except
    // depth, which is half the teacher's unless allow_any_depth is set.
    ModelConfig teacher;
    int student_layers = 0;      // 0 = teacher.num_layers / 2
    bool allow_any_depth = false;

    // [pretrain]
    PretrainConfig pretrain;

    // [task]
    TaskSpec task;

    uint64_t global_seed = 0;

    // The student's architecture: teacher width, halved (or configured)
    // depth.
    ModelConfig student_config() const;

    // Enforces the half-depth relation (unless overridden) and all
    // per-section validity rules.
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

// Full-scale profile: BERT-base teacher dimensions with the published
// pretraining and fine-tuning hyperparameters as defaults.
RunConfig full_scale_config();

// Desk-scale profile: same structural relations (half depth, same width,
// heads dividing hidden size) at laptop cost.
RunConfig desk_config();

// Parse / serialize. Serialization uses shortest round-trip number
// formatting, so parse(serialize(c)) == c exactly.
RunConfig parse_run_config(const std::string& text);
std::string run_config_to_text(const RunConfig& config);

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);

}  // namespace distil
