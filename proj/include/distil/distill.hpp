#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distil/batch.hpp"
#include "distil/corpus.hpp"
#include "distil/encoder.hpp"
#include "distil/tensor.hpp"

namespace distil {

// Mixing weights for the three-part training objective
// total = alpha_kd * kd + alpha_mlm * mlm + alpha_cos * cos.
struct DistillWeights {
    double alpha_kd = 0.45;
    double alpha_mlm = 0.45;
    double alpha_cos = 0.10;

    void validate() const;
    bool operator==(const DistillWeights&) const = default;
};

struct LossBreakdown {
    double kd = 0.0;
    double mlm = 0.0;
    double cos = 0.0;
    double total = 0.0;
};

// Scalar loss term plus a flag for the degenerate empty-target case, where
// the value is exactly 0 and carries no gradient.
struct LossResult {
    Tensor value;
    bool has_targets = false;
};

// Soft-target cross entropy between the teacher's and student's softmax
// rows, averaged over rows: -(1/N) sum_i sum_v t_iv * log s_iv, with the
// log clamped below at -100. The teacher side is a constant: gradients
// flow only into student_logits. temperature divides both logit sets
// before the softmaxes and scales the loss by temperature^2.
LossResult kd_loss(Graph& g, const Tensor& teacher_logits,
                   const Tensor& student_logits, double temperature = 1.0);

// Mean cross entropy against integer labels over positions whose label is
// not the ignore marker. logits: [N x V] or [B x S x V]; labels hold one
// entry per logit row.
LossResult mlm_loss(Graph& g, const Tensor& student_logits,
                    const IntMat& labels);

// Mean over unmasked positions of 1 - cosine(student, teacher) on the
// final hidden vectors. Zero-norm vectors get similarity 0 (loss 1, no
// gradient). The teacher side is a constant.
LossResult cos_loss(Graph& g, const Tensor& student_hidden,
                    const Tensor& teacher_hidden, const IntMat& attention_mask);

struct DistillOutput {
    LossBreakdown breakdown;
    Tensor total;  // differentiable scalar for the student
    bool kd_has_targets = false;
    bool mlm_has_targets = false;
    bool cos_has_targets = false;
};

// Runs the frozen teacher and the student on one masked batch and returns
// the weighted objective. kd and mlm read the masked positions' logits;
// cos reads final hidden states at unmasked input positions. Gradients
// reach student parameters only.
DistillOutput combined_loss(Graph& g, const Batch& batch,
                            const EncoderModel& teacher,
                            const EncoderModel& student,
                            const DistillWeights& weights = {},
                            double temperature = 1.0,
                            const ForwardOptions& student_opts = {});

// ---- optimizer -------------------------------------------------------------

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    int64_t step = 0;

    void init(const std::vector<Tensor>& params);
};

// Standard bias-corrected Adam update, in place. Parameters with no
// accumulated gradient are treated as having zero gradient.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// ---- training loops ---------------------------------------------------------

struct PretrainConfig {
    int batch_size = 6;
    double learning_rate = 5e-4;
    int epochs = 3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t global_seed = 0;
    double mask_prob = 0.15;
    DistillWeights weights;
    double temperature = 1.0;
    double dropout = 0.0;     // student-side only
    double lr_decay = 0.0;    // 0 constant; 1 decays linearly to 0 at the end
    int64_t max_steps = 0;    // 0 = run all epochs; else stop early
    int max_seq_len = 0;      // 0 = use the student's configured maximum

    void validate() const;
    bool operator==(const PretrainConfig&) const = default;
};

struct TrainStepRecord {
    int64_t step = 0;
    LossBreakdown loss;
    double wall_ms = 0.0;
};

struct PretrainResult {
    std::vector<TrainStepRecord> log;
    std::vector<std::string> checkpoint_paths;
};

// Distills the student against the frozen teacher. Deterministic in
// config.global_seed: epoch shuffles, masking, and dropout all derive from
// it. Writes per-step losses to <out_dir>/train_log.csv, wall times to
// <out_dir>/train_log.timing.csv, a checkpoint per epoch, and
// student_final.ckpt. Aborts with a diagnostic on a non-finite loss.
PretrainResult pretrain(EncoderModel& student, const EncoderModel& teacher,
                        const std::vector<std::string>& sentences,
                        const Vocab& vocab, const PretrainConfig& config,
                        const std::string& out_dir);

// Masked-LM-only training (used to prepare a teacher from scratch).
// Reuses PretrainConfig; the weights field is ignored.
std::vector<TrainStepRecord> train_mlm(EncoderModel& model,
                                       const std::vector<std::string>& sentences,
                                       const Vocab& vocab,
                                       const PretrainConfig& config);

// Deterministically groups sentences into batches of batch_size and applies
// MLM masking with seeds derived from global_seed.
std::vector<Batch> make_mlm_batches(const std::vector<std::string>& sentences,
                                    const Vocab& vocab, int max_seq_len,
                                    int batch_size, double mask_prob,
                                    uint64_t global_seed);

// Mean per-batch loss components of the student against the teacher on
// fixed, already-masked batches. No gradients.
LossBreakdown evaluate_distill(const EncoderModel& teacher,
                               const EncoderModel& student,
                               const std::vector<Batch>& batches,
                               const DistillWeights& weights = {},
                               double temperature = 1.0);

// Mean masked-LM cross entropy of a model over fixed batches. No gradients.
double evaluate_mlm(const EncoderModel& model, const std::vector<Batch>& batches);

void write_train_log(const std::vector<TrainStepRecord>& log,
                     const std::string& path);
void write_timing_log(const std::vector<TrainStepRecord>& log,
                      const std::string& path);

}  // namespace distil
