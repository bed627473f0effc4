#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distil/batch.hpp"
#include "distil/tensor.hpp"

namespace distil {

struct ModelConfig {
    int vocab_size = 0;
    int hidden_size = 0;
    int num_layers = 0;
    int num_heads = 0;
    int intermediate_size = 0;
    int max_seq_len = 0;
    double layer_norm_eps = 1e-12;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

std::string config_to_text(const ModelConfig& config);
ModelConfig config_from_text(const std::string& text);
void save_config(const ModelConfig& config, const std::string& path);
ModelConfig load_config(const std::string& path);

// Attention projections, feed-forward and the two post-norm pairs.
struct TransformerBlock {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor w1, b1, w2, b2;
    Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};

// BERT-style encoder: learned token+position embeddings, a stack of
// post-layer-norm transformer blocks, and a linear masked-LM head.
// Copies are disabled; tensor handles alias storage, so an accidental
// copy would share parameters between two "models". Use clone().
struct EncoderModel {
    ModelConfig config;
    Tensor token_embeddings;
    Tensor position_embeddings;
    std::vector<TransformerBlock> blocks;
    Tensor mlm_w, mlm_b;

    EncoderModel() = default;
    EncoderModel(const EncoderModel&) = delete;
    EncoderModel& operator=(const EncoderModel&) = delete;
    EncoderModel(EncoderModel&&) = default;
    EncoderModel& operator=(EncoderModel&&) = default;

    static EncoderModel random_init(const ModelConfig& config, uint64_t seed);

    // All parameter tensors in declaration order (shared handles).
    std::vector<Tensor> parameters() const;
    void set_requires_grad(bool rg);
    void zero_grad();
    EncoderModel clone() const;
};

// Optional instrumentation collected during a forward pass.
struct ForwardTrace {
    int blocks_executed = 0;
    std::vector<Tensor> attention_probs;  // one [B x heads x S x S] per block
};

struct ForwardOptions {
    double dropout = 0.0;  // applied only when rng is set
    Rng* rng = nullptr;
    ForwardTrace* trace = nullptr;
};

// Final-layer hidden states [batch x seq x hidden]. Masked key positions
// receive a large negative attention bias before the softmax.
Tensor encoder_forward(Graph& g, const EncoderModel& model, const Batch& batch,
                       const ForwardOptions& opts = {});

// Linear vocabulary projection of hidden states; no softmax applied.
Tensor mlm_logits(Graph& g, const EncoderModel& model, const Tensor& hidden);

// Half-depth student: block j is a deep copy of teacher block 2j, with
// embeddings and MLM head copied verbatim. No storage is shared.
EncoderModel init_student_from_teacher(const EncoderModel& teacher);

int64_t param_count(const EncoderModel& model);

void save_checkpoint(const EncoderModel& model, const std::string& path);
EncoderModel load_checkpoint(const std::string& path);

}  // namespace distil
