#include "distil/encoder.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace distil {

void ModelConfig::validate() const {
    if (vocab_size < 1 || hidden_size < 1 || num_layers < 1 || num_heads < 1 ||
        intermediate_size < 1 || max_seq_len < 1)
        throw ContractError("model config: all sizes must be >= 1");
    if (hidden_size % num_heads != 0)
        throw ContractError("model config: hidden_size " +
                            std::to_string(hidden_size) +
                            " not divisible by num_heads " +
                            std::to_string(num_heads));
    if (layer_norm_eps <= 0.0)
        throw ContractError("model config: layer_norm_eps must be > 0");
}

std::string config_to_text(const ModelConfig& c) {
    char eps[64];
    std::snprintf(eps, sizeof(eps), "%.17g", c.layer_norm_eps);
    std::string s;
    s += "vocab_size: " + std::to_string(c.vocab_size) + "\n";
    s += "hidden_size: " + std::to_string(c.hidden_size) + "\n";
    s += "num_layers: " + std::to_string(c.num_layers) + "\n";
    s += "num_heads: " + std::to_string(c.num_heads) + "\n";
    s += "intermediate_size: " + std::to_string(c.intermediate_size) + "\n";
    s += "max_seq_len: " + std::to_string(c.max_seq_len) + "\n";
    s += "layer_norm_eps: " + std::string(eps) + "\n";
    return s;
}

ModelConfig config_from_text(const std::string& text) {
    ModelConfig c;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw DataError("model config: bad line '" + line + "'");
        const std::string key = line.substr(0, colon);
        const std::string value = line.substr(colon + 1);
        if (key == "vocab_size") c.vocab_size = std::stoi(value);
        else if (key == "hidden_size") c.hidden_size = std::stoi(value);
        else if (key == "num_layers") c.num_layers = std::stoi(value);
        else if (key == "num_heads") c.num_heads = std::stoi(value);
        else if (key == "intermediate_size") c.intermediate_size = std::stoi(value);
        else if (key == "max_seq_len") c.max_seq_len = std::stoi(value);
        else if (key == "layer_norm_eps") c.layer_norm_eps = std::stod(value);
        else throw DataError("model config: unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

void save_config(const ModelConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << config_to_text(config);
}

ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_text(buf.str());
}

// ---- model construction ----------------------------------------------------

namespace {

TransformerBlock random_block(const ModelConfig& c, Rng& rng) {
    const int h = c.hidden_size;
    const int f = c.intermediate_size;
    constexpr double kInitStd = 0.02;
    TransformerBlock b;
    b.wq = Tensor::randn({h, h}, rng, kInitStd, true);
    b.bq = Tensor::zeros({h}, true);
    b.wk = Tensor::randn({h, h}, rng, kInitStd, true);
    b.bk = Tensor::zeros({h}, true);
    b.wv = Tensor::randn({h, h}, rng, kInitStd, true);
    b.bv = Tensor::zeros({h}, true);
    b.wo = Tensor::randn({h, h}, rng, kInitStd, true);
    b.bo = Tensor::zeros({h}, true);
    b.w1 = Tensor::randn({h, f}, rng, kInitStd, true);
    b.b1 = Tensor::zeros({f}, true);
    b.w2 = Tensor::randn({f, h}, rng, kInitStd, true);
    b.b2 = Tensor::zeros({h}, true);
    b.ln1_gain = Tensor::full({h}, 1.0, true);
    b.ln1_bias = Tensor::zeros({h}, true);
    b.ln2_gain = Tensor::full({h}, 1.0, true);
    b.ln2_bias = Tensor::zeros({h}, true);
    return b;
}

void append_block_params(const TransformerBlock& b, std::vector<Tensor>& out) {
    out.insert(out.end(), {b.wq, b.bq, b.wk, b.bk, b.wv, b.bv, b.wo, b.bo,
                           b.w1, b.b1, b.w2, b.b2, b.ln1_gain, b.ln1_bias,
                           b.ln2_gain, b.ln2_bias});
}

TransformerBlock clone_block(const TransformerBlock& b) {
    TransformerBlock c;
    c.wq = b.wq.clone();
    c.bq = b.bq.clone();
    c.wk = b.wk.clone();
    c.bk = b.bk.clone();
    c.wv = b.wv.clone();
    c.bv = b.bv.clone();
    c.wo = b.wo.clone();
    c.bo = b.bo.clone();
    c.w1 = b.w1.clone();
    c.b1 = b.b1.clone();
    c.w2 = b.w2.clone();
    c.b2 = b.b2.clone();
    c.ln1_gain = b.ln1_gain.clone();
    c.ln1_bias = b.ln1_bias.clone();
    c.ln2_gain = b.ln2_gain.clone();
    c.ln2_bias = b.ln2_bias.clone();
    return c;
}

}  // namespace

EncoderModel EncoderModel::random_init(const ModelConfig& config,
                                       uint64_t seed) {
    config.validate();
    constexpr double kInitStd = 0.02;
    Rng rng(seed);
    EncoderModel m;
    m.config = config;
    m.token_embeddings =
        Tensor::randn({config.vocab_size, config.hidden_size}, rng, kInitStd, true);
    m.position_embeddings =
        Tensor::randn({config.max_seq_len, config.hidden_size}, rng, kInitStd, true);
    m.blocks.reserve(static_cast<size_t>(config.num_layers));
    for (int i = 0; i < config.num_layers; ++i)
        m.blocks.push_back(random_block(config, rng));
    m.mlm_w = Tensor::randn({config.hidden_size, config.vocab_size}, rng,
                            kInitStd, true);
    m.mlm_b = Tensor::zeros({config.vocab_size}, true);
    return m;
}

std::vector<Tensor> EncoderModel::parameters() const {
    std::vector<Tensor> out;
    out.push_back(token_embeddings);
    out.push_back(position_embeddings);
    for (const auto& b : blocks) append_block_params(b, out);
    out.push_back(mlm_w);
    out.push_back(mlm_b);
    return out;
}

void EncoderModel::set_requires_grad(bool rg) {
    for (Tensor& t : parameters()) t.set_requires_grad(rg);
}

void EncoderModel::zero_grad() {
    for (Tensor& t : parameters()) t.zero_grad();
}

EncoderModel EncoderModel::clone() const {
    EncoderModel m;
    m.config = config;
    m.token_embeddings = token_embeddings.clone();
    m.position_embeddings = position_embeddings.clone();
    m.blocks.reserve(blocks.size());
    for (const auto& b : blocks) m.blocks.push_back(clone_block(b));
    m.mlm_w = mlm_w.clone();
    m.mlm_b = mlm_b.clone();
    return m;
}

// ---- forward ---------------------------------------------------------------

namespace {

// Large negative stand-in for -inf; keeps fully masked rows finite
// (softmax turns them uniform instead of NaN).
constexpr double kMaskBias = -1e9;

Tensor attention_mask_bias(const Batch& batch, int num_heads) {
    const int b = batch.batch_size();
    const int s = batch.seq_len();
    Tensor bias = Tensor::zeros({b, num_heads, s, s});
    auto& v = bias.data();
    size_t idx = 0;
    for (int bi = 0; bi < b; ++bi)
        for (int h = 0; h < num_heads; ++h)
            for (int q = 0; q < s; ++q)
                for (int k = 0; k < s; ++k, ++idx)
                    if (batch.attention_mask.at(bi, k) == 0) v[idx] = kMaskBias;
    return bias;
}

Tensor dropout_mask(const std::vector<int>& shape, double p, Rng& rng) {
    Tensor m = Tensor::zeros(shape);
    const double keep_scale = 1.0 / (1.0 - p);
    for (double& x : m.data()) x = (rng.uniform() >= p) ? keep_scale : 0.0;
    return m;
}

}  // namespace

Tensor encoder_forward(Graph& g, const EncoderModel& model, const Batch& batch,
                       const ForwardOptions& opts) {
    const ModelConfig& c = model.config;
    const int b = batch.batch_size();
    const int s = batch.seq_len();
    if (b < 1 || s < 1) throw ContractError("encoder_forward: empty batch");
    if (s > c.max_seq_len)
        throw ContractError("encoder_forward: sequence length " +
                            std::to_string(s) + " exceeds max_seq_len " +
                            std::to_string(c.max_seq_len));
    if (batch.attention_mask.rows != b || batch.attention_mask.cols != s)
        throw ContractError("encoder_forward: attention mask shape mismatch");
    const bool use_dropout = opts.dropout > 0.0 && opts.rng != nullptr;

    IntMat positions(b, s);
    for (int bi = 0; bi < b; ++bi)
        for (int si = 0; si < s; ++si) positions.at(bi, si) = si;

    Tensor x3 = add(g, embedding(g, model.token_embeddings, batch.token_ids),
                    embedding(g, model.position_embeddings, positions));

    const int bs = b * s;
    const int h = c.hidden_size;
    const int nh = c.num_heads;
    const int dh = h / nh;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Tensor mask_bias = attention_mask_bias(batch, nh);

    Tensor x = reshape(g, x3, {bs, h});
    for (const TransformerBlock& blk : model.blocks) {
        // self-attention
        auto heads = [&](const Tensor& w, const Tensor& bvec) {
            Tensor p = add(g, matmul(g, x, w), bvec);
            return permute(g, reshape(g, p, {b, s, nh, dh}), {0, 2, 1, 3});
        };
        Tensor q4 = heads(blk.wq, blk.bq);
        Tensor k4 = heads(blk.wk, blk.bk);
        Tensor v4 = heads(blk.wv, blk.bv);
        Tensor scores = scale(g, matmul(g, q4, permute(g, k4, {0, 1, 3, 2})),
                              att_scale);
        Tensor probs = softmax(g, add(g, scores, mask_bias));
        if (opts.trace) opts.trace->attention_probs.push_back(probs);
        if (use_dropout)
            probs = mul(g, probs,
                        dropout_mask(probs.shape(), opts.dropout, *opts.rng));
        Tensor ctx = reshape(g, permute(g, matmul(g, probs, v4), {0, 2, 1, 3}),
                             {bs, h});
        Tensor attn_out = add(g, matmul(g, ctx, blk.wo), blk.bo);
        if (use_dropout)
            attn_out = mul(g, attn_out, dropout_mask(attn_out.shape(),
                                                     opts.dropout, *opts.rng));
        Tensor h1 = layer_norm(g, add(g, x, attn_out), blk.ln1_gain,
                               blk.ln1_bias, c.layer_norm_eps);

        // feed-forward
        Tensor ff = add(g, matmul(g, gelu(g, add(g, matmul(g, h1, blk.w1),
                                                 blk.b1)),
                                  blk.w2),
                        blk.b2);
        if (use_dropout)
            ff = mul(g, ff, dropout_mask(ff.shape(), opts.dropout, *opts.rng));
        x = layer_norm(g, add(g, h1, ff), blk.ln2_gain, blk.ln2_bias,
                       c.layer_norm_eps);
        if (opts.trace) opts.trace->blocks_executed++;
    }
    return reshape(g, x, {b, s, h});
}

Tensor mlm_logits(Graph& g, const EncoderModel& model, const Tensor& hidden) {
    if (hidden.rank() != 3 || hidden.dim(2) != model.config.hidden_size)
        throw ShapeError("mlm_logits: hidden " + shape_str(hidden.shape()) +
                         " does not match hidden_size " +
                         std::to_string(model.config.hidden_size));
    const int b = hidden.dim(0);
    const int s = hidden.dim(1);
    Tensor flat = reshape(g, hidden, {b * s, model.config.hidden_size});
    Tensor logits = add(g, matmul(g, flat, model.mlm_w), model.mlm_b);
    return reshape(g, logits, {b, s, model.config.vocab_size});
}

EncoderModel init_student_from_teacher(const EncoderModel& teacher) {
    if (teacher.config.num_layers % 2 != 0)
        throw ContractError("init_student_from_teacher: teacher depth " +
                            std::to_string(teacher.config.num_layers) +
                            " is odd");
    EncoderModel student;
    student.config = teacher.config;
    student.config.num_layers = teacher.config.num_layers / 2;
    student.token_embeddings = teacher.token_embeddings.clone();
    student.position_embeddings = teacher.position_embeddings.clone();
    student.blocks.reserve(static_cast<size_t>(student.config.num_layers));
    // one layer out of two, keeping the even indices 0, 2, 4, ...
    for (int j = 0; j < student.config.num_layers; ++j)
        student.blocks.push_back(clone_block(teacher.blocks[static_cast<size_t>(2 * j)]));
    student.mlm_w = teacher.mlm_w.clone();
    student.mlm_b = teacher.mlm_b.clone();
    return student;
}

int64_t param_count(const EncoderModel& model) {
    int64_t n = 0;
    for (const Tensor& t : model.parameters()) n += t.size();
    return n;
}

// ---- checkpoints -----------------------------------------------------------
// Layout: 8-byte magic, u32 version, u32 config text length, config text,
// u64 scalar parameter count, then raw little-endian 64-bit floats in
// parameter declaration order.

namespace {

constexpr char kMagic[8] = {'E', 'N', 'C', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw CheckpointError("truncated file while reading " + what);
    return v;
}

}  // namespace

void save_checkpoint(const EncoderModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    const std::string cfg = config_to_text(model.config);
    write_pod(out, static_cast<uint32_t>(cfg.size()));
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    write_pod(out, static_cast<uint64_t>(param_count(model)));
    for (const Tensor& t : model.parameters())
        out.write(reinterpret_cast<const char*>(t.data().data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!out) throw IoError("write failed for " + path);
}

EncoderModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError("bad magic in " + path);
    const auto version = read_pod<uint32_t>(in, "version");
    if (version != kVersion)
        throw CheckpointError("version mismatch in " + path + ": file has " +
                              std::to_string(version) + ", expected " +
                              std::to_string(kVersion));
    const auto cfg_len = read_pod<uint32_t>(in, "config length");
    std::string cfg(cfg_len, '\0');
    in.read(cfg.data(), cfg_len);
    if (!in) throw CheckpointError("truncated config block in " + path);
    ModelConfig config = config_from_text(cfg);

    EncoderModel model = EncoderModel::random_init(config, 0);
    const auto n_params = read_pod<uint64_t>(in, "parameter count");
    if (n_params != static_cast<uint64_t>(param_count(model)))
        throw CheckpointError("parameter count mismatch in " + path);
    for (Tensor& t : model.parameters()) {
        in.read(reinterpret_cast<char*>(t.data().data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!in) throw CheckpointError("truncated parameter data in " + path);
    }
    in.peek();
    if (!in.eof()) throw CheckpointError("trailing bytes in " + path);
    return model;
}

}  // namespace distil
