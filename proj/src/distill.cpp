#include "distil/distill.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace distil {

namespace {

constexpr double kLogFloor = -100.0;

// softmax of one row of width v from src+offset into dst
void softmax_row(const double* src, double* dst, int v) {
    double mx = src[0];
    for (int i = 1; i < v; ++i) mx = std::max(mx, src[i]);
    double z = 0.0;
    for (int i = 0; i < v; ++i) {
        dst[i] = std::exp(src[i] - mx);
        z += dst[i];
    }
    for (int i = 0; i < v; ++i) dst[i] /= z;
}

double lse_row(const double* src, int v) {
    double mx = src[0];
    for (int i = 1; i < v; ++i) mx = std::max(mx, src[i]);
    double z = 0.0;
    for (int i = 0; i < v; ++i) z += std::exp(src[i] - mx);
    return mx + std::log(z);
}

LossResult no_targets() { return {Tensor::scalar(0.0), false}; }

int64_t rows_of(const Tensor& logits) {
    return logits.size() / logits.shape().back();
}

}  // namespace

void DistillWeights::validate() const {
    if (alpha_kd < 0.0 || alpha_mlm < 0.0 || alpha_cos < 0.0)
        throw ContractError("distill weights must be nonnegative");
}

LossResult kd_loss(Graph& g, const Tensor& teacher_logits,
                   const Tensor& student_logits, double temperature) {
    if (!teacher_logits.defined() || !student_logits.defined())
        return no_targets();
    if (!(temperature > 0.0))
        throw ContractError("kd_loss: temperature must be > 0");
    if (teacher_logits.shape() != student_logits.shape())
        throw ContractError("kd_loss: teacher " +
                            shape_str(teacher_logits.shape()) + " vs student " +
                            shape_str(student_logits.shape()));
    if (student_logits.rank() < 2)
        throw ContractError("kd_loss: logits must have a class axis, got " +
                            shape_str(student_logits.shape()));

    const int v = student_logits.shape().back();
    const int64_t n = rows_of(student_logits);
    const double t2 = temperature * temperature;

    // teacher distribution is a constant; student softmax is saved for the
    // adjoint together with the clamp mask sums
    std::vector<double> tprob(static_cast<size_t>(n) * v);
    std::vector<double> sprob(static_cast<size_t>(n) * v);
    std::vector<double> scaled(static_cast<size_t>(v));
    const auto& tv = teacher_logits.data();
    const auto& sv = student_logits.data();
    auto scale_row = [&](const std::vector<double>& src, int64_t r) {
        for (int i = 0; i < v; ++i)
            scaled[static_cast<size_t>(i)] =
                src[static_cast<size_t>(r) * v + i] / temperature;
        return scaled.data();
    };

    double loss = 0.0;
    std::vector<double> msum(static_cast<size_t>(n));  // sum_v t_v * m_v
    std::vector<char> active(static_cast<size_t>(n) * v);
    for (int64_t r = 0; r < n; ++r) {
        softmax_row(scale_row(tv, r), &tprob[static_cast<size_t>(r) * v], v);
        softmax_row(scale_row(sv, r), &sprob[static_cast<size_t>(r) * v], v);
        double row = 0.0, ts = 0.0;
        for (int i = 0; i < v; ++i) {
            const size_t idx = static_cast<size_t>(r) * v + i;
            double lg = std::log(sprob[idx]);
            const bool ok = lg > kLogFloor;
            active[idx] = ok ? 1 : 0;
            if (!ok) lg = kLogFloor;
            row -= tprob[idx] * lg;
            if (ok) ts += tprob[idx];
        }
        msum[static_cast<size_t>(r)] = ts;
        loss += row;
    }
    loss = t2 * loss / static_cast<double>(n);

    Tensor out = Tensor::scalar(loss);
    if (g.recording() && student_logits.requires_grad()) {
        out.set_requires_grad(true);
        Tensor s = student_logits, o = out;
        g.record([s, o, sprob = std::move(sprob), tprob = std::move(tprob),
                  msum = std::move(msum), active = std::move(active), n, v,
                  temperature]() mutable {
            if (!o.has_grad()) return;
            const double og = o.grad()[0];
            if (og == 0.0) return;
            auto& sg = s.grad();
            const double k = og * temperature / static_cast<double>(n);
            for (int64_t r = 0; r < n; ++r)
                for (int i = 0; i < v; ++i) {
                    const size_t idx = static_cast<size_t>(r) * v + i;
                    const double tm = active[idx] ? tprob[idx] : 0.0;
                    sg[idx] += k * (sprob[idx] * msum[static_cast<size_t>(r)] -
                                    tm);
                }
        });
    }
    return {out, true};
}

LossResult mlm_loss(Graph& g, const Tensor& student_logits,
                    const IntMat& labels) {
    if (!student_logits.defined()) return no_targets();
    if (student_logits.rank() < 2)
        throw ContractError("mlm_loss: logits must have a class axis, got " +
                            shape_str(student_logits.shape()));
    const int v = student_logits.shape().back();
    const int64_t n = rows_of(student_logits);
    if (static_cast<int64_t>(labels.rows) * labels.cols != n)
        throw ContractError("mlm_loss: " + std::to_string(n) +
                            " logit rows vs " +
                            std::to_string(labels.rows * labels.cols) +
                            " labels");

    std::vector<int64_t> targets;
    for (int64_t i = 0; i < n; ++i) {
        const int y = labels.v[static_cast<size_t>(i)];
        if (y == kIgnoreLabel) continue;
        if (y < 0 || y >= v)
            throw DataError("mlm_loss: label " + std::to_string(y) +
                            " out of range [0," + std::to_string(v) +
                            ") at position " + std::to_string(i));
        targets.push_back(i);
    }
    if (targets.empty()) return no_targets();

    const auto& sv = student_logits.data();
    const auto nt = static_cast<double>(targets.size());
    double loss = 0.0;
    for (int64_t row : targets) {
        const double* z = &sv[static_cast<size_t>(row) * v];
        loss += lse_row(z, v) - z[labels.v[static_cast<size_t>(row)]];
    }
    loss /= nt;

    Tensor out = Tensor::scalar(loss);
    if (g.recording() && student_logits.requires_grad()) {
        out.set_requires_grad(true);
        Tensor s = student_logits, o = out;
        IntMat lab = labels;
        g.record([s, o, targets = std::move(targets), lab, v, nt]() mutable {
            if (!o.has_grad()) return;
            const double og = o.grad()[0];
            if (og == 0.0) return;
            auto& sg = s.grad();
            const auto& sv2 = s.data();
            std::vector<double> p(static_cast<size_t>(v));
            for (int64_t row : targets) {
                softmax_row(&sv2[static_cast<size_t>(row) * v], p.data(), v);
                const int y = lab.v[static_cast<size_t>(row)];
                for (int i = 0; i < v; ++i)
                    sg[static_cast<size_t>(row) * v + i] +=
                        og * (p[static_cast<size_t>(i)] - (i == y ? 1.0 : 0.0)) /
                        nt;
            }
        });
    }
    return {out, true};
}

LossResult cos_loss(Graph& g, const Tensor& student_hidden,
                    const Tensor& teacher_hidden,
                    const IntMat& attention_mask) {
    if (!student_hidden.defined() || !teacher_hidden.defined())
        return no_targets();
    if (student_hidden.shape() != teacher_hidden.shape())
        throw ContractError("cos_loss: student " +
                            shape_str(student_hidden.shape()) + " vs teacher " +
                            shape_str(teacher_hidden.shape()));
    const int h = student_hidden.shape().back();
    const int64_t n = rows_of(student_hidden);
    if (static_cast<int64_t>(attention_mask.rows) * attention_mask.cols != n)
        throw ContractError("cos_loss: " + std::to_string(n) +
                            " positions vs mask of " +
                            std::to_string(attention_mask.rows *
                                           attention_mask.cols));

    std::vector<int64_t> keep;
    for (int64_t i = 0; i < n; ++i)
        if (attention_mask.v[static_cast<size_t>(i)] != 0) keep.push_back(i);
    if (keep.empty()) return no_targets();

    const auto& sv = student_hidden.data();
    const auto& tv = teacher_hidden.data();
    const auto np = static_cast<double>(keep.size());
    double loss = 0.0;
    // per kept position: dot, |s|, |t| for the adjoint
    std::vector<double> dots(keep.size()), sn(keep.size()), tn(keep.size());
    for (size_t k = 0; k < keep.size(); ++k) {
        const double* s = &sv[static_cast<size_t>(keep[k]) * h];
        const double* t = &tv[static_cast<size_t>(keep[k]) * h];
        double d = 0.0, s2 = 0.0, t2 = 0.0;
        for (int i = 0; i < h; ++i) {
            d += s[i] * t[i];
            s2 += s[i] * s[i];
            t2 += t[i] * t[i];
        }
        dots[k] = d;
        sn[k] = std::sqrt(s2);
        tn[k] = std::sqrt(t2);
        const double sim = (sn[k] == 0.0 || tn[k] == 0.0)
                               ? 0.0
                               : d / (sn[k] * tn[k]);
        loss += 1.0 - sim;
    }
    loss /= np;

    Tensor out = Tensor::scalar(loss);
    if (g.recording() && student_hidden.requires_grad()) {
        out.set_requires_grad(true);
        Tensor s = student_hidden, t = teacher_hidden, o = out;
        g.record([s, t, o, keep = std::move(keep), dots = std::move(dots),
                  sn = std::move(sn), tn = std::move(tn), h, np]() mutable {
            if (!o.has_grad()) return;
            const double og = o.grad()[0];
            if (og == 0.0) return;
            auto& sg = s.grad();
            const auto& sv2 = s.data();
            const auto& tv2 = t.data();
            for (size_t k = 0; k < keep.size(); ++k) {
                if (sn[k] == 0.0 || tn[k] == 0.0) continue;  // flat spot
                const size_t base = static_cast<size_t>(keep[k]) * h;
                const double inv = 1.0 / (sn[k] * tn[k]);
                const double proj = dots[k] / (sn[k] * sn[k] * sn[k] * tn[k]);
                for (int i = 0; i < h; ++i)
                    sg[base + i] += og / np *
                                    (sv2[base + i] * proj - tv2[base + i] * inv);
            }
        });
    }
    return {out, true};
}

DistillOutput combined_loss(Graph& g, const Batch& batch,
                            const EncoderModel& teacher,
                            const EncoderModel& student,
                            const DistillWeights& weights, double temperature,
                            const ForwardOptions& student_opts) {
    weights.validate();
    if (teacher.config.vocab_size != student.config.vocab_size ||
        teacher.config.hidden_size != student.config.hidden_size)
        throw ContractError(
            "combined_loss: teacher and student must share vocab and hidden "
            "sizes");

    Graph tg(false);  // the teacher is a constant: never on the tape
    Tensor teacher_hidden = encoder_forward(tg, teacher, batch);
    Tensor teacher_logits = mlm_logits(tg, teacher, teacher_hidden);

    Tensor student_hidden = encoder_forward(g, student, batch, student_opts);
    Tensor student_logits = mlm_logits(g, student, student_hidden);

    const int b = batch.batch_size();
    const int s = batch.seq_len();
    const int v = student.config.vocab_size;

    std::vector<int> masked_rows;
    for (int r = 0; r < b; ++r)
        for (int c = 0; c < s; ++c)
            if (batch.mlm_labels.at(r, c) != kIgnoreLabel)
                masked_rows.push_back(r * s + c);

    LossResult kd = no_targets();
    if (!masked_rows.empty()) {
        Tensor s_rows = gather_rows(g, reshape(g, student_logits, {b * s, v}),
                                    masked_rows);
        Tensor t_rows = gather_rows(
            tg, reshape(tg, teacher_logits, {b * s, v}), masked_rows);
        kd = kd_loss(g, t_rows, s_rows, temperature);
    }
    LossResult mlm = mlm_loss(g, student_logits, batch.mlm_labels);
    LossResult cos =
        cos_loss(g, student_hidden, teacher_hidden, batch.attention_mask);

    Tensor total = add(g,
                       add(g, scale(g, kd.value, weights.alpha_kd),
                           scale(g, mlm.value, weights.alpha_mlm)),
                       scale(g, cos.value, weights.alpha_cos));

    DistillOutput out;
    out.breakdown.kd = kd.value.value();
    out.breakdown.mlm = mlm.value.value();
    out.breakdown.cos = cos.value.value();
    out.breakdown.total = total.value();
    out.total = total;
    out.kd_has_targets = kd.has_targets;
    out.mlm_has_targets = mlm.has_targets;
    out.cos_has_targets = cos.has_targets;
    return out;
}

// ---- optimizer ---------------------------------------------------------------

void AdamState::init(const std::vector<Tensor>& params) {
    m.clear();
    v.clear();
    for (const Tensor& p : params) {
        m.emplace_back(static_cast<size_t>(p.size()), 0.0);
        v.emplace_back(static_cast<size_t>(p.size()), 0.0);
    }
    step = 0;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
    if (state.m.empty() && !params.empty()) state.init(params);
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw ContractError("adam_step: state does not match parameter list");
    state.step += 1;
    const double bc1 =
        1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 =
        1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& data = params[i].data();
        auto& mi = state.m[i];
        auto& vi = state.v[i];
        if (mi.size() != data.size())
            throw ContractError("adam_step: parameter " + std::to_string(i) +
                                " changed size");
        const std::vector<double>* grad =
            params[i].has_grad() ? &params[i].grad() : nullptr;
        for (size_t j = 0; j < data.size(); ++j) {
            const double gj = grad ? (*grad)[j] : 0.0;
            mi[j] = beta1 * mi[j] + (1.0 - beta1) * gj;
            vi[j] = beta2 * vi[j] + (1.0 - beta2) * gj * gj;
            data[j] -= lr * (mi[j] / bc1) / (std::sqrt(vi[j] / bc2) + eps);
        }
    }
}

// ---- training ----------------------------------------------------------------

void PretrainConfig::validate() const {
    if (batch_size < 1) throw ContractError("pretrain: batch_size must be >= 1");
    // zero epochs is a valid request to materialize the initial student
    if (epochs < 0) throw ContractError("pretrain: epochs must be >= 0");
    if (learning_rate < 0.0)
        throw ContractError("pretrain: learning_rate must be >= 0");
    if (!(mask_prob > 0.0 && mask_prob < 1.0))
        throw ContractError("pretrain: mask_prob must be in (0, 1)");
    if (!(temperature > 0.0))
        throw ContractError("pretrain: temperature must be > 0");
    if (dropout < 0.0 || dropout >= 1.0)
        throw ContractError("pretrain: dropout must be in [0, 1)");
    if (lr_decay < 0.0 || lr_decay > 1.0)
        throw ContractError("pretrain: lr_decay must be in [0, 1]");
    if (max_steps < 0) throw ContractError("pretrain: max_steps must be >= 0");
    weights.validate();
}

namespace {

std::vector<size_t> shuffled_indices(size_t n, uint64_t seed) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(seed);
    for (size_t i = n; i > 1; --i)
        std::swap(order[i - 1],
                  order[static_cast<size_t>(rng.uniform_int(
                      0, static_cast<int>(i)))]);
    return order;
}

void check_finite(const LossBreakdown& l, int64_t step) {
    const struct {
        const char* name;
        double v;
    } parts[] = {{"kd", l.kd}, {"mlm", l.mlm}, {"cos", l.cos},
                 {"total", l.total}};
    for (const auto& p : parts)
        if (!std::isfinite(p.v))
            throw TrainingError("non-finite " + std::string(p.name) +
                                " loss at step " + std::to_string(step));
}

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Seed streams: keep epoch shuffles, masking, and dropout independent.
constexpr uint64_t kShuffleStream = 0x100000;
constexpr uint64_t kMaskStream = 0x200000;
constexpr uint64_t kDropoutStream = 0x300000;

}  // namespace

PretrainResult pretrain(EncoderModel& student, const EncoderModel& teacher,
                        const std::vector<std::string>& sentences,
                        const Vocab& vocab, const PretrainConfig& config,
                        const std::string& out_dir) {
    config.validate();
    if (sentences.empty()) throw ContractError("pretrain: empty corpus");
    std::filesystem::create_directories(out_dir);

    const int max_seq =
        config.max_seq_len > 0 ? config.max_seq_len : student.config.max_seq_len;
    student.set_requires_grad(true);
    std::vector<Tensor> params = student.parameters();
    AdamState state;
    state.init(params);

    const int64_t per_epoch = static_cast<int64_t>(
        (sentences.size() + config.batch_size - 1) / config.batch_size);
    int64_t planned = per_epoch * config.epochs;
    if (config.max_steps > 0) planned = std::min(planned, config.max_steps);

    std::ofstream log_file(out_dir + "/train_log.csv");
    std::ofstream timing_file(out_dir + "/train_log.timing.csv");
    if (!log_file || !timing_file)
        throw IoError("cannot write training logs under " + out_dir);
    log_file << "step,kd,mlm,cos,total\n";
    timing_file << "step,wall_ms\n";

    PretrainResult result;
    int64_t step = 0;
    bool stopped = false;
    char line[256];
    for (int epoch = 0; epoch < config.epochs && !stopped; ++epoch) {
        const auto order = shuffled_indices(
            sentences.size(),
            hash_seed(config.global_seed,
                      kShuffleStream + static_cast<uint64_t>(epoch)));
        for (size_t at = 0; at < order.size() && !stopped;
             at += static_cast<size_t>(config.batch_size)) {
            std::vector<std::string> group;
            for (size_t i = at;
                 i < order.size() &&
                 i < at + static_cast<size_t>(config.batch_size);
                 ++i)
                group.push_back(sentences[order[i]]);

            Batch masked = mask_for_mlm(
                make_batch(group, vocab, max_seq), vocab, config.mask_prob,
                hash_seed(config.global_seed,
                          kMaskStream + static_cast<uint64_t>(step)));

            const double t0 = now_ms();
            Graph g;
            ForwardOptions sopts;
            Rng dropout_rng(hash_seed(config.global_seed,
                                      kDropoutStream +
                                          static_cast<uint64_t>(step)));
            if (config.dropout > 0.0) {
                sopts.dropout = config.dropout;
                sopts.rng = &dropout_rng;
            }
            DistillOutput out = combined_loss(g, masked, teacher, student,
                                              config.weights,
                                              config.temperature, sopts);
            check_finite(out.breakdown, step);
            backward(g, out.total);
            const double lr =
                config.learning_rate *
                (1.0 - config.lr_decay * static_cast<double>(step) /
                           static_cast<double>(std::max<int64_t>(planned, 1)));
            adam_step(params, state, lr, config.beta1, config.beta2,
                      config.adam_eps);
            student.zero_grad();
            const double wall = now_ms() - t0;

            TrainStepRecord rec{step, out.breakdown, wall};
            result.log.push_back(rec);
            std::snprintf(line, sizeof(line),
                          "%lld,%.17g,%.17g,%.17g,%.17g\n",
                          static_cast<long long>(step), rec.loss.kd,
                          rec.loss.mlm, rec.loss.cos, rec.loss.total);
            log_file << line;
            std::snprintf(line, sizeof(line), "%lld,%.3f\n",
                          static_cast<long long>(step), wall);
            timing_file << line;

            ++step;
            if (config.max_steps > 0 && step >= config.max_steps)
                stopped = true;
        }
        if (!stopped) {
            const std::string path =
                out_dir + "/student_epoch" + std::to_string(epoch + 1) +
                ".ckpt";
            save_checkpoint(student, path);
            result.checkpoint_paths.push_back(path);
        }
    }
    const std::string final_path = out_dir + "/student_final.ckpt";
    save_checkpoint(student, final_path);
    result.checkpoint_paths.push_back(final_path);
    if (!log_file || !timing_file)
        throw IoError("write failed for training logs under " + out_dir);
    return result;
}

std::vector<TrainStepRecord> train_mlm(EncoderModel& model,
                                       const std::vector<std::string>& sentences,
                                       const Vocab& vocab,
                                       const PretrainConfig& config) {
    config.validate();
    if (sentences.empty()) throw ContractError("train_mlm: empty corpus");
    const int max_seq =
        config.max_seq_len > 0 ? config.max_seq_len : model.config.max_seq_len;
    model.set_requires_grad(true);
    std::vector<Tensor> params = model.parameters();
    AdamState state;
    state.init(params);

    std::vector<TrainStepRecord> log;
    int64_t step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto order = shuffled_indices(
            sentences.size(),
            hash_seed(config.global_seed,
                      kShuffleStream + static_cast<uint64_t>(epoch)));
        for (size_t at = 0; at < order.size();
             at += static_cast<size_t>(config.batch_size)) {
            std::vector<std::string> group;
            for (size_t i = at;
                 i < order.size() &&
                 i < at + static_cast<size_t>(config.batch_size);
                 ++i)
                group.push_back(sentences[order[i]]);
            Batch masked = mask_for_mlm(
                make_batch(group, vocab, max_seq), vocab, config.mask_prob,
                hash_seed(config.global_seed,
                          kMaskStream + static_cast<uint64_t>(step)));

            const double t0 = now_ms();
            Graph g;
            Tensor hidden = encoder_forward(g, model, masked);
            Tensor logits = mlm_logits(g, model, hidden);
            LossResult mlm = mlm_loss(g, logits, masked.mlm_labels);
            LossBreakdown breakdown;
            breakdown.mlm = mlm.value.value();
            breakdown.total = breakdown.mlm;
            check_finite(breakdown, step);
            if (mlm.has_targets) {
                Tensor loss = mlm.value;
                backward(g, loss);
            }
            adam_step(params, state, config.learning_rate, config.beta1,
                      config.beta2, config.adam_eps);
            model.zero_grad();
            log.push_back({step, breakdown, now_ms() - t0});
            ++step;
            if (config.max_steps > 0 && step >= config.max_steps) return log;
        }
    }
    return log;
}

std::vector<Batch> make_mlm_batches(const std::vector<std::string>& sentences,
                                    const Vocab& vocab, int max_seq_len,
                                    int batch_size, double mask_prob,
                                    uint64_t global_seed) {
    if (batch_size < 1)
        throw ContractError("make_mlm_batches: batch_size must be >= 1");
    std::vector<Batch> out;
    for (size_t at = 0; at < sentences.size();
         at += static_cast<size_t>(batch_size)) {
        std::vector<std::string> group;
        for (size_t i = at;
             i < sentences.size() && i < at + static_cast<size_t>(batch_size);
             ++i)
            group.push_back(sentences[i]);
        out.push_back(mask_for_mlm(
            make_batch(group, vocab, max_seq_len), vocab, mask_prob,
            hash_seed(global_seed, kMaskStream + out.size())));
    }
    return out;
}

LossBreakdown evaluate_distill(const EncoderModel& teacher,
                               const EncoderModel& student,
                               const std::vector<Batch>& batches,
                               const DistillWeights& weights,
                               double temperature) {
    if (batches.empty())
        throw ContractError("evaluate_distill: no batches");
    LossBreakdown mean;
    for (const Batch& b : batches) {
        Graph g(false);
        DistillOutput out =
            combined_loss(g, b, teacher, student, weights, temperature);
        mean.kd += out.breakdown.kd;
        mean.mlm += out.breakdown.mlm;
        mean.cos += out.breakdown.cos;
    }
    const auto n = static_cast<double>(batches.size());
    mean.kd /= n;
    mean.mlm /= n;
    mean.cos /= n;
    mean.total = weights.alpha_kd * mean.kd + weights.alpha_mlm * mean.mlm +
                 weights.alpha_cos * mean.cos;
    return mean;
}

double evaluate_mlm(const EncoderModel& model,
                    const std::vector<Batch>& batches) {
    if (batches.empty()) throw ContractError("evaluate_mlm: no batches");
    double total = 0.0;
    for (const Batch& b : batches) {
        Graph g(false);
        Tensor hidden = encoder_forward(g, model, b);
        Tensor logits = mlm_logits(g, model, hidden);
        total += mlm_loss(g, logits, b.mlm_labels).value.value();
    }
    return total / static_cast<double>(batches.size());
}

void write_train_log(const std::vector<TrainStepRecord>& log,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "step,kd,mlm,cos,total\n";
    char line[256];
    for (const TrainStepRecord& r : log) {
        std::snprintf(line, sizeof(line), "%lld,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(r.step), r.loss.kd, r.loss.mlm,
                      r.loss.cos, r.loss.total);
        out << line;
    }
}

void write_timing_log(const std::vector<TrainStepRecord>& log,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "step,wall_ms\n";
    char line[128];
    for (const TrainStepRecord& r : log) {
        std::snprintf(line, sizeof(line), "%lld,%.3f\n",
                      static_cast<long long>(r.step), r.wall_ms);
        out << line;
    }
}

}  // namespace distil
