#include "distil/finetune.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <tuple>

#include "distil/error.hpp"
#include "distil/rng.hpp"

namespace distil {
namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Seed streams, kept distinct from the pretraining ones.
constexpr uint64_t kHeadStream = 0x400000;
constexpr uint64_t kOrderStream = 0x500000;

std::vector<size_t> shuffled_indices(size_t n, uint64_t seed) {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    for (size_t i = n; i > 1; --i)
        std::swap(order[i - 1],
                  order[static_cast<size_t>(
                      rng.uniform_int(0, static_cast<int>(i) - 1))]);
    return order;
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return buf;
}

int argmax_row(const double* row, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

// Collects predictions for a dataset, batch by batch, in dataset order.
// Token task: one prediction per non-ignored position; sequence task: one
// per example. `per_example` receives position counts so span scoring can
// reassemble sentence boundaries.
struct Predictions {
    std::vector<int> pred, gold;
    std::vector<int> per_example;  // predictions contributed per example
    double wall_ms = 0;
};

Predictions predict(const TaskModel& model, const LabeledDataset& data,
                    const Vocab& vocab, const TaskSpec& spec) {
    Predictions out;
    const double t0 = now_ms();
    const size_t n = data.examples.size();
    for (size_t begin = 0; begin < n;
         begin += static_cast<size_t>(spec.batch_size)) {
        const size_t end =
            std::min(n, begin + static_cast<size_t>(spec.batch_size));
        Batch batch = make_task_batch(data, begin, end, vocab,
                                      model.encoder.config.max_seq_len,
                                      model.kind);
        Graph g(false);
        Tensor logits = task_logits(g, model, batch);
        const int rows = logits.dim(0);
        const int cols = logits.dim(1);
        for (int r = 0; r < rows; ++r) {
            const int label = batch.mlm_labels.v[static_cast<size_t>(r)];
            if (label == kIgnoreLabel) continue;
            out.pred.push_back(
                argmax_row(&logits.data()[static_cast<size_t>(r) * cols],
                           cols));
            out.gold.push_back(label);
        }
        if (model.kind == TaskKind::token_classification) {
            // per-example counts: non-ignored positions per batch row
            const int seq = batch.token_ids.cols;
            for (size_t e = begin; e < end; ++e) {
                const int row0 = static_cast<int>(e - begin) * seq;
                int count = 0;
                for (int s = 0; s < seq; ++s)
                    if (batch.mlm_labels.v[static_cast<size_t>(row0 + s)] !=
                        kIgnoreLabel)
                        ++count;
                out.per_example.push_back(count);
            }
        } else {
            for (size_t e = begin; e < end; ++e) out.per_example.push_back(1);
        }
    }
    out.wall_ms = now_ms() - t0;
    return out;
}

using Span = std::tuple<std::string, int, int>;

double span_f1_from_counts(int64_t tp, int64_t pred_count,
                           int64_t gold_count) {
    if (pred_count == 0 && gold_count == 0) return 0.0;
    if (tp == 0 || pred_count == 0 || gold_count == 0) return 0.0;
    const double p = static_cast<double>(tp) / static_cast<double>(pred_count);
    const double r = static_cast<double>(tp) / static_cast<double>(gold_count);
    return 2.0 * p * r / (p + r);
}

}  // namespace

void TaskSpec::validate() const {
    if (num_labels < 2)
        throw ContractError("task: num_labels must be >= 2, got " +
                            std::to_string(num_labels));
    if (epochs < 0)
        throw ContractError("task: epochs must be >= 0, got " +
                            std::to_string(epochs));
    if (batch_size < 1)
        throw ContractError("task: batch_size must be >= 1, got " +
                            std::to_string(batch_size));
    if (!(learning_rate >= 0))
        throw ContractError("task: learning_rate must be >= 0");
    if (folds != 0 && folds < 2)
        throw ContractError("task: folds must be 0 or >= 2, got " +
                            std::to_string(folds));
}

void LabeledDataset::validate() const {
    const int labels = num_labels();
    for (size_t i = 0; i < examples.size(); ++i) {
        const LabeledExample& e = examples[i];
        if (e.tokens.empty())
            throw DataError("dataset: example " + std::to_string(i) +
                            " has no tokens");
        if (kind == TaskKind::token_classification) {
            if (e.token_labels.size() != e.tokens.size())
                throw DataError("dataset: example " + std::to_string(i) +
                                " has " + std::to_string(e.tokens.size()) +
                                " tokens but " +
                                std::to_string(e.token_labels.size()) +
                                " labels");
            for (int l : e.token_labels)
                if (l < 0 || l >= labels)
                    throw DataError("dataset: example " + std::to_string(i) +
                                    " label id " + std::to_string(l) +
                                    " out of range");
        } else {
            if (e.label < 0 || e.label >= labels)
                throw DataError("dataset: example " + std::to_string(i) +
                                " label id " + std::to_string(e.label) +
                                " out of range");
        }
    }
}

std::vector<Tensor> TaskModel::parameters() const {
    std::vector<Tensor> ps = encoder.parameters();
    ps.push_back(head_w);
    ps.push_back(head_b);
    return ps;
}

void TaskModel::set_requires_grad(bool rg) {
    for (Tensor p : parameters()) p.set_requires_grad(rg);
}

TaskModel TaskModel::clone() const {
    TaskModel out;
    out.encoder = encoder.clone();
    out.head_w = head_w.clone();
    out.head_b = head_b.clone();
    out.kind = kind;
    out.num_labels = num_labels;
    return out;
}

TaskModel attach_head(const EncoderModel& model, const TaskSpec& spec,
                      uint64_t seed) {
    spec.validate();
    TaskModel out;
    out.encoder = model.clone();
    Rng rng(hash_seed(seed, kHeadStream));
    out.head_w = Tensor::randn({model.config.hidden_size, spec.num_labels},
                               rng, 0.02);
    out.head_b = Tensor::zeros({spec.num_labels});
    out.kind = spec.kind;
    out.num_labels = spec.num_labels;
    return out;
}

Batch make_task_batch(const LabeledDataset& data, size_t begin, size_t end,
                      const Vocab& vocab, int seq_len, TaskKind kind) {
    if (begin >= end || end > data.examples.size())
        throw ContractError("task batch: bad example range");
    const int b = static_cast<int>(end - begin);

    // dynamic sequence length: longest sentence plus [CLS]/[SEP], capped
    int longest = 0;
    for (size_t e = begin; e < end; ++e)
        longest = std::max(longest,
                           static_cast<int>(data.examples[e].tokens.size()));
    const int s = std::min(seq_len, longest + 2);

    Batch batch;
    batch.token_ids = IntMat(b, s, Vocab::kPad);
    batch.attention_mask = IntMat(b, s, 0);
    if (kind == TaskKind::token_classification)
        batch.mlm_labels = IntMat(b, s, kIgnoreLabel);
    else
        batch.mlm_labels = IntMat(1, b, kIgnoreLabel);

    for (int row = 0; row < b; ++row) {
        const LabeledExample& e = data.examples[begin + static_cast<size_t>(row)];
        const int words =
            std::min(static_cast<int>(e.tokens.size()), s - 2);
        batch.token_ids.at(row, 0) = Vocab::kCls;
        batch.attention_mask.at(row, 0) = 1;
        for (int w = 0; w < words; ++w) {
            batch.token_ids.at(row, w + 1) =
                vocab.id_or_unk(lowercase(e.tokens[static_cast<size_t>(w)]));
            batch.attention_mask.at(row, w + 1) = 1;
            if (kind == TaskKind::token_classification)
                batch.mlm_labels.at(row, w + 1) =
                    e.token_labels[static_cast<size_t>(w)];
        }
        batch.token_ids.at(row, words + 1) = Vocab::kSep;
        batch.attention_mask.at(row, words + 1) = 1;
        if (kind == TaskKind::sequence_classification)
            batch.mlm_labels.at(0, row) = e.label;
    }
    return batch;
}

Tensor task_logits(Graph& g, const TaskModel& model, const Batch& batch) {
    Tensor hidden = encoder_forward(g, model.encoder, batch);  // [B,S,H]
    const int b = hidden.dim(0), s = hidden.dim(1), h = hidden.dim(2);
    Tensor flat = reshape(g, hidden, {b * s, h});
    if (model.kind == TaskKind::token_classification)
        return add(g, matmul(g, flat, model.head_w), model.head_b);
    std::vector<int> cls_rows(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i) cls_rows[static_cast<size_t>(i)] = i * s;
    Tensor cls = gather_rows(g, flat, cls_rows);  // [B,H]
    return add(g, matmul(g, cls, model.head_w), model.head_b);
}

FinetuneResult finetune(TaskModel& model, const LabeledDataset& train,
                        const Vocab& vocab, const TaskSpec& spec,
                        uint64_t seed) {
    spec.validate();
    train.validate();
    if (train.kind != spec.kind)
        throw ContractError("finetune: dataset task kind does not match spec");
    if (train.num_labels() > spec.num_labels)
        throw ContractError("finetune: dataset has " +
                            std::to_string(train.num_labels()) +
                            " labels but the head only " +
                            std::to_string(spec.num_labels));

    FinetuneResult result;
    if (spec.epochs == 0) return result;

    model.set_requires_grad(true);
    std::vector<Tensor> params = model.parameters();
    AdamState state;
    state.init(params);

    const size_t n = train.examples.size();
    int64_t step = 0;
    const double t0 = now_ms();
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        std::vector<size_t> order =
            shuffled_indices(n, hash_seed(seed, kOrderStream +
                                                    static_cast<uint64_t>(epoch)));
        double epoch_loss = 0;
        int64_t epoch_steps = 0;
        for (size_t at = 0; at < n; at += static_cast<size_t>(spec.batch_size)) {
            const size_t take =
                std::min(static_cast<size_t>(spec.batch_size), n - at);
            // materialize the shuffled slice as a view dataset
            LabeledDataset slice;
            slice.kind = train.kind;
            slice.label_names = train.label_names;
            for (size_t i = 0; i < take; ++i)
                slice.examples.push_back(train.examples[order[at + i]]);
            Batch batch = make_task_batch(slice, 0, take, vocab,
                                          model.encoder.config.max_seq_len,
                                          model.kind);
            Graph g;
            Tensor logits = task_logits(g, model, batch);
            LossResult loss = mlm_loss(g, logits, batch.mlm_labels);
            const double value = loss.value.value();
            if (!std::isfinite(value))
                throw TrainingError("non-finite task loss at step " +
                                    std::to_string(step));
            if (loss.has_targets) {
                backward(g, loss.value);
                adam_step(params, state, spec.learning_rate);
                for (Tensor& p : params) p.zero_grad();
            }
            epoch_loss += value;
            ++epoch_steps;
            ++step;
        }
        result.epoch_mean_loss.push_back(
            epoch_steps ? epoch_loss / static_cast<double>(epoch_steps) : 0.0);
    }
    result.wall_ms = now_ms() - t0;
    return result;
}

EvalResult evaluate(const TaskModel& model, const LabeledDataset& test,
                    const Vocab& vocab, const TaskSpec& spec) {
    spec.validate();
    test.validate();
    Predictions p = predict(model, test, vocab, spec);

    EvalResult out;
    out.wall_ms = p.wall_ms;
    switch (spec.f1) {
        case F1Kind::micro:
            out.f1 = f1_token(p.pred, p.gold);
            break;
        case F1Kind::weighted:
            out.f1 = f1_multiclass(p.pred, p.gold, spec.num_labels);
            break;
        case F1Kind::span: {
            if (test.kind != TaskKind::token_classification)
                throw ContractError(
                    "evaluate: span F1 requires a token task");
            // reassemble per-sentence tag strings, then count span matches
            // across the whole dataset
            int64_t tp = 0, pred_count = 0, gold_count = 0;
            size_t cursor = 0;
            for (int count : p.per_example) {
                std::vector<std::string> pred_tags, gold_tags;
                for (int i = 0; i < count; ++i) {
                    pred_tags.push_back(
                        test.label_names[static_cast<size_t>(
                            p.pred[cursor + static_cast<size_t>(i)])]);
                    gold_tags.push_back(
                        test.label_names[static_cast<size_t>(
                            p.gold[cursor + static_cast<size_t>(i)])]);
                }
                cursor += static_cast<size_t>(count);
                auto ps = extract_spans(pred_tags);
                auto gs = extract_spans(gold_tags);
                std::set<Span> gold_set(gs.begin(), gs.end());
                for (const Span& span : ps)
                    if (gold_set.count(span)) ++tp;
                pred_count += static_cast<int64_t>(ps.size());
                gold_count += static_cast<int64_t>(gs.size());
            }
            out.f1 = span_f1_from_counts(tp, pred_count, gold_count);
            break;
        }
    }
    return out;
}

std::vector<std::pair<LabeledDataset, LabeledDataset>> kfold_split(
    const LabeledDataset& data, int k, uint64_t seed) {
    const size_t n = data.examples.size();
    if (k < 2)
        throw ContractError("kfold: k must be >= 2, got " + std::to_string(k));
    if (n < static_cast<size_t>(k))
        throw ContractError("kfold: dataset of " + std::to_string(n) +
                            " examples cannot be split into " +
                            std::to_string(k) + " folds");

    std::vector<size_t> order = shuffled_indices(n, seed);
    const size_t base = n / static_cast<size_t>(k);
    const size_t extra = n % static_cast<size_t>(k);

    std::vector<std::pair<LabeledDataset, LabeledDataset>> out;
    size_t start = 0;
    for (int fold = 0; fold < k; ++fold) {
        const size_t size = base + (static_cast<size_t>(fold) < extra ? 1 : 0);
        LabeledDataset train, test;
        train.kind = test.kind = data.kind;
        train.label_names = test.label_names = data.label_names;
        for (size_t i = 0; i < n; ++i) {
            const LabeledExample& e = data.examples[order[i]];
            if (i >= start && i < start + size)
                test.examples.push_back(e);
            else
                train.examples.push_back(e);
        }
        out.emplace_back(std::move(train), std::move(test));
        start += size;
    }
    return out;
}

double f1_token(const std::vector<int>& pred, const std::vector<int>& gold) {
    if (pred.size() != gold.size())
        throw ContractError("f1_token: " + std::to_string(pred.size()) +
                            " predictions vs " + std::to_string(gold.size()) +
                            " gold labels");
    if (gold.empty()) return 1.0;
    int64_t correct = 0;
    for (size_t i = 0; i < gold.size(); ++i)
        if (pred[i] == gold[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(gold.size());
}

std::vector<Span> extract_spans(const std::vector<std::string>& tags) {
    std::vector<Span> spans;
    std::string cur_type;
    int cur_start = -1;
    auto flush = [&](int end) {
        if (cur_start >= 0) spans.emplace_back(cur_type, cur_start, end);
        cur_start = -1;
        cur_type.clear();
    };
    for (size_t i = 0; i < tags.size(); ++i) {
        const std::string& t = tags[i];
        if (t == "O") {
            flush(static_cast<int>(i));
            continue;
        }
        if (t.size() < 3 || (t[0] != 'B' && t[0] != 'I') || t[1] != '-')
            throw DataError("span tags: unknown tag \"" + t + "\"");
        const std::string type = t.substr(2);
        // orphan I- (type break or no open span) acts as B-
        if (t[0] == 'B' || cur_start < 0 || cur_type != type) {
            flush(static_cast<int>(i));
            cur_type = type;
            cur_start = static_cast<int>(i);
        }
    }
    flush(static_cast<int>(tags.size()));
    return spans;
}

double f1_span(const std::vector<std::string>& pred,
               const std::vector<std::string>& gold) {
    if (pred.size() != gold.size())
        throw ContractError("f1_span: sequence lengths differ");
    auto ps = extract_spans(pred);
    auto gs = extract_spans(gold);
    std::set<Span> gold_set(gs.begin(), gs.end());
    int64_t tp = 0;
    for (const Span& s : ps)
        if (gold_set.count(s)) ++tp;
    return span_f1_from_counts(tp, static_cast<int64_t>(ps.size()),
                               static_cast<int64_t>(gs.size()));
}

double f1_multiclass(const std::vector<int>& pred,
                     const std::vector<int>& gold, int num_labels) {
    if (pred.size() != gold.size())
        throw ContractError("f1_multiclass: " + std::to_string(pred.size()) +
                            " predictions vs " + std::to_string(gold.size()) +
                            " gold labels");
    for (size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] < 0 || gold[i] >= num_labels)
            throw DataError("f1_multiclass: gold label " +
                            std::to_string(gold[i]) + " out of range");
        if (pred[i] < 0 || pred[i] >= num_labels)
            throw DataError("f1_multiclass: predicted label " +
                            std::to_string(pred[i]) + " out of range");
    }
    if (gold.empty()) return 1.0;
    const double total = static_cast<double>(gold.size());
    double out = 0.0;
    for (int c = 0; c < num_labels; ++c) {
        int64_t tp = 0, predicted = 0, support = 0;
        for (size_t i = 0; i < gold.size(); ++i) {
            if (pred[i] == c && gold[i] == c) ++tp;
            if (pred[i] == c) ++predicted;
            if (gold[i] == c) ++support;
        }
        if (support == 0) continue;
        double f1 = 0.0;
        if (predicted != 0 && tp != 0) {
            const double p =
                static_cast<double>(tp) / static_cast<double>(predicted);
            const double r =
                static_cast<double>(tp) / static_cast<double>(support);
            f1 = 2.0 * p * r / (p + r);
        }
        out += static_cast<double>(support) * f1;
    }
    // Single division so identical inputs score exactly 1.0 (supports sum
    // to the sequence length).
    return out / total;
}

double BenchmarkResult::finetune_ratio() const {
    return teacher.finetune_wall_ms > 0
               ? student.finetune_wall_ms / teacher.finetune_wall_ms
               : 0.0;
}

double BenchmarkResult::eval_ratio() const {
    return teacher.eval_wall_ms > 0
               ? student.eval_wall_ms / teacher.eval_wall_ms
               : 0.0;
}

namespace {

// One full fine-tune + evaluate pass for one model; handles the k-fold
// protocol when spec.folds >= 2 (folding the concatenated data).
EvalReport run_protocol(const EncoderModel& base, const std::string& name,
                        const LabeledDataset& train,
                        const LabeledDataset& test, const Vocab& vocab,
                        const TaskSpec& spec, uint64_t seed,
                        double* finetune_wall, double* eval_wall) {
    EvalReport report;
    report.model_name = name;
    *finetune_wall = 0;
    *eval_wall = 0;

    if (spec.folds >= 2) {
        LabeledDataset all;
        all.kind = train.kind;
        all.label_names = train.label_names;
        all.examples = train.examples;
        all.examples.insert(all.examples.end(), test.examples.begin(),
                            test.examples.end());
        auto folds = kfold_split(all, spec.folds, seed);
        double f1_sum = 0;
        for (auto& [fold_train, fold_test] : folds) {
            TaskModel task = attach_head(base, spec, seed);
            FinetuneResult ft = finetune(task, fold_train, vocab, spec, seed);
            EvalResult ev = evaluate(task, fold_test, vocab, spec);
            *finetune_wall += ft.wall_ms;
            *eval_wall += ev.wall_ms;
            report.per_fold.push_back(ev.f1);
            f1_sum += ev.f1;
        }
        report.f1 = f1_sum / static_cast<double>(folds.size());
    } else {
        TaskModel task = attach_head(base, spec, seed);
        FinetuneResult ft = finetune(task, train, vocab, spec, seed);
        EvalResult ev = evaluate(task, test, vocab, spec);
        *finetune_wall = ft.wall_ms;
        *eval_wall = ev.wall_ms;
        report.f1 = ev.f1;
    }
    report.finetune_wall_ms = *finetune_wall;
    report.eval_wall_ms = *eval_wall;
    return report;
}

double mean_of(const std::vector<double>& xs) {
    double sum = 0;
    for (double x : xs) sum += x;
    return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

}  // namespace

BenchmarkResult benchmark_pair(const EncoderModel& teacher,
                               const EncoderModel& student,
                               const LabeledDataset& train,
                               const LabeledDataset& test, const Vocab& vocab,
                               const TaskSpec& spec, uint64_t seed,
                               int runs) {
    if (runs < 1)
        throw ContractError("benchmark: runs must be >= 1");
    if (teacher.config.vocab_size != student.config.vocab_size)
        throw ContractError("benchmark: teacher and student vocab sizes differ");

    BenchmarkResult out;
    out.runs = runs;
    // Serialize: all teacher runs, then all student runs, identical seeds.
    for (int r = 0; r < runs; ++r) {
        double ft = 0, ev = 0;
        out.teacher = run_protocol(teacher, "teacher", train, test, vocab,
                                   spec, seed, &ft, &ev);
        out.teacher_finetune_walls.push_back(ft);
        out.teacher_eval_walls.push_back(ev);
    }
    for (int r = 0; r < runs; ++r) {
        double ft = 0, ev = 0;
        out.student = run_protocol(student, "student", train, test, vocab,
                                   spec, seed, &ft, &ev);
        out.student_finetune_walls.push_back(ft);
        out.student_eval_walls.push_back(ev);
    }
    out.teacher.finetune_wall_ms = mean_of(out.teacher_finetune_walls);
    out.teacher.eval_wall_ms = mean_of(out.teacher_eval_walls);
    out.student.finetune_wall_ms = mean_of(out.student_finetune_walls);
    out.student.eval_wall_ms = mean_of(out.student_eval_walls);
    return out;
}

namespace {

// Shared TSV-ish reader: returns (left, right) fields per line, reporting
// 1-based line numbers on malformed rows.
std::vector<std::pair<std::string, std::string>> read_two_column(
    const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in)
        throw IoError(std::string(what) + ": cannot open " + path);
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            rows.emplace_back("", "");  // sentence separator marker
            continue;
        }
        const size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
            line.find('\t', tab + 1) != std::string::npos)
            throw DataError(std::string(what) + ": line " +
                            std::to_string(line_no) +
                            " is not \"value<TAB>label\": \"" + line + "\"");
        rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return rows;
}

int label_id(LabeledDataset& data,
             std::unordered_map<std::string, int>& index,
             const std::string& name) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(data.label_names.size());
    data.label_names.push_back(name);
    index.emplace(name, id);
    return id;
}

}  // namespace

LabeledDataset load_conll(const std::string& path) {
    LabeledDataset data;
    data.kind = TaskKind::token_classification;
    std::unordered_map<std::string, int> index;
    LabeledExample cur;
    for (const auto& [token, label] : read_two_column(path, "conll")) {
        if (token.empty() && label.empty()) {
            if (!cur.tokens.empty()) {
                data.examples.push_back(std::move(cur));
                cur = {};
            }
            continue;
        }
        cur.tokens.push_back(token);
        cur.token_labels.push_back(label_id(data, index, label));
    }
    if (!cur.tokens.empty()) data.examples.push_back(std::move(cur));
    if (data.examples.empty())
        throw DataError("conll: no examples in " + path);
    data.validate();
    return data;
}

LabeledDataset load_classification_tsv(const std::string& path) {
    LabeledDataset data;
    data.kind = TaskKind::sequence_classification;
    std::unordered_map<std::string, int> index;
    for (const auto& [text, label] : read_two_column(path, "tsv")) {
        if (text.empty() && label.empty()) continue;  // ignore blank lines
        LabeledExample e;
        e.tokens = split_words(text);
        if (e.tokens.empty())
            throw DataError("tsv: empty text in " + path);
        e.label = label_id(data, index, label);
        data.examples.push_back(std::move(e));
    }
    if (data.examples.empty())
        throw DataError("tsv: no examples in " + path);
    data.validate();
    return data;
}

std::pair<LabeledDataset, LabeledDataset> apply_split_file(
    const LabeledDataset& data, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("split: cannot open " + path);
    std::vector<bool> is_train;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line == "train")
            is_train.push_back(true);
        else if (line == "test")
            is_train.push_back(false);
        else
            throw DataError("split: line " + std::to_string(line_no) +
                            " must be \"train\" or \"test\", got \"" + line +
                            "\"");
    }
    if (is_train.size() != data.examples.size())
        throw DataError("split: " + std::to_string(is_train.size()) +
                        " assignments for " +
                        std::to_string(data.examples.size()) + " examples");
    LabeledDataset train, test;
    train.kind = test.kind = data.kind;
    train.label_names = test.label_names = data.label_names;
    for (size_t i = 0; i < data.examples.size(); ++i)
        (is_train[i] ? train : test).examples.push_back(data.examples[i]);
    return {std::move(train), std::move(test)};
}

std::string format_duration(double ms) {
    const double s = ms / 1000.0;
    if (s < 10.0) return fmt("%.2f''", s);
    if (s < 60.0) return fmt("%.0f''", s);
    long long m = static_cast<long long>(s / 60.0);
    long long sec = std::llround(s - static_cast<double>(m) * 60.0);
    if (sec == 60) {
        ++m;
        sec = 0;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%lld'%02lld''", m, sec);
    return buf;
}

std::string render_benchmark_table(const BenchmarkResult& r) {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-10s %-10s %-18s %-16s\n", "model",
                  "F1 score", "Fine-tuning time", "Evaluation time");
    out += buf;
    for (const EvalReport* rep : {&r.teacher, &r.student}) {
        std::snprintf(buf, sizeof(buf), "%-10s %-10.4f %-18s %-16s\n",
                      rep->model_name.c_str(), rep->f1,
                      format_duration(rep->finetune_wall_ms).c_str(),
                      format_duration(rep->eval_wall_ms).c_str());
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-10s %-10s %-18.2f %-16.2f\n", "ratio",
                  "-", r.finetune_ratio(), r.eval_ratio());
    out += buf;
    return out;
}

void write_report_kv(const BenchmarkResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("report: cannot write " + path);
    char buf[128];
    for (const EvalReport* rep : {&r.teacher, &r.student}) {
        out << rep->model_name << ".f1=";
        std::snprintf(buf, sizeof(buf), "%.17g\n", rep->f1);
        out << buf;
        for (size_t i = 0; i < rep->per_fold.size(); ++i) {
            std::snprintf(buf, sizeof(buf), ".f1.fold%zu=%.17g\n", i,
                          rep->per_fold[i]);
            out << rep->model_name << buf;
        }
    }
    out << "runs=" << r.runs << "\n";
}

void write_report_timing_kv(const BenchmarkResult& r,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("report: cannot write " + path);
    char buf[128];
    auto emit = [&](const std::string& key, double v) {
        std::snprintf(buf, sizeof(buf), "%.3f\n", v);
        out << key << "=" << buf;
    };
    for (const EvalReport* rep : {&r.teacher, &r.student}) {
        emit(rep->model_name + ".finetune_wall_ms", rep->finetune_wall_ms);
        emit(rep->model_name + ".eval_wall_ms", rep->eval_wall_ms);
    }
    for (size_t i = 0; i < r.teacher_finetune_walls.size(); ++i) {
        emit("teacher.finetune_wall_ms.run" + std::to_string(i),
             r.teacher_finetune_walls[i]);
        emit("teacher.eval_wall_ms.run" + std::to_string(i),
             r.teacher_eval_walls[i]);
        emit("student.finetune_wall_ms.run" + std::to_string(i),
             r.student_finetune_walls[i]);
        emit("student.eval_wall_ms.run" + std::to_string(i),
             r.student_eval_walls[i]);
    }
    emit("ratio.finetune", r.finetune_ratio());
    emit("ratio.eval", r.eval_ratio());
}

}  // namespace distil
