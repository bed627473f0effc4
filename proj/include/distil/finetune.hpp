#pragma once
// Task heads, fine-tuning, k-fold evaluation, F1 scoring, and paired
// teacher/student benchmarking.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "distil/corpus.hpp"
#include "distil/distill.hpp"
#include "distil/encoder.hpp"

namespace distil {

enum class TaskKind { token_classification, sequence_classification };

// How evaluate() turns predictions into a single F1 number.
enum class F1Kind {
    micro,     // token accuracy (POS-style)
    span,      // entity-level over BIO tags (NER-style)
    weighted,  // per-class F1 weighted by gold support (multi-class)
};

struct TaskSpec {
    TaskKind kind = TaskKind::token_classification;
    int num_labels = 2;
    int epochs = 4;
    int batch_size = 32;
    double learning_rate = 5e-5;
    int folds = 0;  // 0 = plain train/test; >= 2 enables k-fold
    F1Kind f1 = F1Kind::micro;

    void validate() const;
    bool operator==(const TaskSpec&) const = default;
};

struct LabeledExample {
    std::vector<std::string> tokens;  // words of the sentence
    std::vector<int> token_labels;    // token task: aligned with tokens
    int label = -1;                    // sequence task: class id
};

struct LabeledDataset {
    TaskKind kind = TaskKind::token_classification;
    std::vector<LabeledExample> examples;
    std::vector<std::string> label_names;  // id -> name, first appearance

    int num_labels() const { return static_cast<int>(label_names.size()); }
    // Checks label ranges and token/label alignment.
    void validate() const;
};

// Encoder plus a linear classification head.
struct TaskModel {
    EncoderModel encoder;
    Tensor head_w;  // [hidden, num_labels]
    Tensor head_b;  // [num_labels]
    TaskKind kind = TaskKind::token_classification;
    int num_labels = 0;

    std::vector<Tensor> parameters() const;
    void set_requires_grad(bool rg);
    TaskModel clone() const;
};

// Head weights drawn from N(0, 0.02) with the given seed; biases zero.
TaskModel attach_head(const EncoderModel& model, const TaskSpec& spec,
                      uint64_t seed);

// Encodes examples [begin, end) into a batch plus flattened labels.
// Token task: labels align with word positions ([CLS]/[SEP]/pad ignored).
// Sequence task: one label per example, attached to the [CLS] position row.
Batch make_task_batch(const LabeledDataset& data, size_t begin, size_t end,
                      const Vocab& vocab, int seq_len, TaskKind kind);

// Logits for a batch: token task [B*S, num_labels]; sequence task
// [B, num_labels] from the [CLS] position's final hidden state.
Tensor task_logits(Graph& g, const TaskModel& model, const Batch& batch);

struct FinetuneResult {
    double wall_ms = 0;  // first batch to last optimizer update
    std::vector<double> epoch_mean_loss;
};

// Adam fine-tuning of all parameters (encoder + head).
FinetuneResult finetune(TaskModel& model, const LabeledDataset& train,
                        const Vocab& vocab, const TaskSpec& spec,
                        uint64_t seed);

struct EvalResult {
    double f1 = 0;
    double wall_ms = 0;  // model compute + batching, not file parsing
};

EvalResult evaluate(const TaskModel& model, const LabeledDataset& test,
                    const Vocab& vocab, const TaskSpec& spec);

// Seeded shuffle, then k contiguous folds with sizes differing by <= 1
// (the first size%k folds take the extra example). Pair i = (train, test)
// where test is fold i.
std::vector<std::pair<LabeledDataset, LabeledDataset>> kfold_split(
    const LabeledDataset& data, int k, uint64_t seed);

// Micro-averaged token F1 (= accuracy: every position predicted once).
double f1_token(const std::vector<int>& pred, const std::vector<int>& gold);

// Entity-level F1 over BIO tags: exact (type, start, end) matches.
// Orphan I- tags are repaired as B-. Returns 0 when both span sets are
// empty. Unknown tag strings raise DataError.
double f1_span(const std::vector<std::string>& pred,
               const std::vector<std::string>& gold);

// (type, start, end) spans of a BIO sequence, end exclusive.
std::vector<std::tuple<std::string, int, int>> extract_spans(
    const std::vector<std::string>& tags);

// Weighted-average F1: per-class F1 weighted by gold support.
double f1_multiclass(const std::vector<int>& pred,
                     const std::vector<int>& gold, int num_labels);

struct EvalReport {
    std::string model_name;
    double f1 = 0;
    double finetune_wall_ms = 0;  // mean over runs
    double eval_wall_ms = 0;      // mean over runs
    std::vector<double> per_fold;  // per-fold F1 when folds were used
};

struct BenchmarkResult {
    EvalReport teacher;
    EvalReport student;
    // raw per-run wall times (same length = runs)
    std::vector<double> teacher_finetune_walls, teacher_eval_walls;
    std::vector<double> student_finetune_walls, student_eval_walls;
    int runs = 0;

    double finetune_ratio() const;  // student mean / teacher mean
    double eval_ratio() const;
};

// Fine-tunes and evaluates both models under identical seeds and data
// order, `runs` times each (same seed every run, so F1 is identical and
// only wall times vary). Runs are serialized for comparable timing.
BenchmarkResult benchmark_pair(const EncoderModel& teacher,
                               const EncoderModel& student,
                               const LabeledDataset& train,
                               const LabeledDataset& test, const Vocab& vocab,
                               const TaskSpec& spec, uint64_t seed,
                               int runs = 3);

// One "token<TAB>label" per line; blank line ends a sentence. Label ids
// follow first appearance. Ragged lines raise DataError naming the line.
LabeledDataset load_conll(const std::string& path);

// One "text<TAB>label" per line.
LabeledDataset load_classification_tsv(const std::string& path);

// Split file: one "train" or "test" per line, aligned with example order.
std::pair<LabeledDataset, LabeledDataset> apply_split_file(
    const LabeledDataset& data, const std::string& path);

// Paper-style duration: 9'10'' / 43'' / 3.42'' for sub-10-second walls.
std::string format_duration(double ms);

// Aligned comparison table (includes wall times -> belongs in timing
// artifacts, not deterministic outputs).
std::string render_benchmark_table(const BenchmarkResult& r);

// Deterministic part: model names, F1, per-fold scores.
void write_report_kv(const BenchmarkResult& r, const std::string& path);
// Timing part: per-run walls, means, ratios.
void write_report_timing_kv(const BenchmarkResult& r, const std::string& path);

}  // namespace distil
