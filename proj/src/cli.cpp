#include "distil/cli.hpp"

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "distil/config.hpp"
#include "distil/corpus.hpp"
#include "distil/distill.hpp"
#include "distil/encoder.hpp"
#include "distil/error.hpp"
#include "distil/finetune.hpp"
#include "distil/verify.hpp"

namespace distil::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kFailure = 1;   // verification / training failure
constexpr int kUsage = 2;     // bad arguments, bad config, missing files

void require_file(const std::string& path, const char* what) {
    if (path.empty())
        throw ContractError(std::string(what) +
                            ": required path is not configured");
    if (!fs::exists(path))
        throw IoError(std::string(what) + ": no such file: " + path);
}

RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return desk_config();
    require_file(path, "config");
    return load_run_config(path);
}

LabeledDataset load_task_dataset(const RunConfig& cfg) {
    if (cfg.dataset.empty())
        throw ContractError("config: paths.dataset is required here");
    require_file(cfg.dataset, "dataset");
    return cfg.task.kind == TaskKind::token_classification
               ? load_conll(cfg.dataset)
               : load_classification_tsv(cfg.dataset);
}

// The shipped profiles default num_labels to 2; real datasets know better.
TaskSpec task_for(const RunConfig& cfg, const LabeledDataset& data) {
    TaskSpec spec = cfg.task;
    if (spec.num_labels < data.num_labels())
        spec.num_labels = data.num_labels();
    return spec;
}

int cmd_preprocess(const std::string& in, const std::string& out,
                   int word_limit) {
    require_file(in, "preprocess");
    const CorpusStats stats = preprocess_corpus(in, out, word_limit);
    save_stats(stats, out + ".stats");
    std::cout << "preprocess: " << stats.sentence_count << " sentences, "
              << stats.word_count << " words, " << stats.over_limit_count
              << " over the " << word_limit << "-word limit\n";
    return kOk;
}

int cmd_build_vocab(const std::string& in, const std::string& out, int size) {
    require_file(in, "build-vocab");
    const Vocab vocab = build_vocab_file(in, size);
    save_vocab(vocab, out);
    std::cout << "build-vocab: " << vocab.size() << " tokens -> " << out
              << "\n";
    return kOk;
}

int cmd_pretrain(RunConfig cfg, bool init_teacher) {
    cfg.validate();
    require_file(cfg.corpus, "corpus");
    require_file(cfg.vocab, "vocab");
    const std::vector<std::string> sentences = read_corpus_lines(cfg.corpus);
    const Vocab vocab = load_vocab(cfg.vocab);
    if (vocab.size() != cfg.teacher.vocab_size)
        throw ContractError("config: model.vocab_size " +
                            std::to_string(cfg.teacher.vocab_size) +
                            " does not match the vocabulary file (" +
                            std::to_string(vocab.size()) + " tokens)");

    fs::create_directories(cfg.checkpoint_dir);
    const std::string teacher_path = cfg.checkpoint_dir + "/teacher.ckpt";
    EncoderModel teacher = [&] {
        if (init_teacher) {
            EncoderModel t =
                EncoderModel::random_init(cfg.teacher, cfg.global_seed);
            save_checkpoint(t, teacher_path);
            return t;
        }
        require_file(teacher_path, "pretrain");
        return load_checkpoint(teacher_path);
    }();
    if (!(teacher.config == cfg.teacher))
        throw CheckpointError("teacher checkpoint does not match the "
                              "configured architecture");

    EncoderModel student = init_student_from_teacher(teacher);
    PretrainConfig pt = cfg.pretrain;
    pt.global_seed = cfg.global_seed;
    const PretrainResult result =
        pretrain(student, teacher, sentences, vocab, pt, cfg.checkpoint_dir);
    save_run_config(cfg, cfg.checkpoint_dir + "/run_config.cfg");

    std::cout << "pretrain: " << result.log.size() << " steps, "
              << result.checkpoint_paths.size() << " checkpoints under "
              << cfg.checkpoint_dir << "\n";
    if (!result.log.empty())
        std::cout << "pretrain: final loss "
                  << result.log.back().loss.total << "\n";
    return kOk;
}

int cmd_finetune(RunConfig cfg) {
    cfg.validate();
    require_file(cfg.vocab, "vocab");
    const Vocab vocab = load_vocab(cfg.vocab);
    const std::string student_path =
        cfg.checkpoint_dir + "/student_final.ckpt";
    require_file(student_path, "finetune");
    EncoderModel student = load_checkpoint(student_path);

    LabeledDataset data = load_task_dataset(cfg);
    const TaskSpec spec = task_for(cfg, data);
    LabeledDataset train = data, test = data;
    if (!cfg.split.empty()) {
        require_file(cfg.split, "split");
        std::tie(train, test) = apply_split_file(data, cfg.split);
    }

    TaskModel model = attach_head(student, spec, cfg.global_seed);
    const FinetuneResult ft = finetune(model, train, vocab, spec,
                                       cfg.global_seed);
    const EvalResult ev = evaluate(model, test, vocab, spec);

    fs::create_directories(cfg.report_dir);
    {
        std::ofstream kv(cfg.report_dir + "/finetune.kv");
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", ev.f1);
        kv << "f1=" << buf << "\n"
           << "train_examples=" << train.examples.size() << "\n"
           << "test_examples=" << test.examples.size() << "\n"
           << "labels=" << data.num_labels() << "\n";
    }
    {
        std::ofstream timing(cfg.report_dir + "/finetune.timing.kv");
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3f", ft.wall_ms);
        timing << "finetune_wall_ms=" << buf << "\n";
        std::snprintf(buf, sizeof(buf), "%.3f", ev.wall_ms);
        timing << "eval_wall_ms=" << buf << "\n";
    }
    std::cout << "finetune: F1 " << ev.f1 << " ("
              << format_duration(ft.wall_ms) << " fine-tuning, "
              << format_duration(ev.wall_ms) << " evaluation)\n";
    return kOk;
}

int cmd_benchmark(RunConfig cfg, int runs) {
    cfg.validate();
    require_file(cfg.vocab, "vocab");
    const Vocab vocab = load_vocab(cfg.vocab);
    const std::string teacher_path = cfg.checkpoint_dir + "/teacher.ckpt";
    const std::string student_path =
        cfg.checkpoint_dir + "/student_final.ckpt";
    require_file(teacher_path, "benchmark");
    require_file(student_path, "benchmark");
    const EncoderModel teacher = load_checkpoint(teacher_path);
    const EncoderModel student = load_checkpoint(student_path);

    LabeledDataset data = load_task_dataset(cfg);
    const TaskSpec spec = task_for(cfg, data);
    LabeledDataset train = data, test = data;
    if (!cfg.split.empty()) {
        require_file(cfg.split, "split");
        std::tie(train, test) = apply_split_file(data, cfg.split);
    } else if (spec.folds >= 2) {
        test.examples.clear();  // k-fold protocol consumes train + test
    }

    const BenchmarkResult result = benchmark_pair(
        teacher, student, train, test, vocab, spec, cfg.global_seed, runs);

    fs::create_directories(cfg.report_dir);
    write_report_kv(result, cfg.report_dir + "/benchmark.kv");
    write_report_timing_kv(result, cfg.report_dir + "/benchmark.timing.kv");
    const std::string table = render_benchmark_table(result);
    {
        std::ofstream table_file(cfg.report_dir + "/benchmark.timing.txt");
        table_file << table;
    }
    save_run_config(cfg, cfg.report_dir + "/benchmark_config.cfg");
    std::cout << table;
    return kOk;
}

int cmd_verify() {
    const VerifyReport report = run_verification(std::cout);
    return report.ok() ? kOk : kFailure;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Knowledge-distillation toolkit: corpus preprocessing, "
                 "distillation pretraining, fine-tuning and benchmarking"};
    app.require_subcommand(1);

    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
    int epochs = 0;
    bool epochs_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration file");
        sub->add_option("--seed", seed, "override the configured seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--epochs", epochs, "override the configured epochs")
            ->each([&](const std::string&) { epochs_set = true; });
    };

    // preprocess
    auto* preprocess = app.add_subcommand(
        "preprocess", "split over-long sentences and write corpus stats");
    std::string pre_in, pre_out;
    int word_limit = 400;
    preprocess->add_option("input", pre_in, "raw corpus, one sentence per line")
        ->required();
    preprocess->add_option("output", pre_out, "split corpus destination")
        ->required();
    preprocess->add_option("--word-limit", word_limit,
                           "maximum words per emitted sentence");

    // build-vocab
    auto* build_vocab_cmd = app.add_subcommand(
        "build-vocab", "frequency-ranked vocabulary from a corpus");
    std::string bv_in, bv_out;
    int vocab_size = 32000;
    build_vocab_cmd->add_option("input", bv_in, "corpus file")->required();
    build_vocab_cmd->add_option("output", bv_out, "vocabulary destination")
        ->required();
    build_vocab_cmd->add_option("--size", vocab_size,
                                "vocabulary size including reserved tokens");

    // pretrain
    auto* pretrain_cmd = app.add_subcommand(
        "pretrain", "distill the student against the teacher");
    bool init_teacher = false;
    add_common(pretrain_cmd);
    pretrain_cmd->add_flag("--init-teacher", init_teacher,
                           "randomly initialize and save a fresh teacher");

    // finetune
    auto* finetune_cmd = app.add_subcommand(
        "finetune", "train a task head on the distilled student");
    add_common(finetune_cmd);

    // benchmark
    auto* benchmark_cmd = app.add_subcommand(
        "benchmark", "compare teacher and student on the configured task");
    int runs = 3;
    add_common(benchmark_cmd);
    benchmark_cmd->add_option("--runs", runs, "repetitions to average over");

    // verify
    auto* verify_cmd = app.add_subcommand(
        "verify", "run the built-in gradient, oracle and fuzz suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*preprocess) return cmd_preprocess(pre_in, pre_out, word_limit);
        if (*build_vocab_cmd) return cmd_build_vocab(bv_in, bv_out, vocab_size);

        RunConfig cfg = load_config_or_default(config_path);
        if (seed_set) cfg.global_seed = seed;
        if (epochs_set) {
            cfg.pretrain.epochs = epochs;
            cfg.task.epochs = epochs;
        }
        if (*pretrain_cmd) return cmd_pretrain(std::move(cfg), init_teacher);
        if (*finetune_cmd) return cmd_finetune(std::move(cfg));
        if (*benchmark_cmd) return cmd_benchmark(std::move(cfg), runs);
        if (*verify_cmd) return cmd_verify();
    } catch (const TrainingError& e) {
        std::cerr << e.what() << "\n";
        return kFailure;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}

}  // namespace distil::cli
