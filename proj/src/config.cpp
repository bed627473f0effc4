#include "distil/config.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "distil/error.hpp"

namespace distil {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Shortest representation that parses back to the same double.
std::string num(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

std::string num(int v) { return std::to_string(v); }
std::string num(int64_t v) { return std::to_string(v); }
std::string num(uint64_t v) { return std::to_string(v); }

const char* task_kind_name(TaskKind k) {
    return k == TaskKind::token_classification ? "token" : "sequence";
}

const char* f1_kind_name(F1Kind k) {
    switch (k) {
        case F1Kind::micro: return "micro";
        case F1Kind::span: return "span";
        default: return "weighted";
    }
}

struct Parser {
    explicit Parser(RunConfig& c) : cfg(c) {}
    RunConfig& cfg;

    [[noreturn]] void fail(int line, const std::string& msg) {
        throw DataError("config: line " + std::to_string(line) + ": " + msg);
    }

    double to_double(int line, const std::string& v) {
        try {
            size_t used = 0;
            double d = std::stod(v, &used);
            if (used != v.size()) fail(line, "bad number \"" + v + "\"");
            return d;
        } catch (const std::logic_error&) {
            fail(line, "bad number \"" + v + "\"");
        }
    }

    int64_t to_int(int line, const std::string& v) {
        int64_t out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size())
            fail(line, "bad integer \"" + v + "\"");
        return out;
    }

    uint64_t to_uint(int line, const std::string& v) {
        uint64_t out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size())
            fail(line, "bad unsigned integer \"" + v + "\"");
        return out;
    }

    bool to_bool(int line, const std::string& v) {
        if (v == "true") return true;
        if (v == "false") return false;
        fail(line, "bad boolean \"" + v + "\" (use true/false)");
    }

    void apply(int line, const std::string& section, const std::string& key,
               const std::string& value) {
        if (section.empty()) {
            if (key == "seed") cfg.global_seed = to_uint(line, value);
            else fail(line, "unknown key \"" + key + "\"");
        } else if (section == "paths") {
            if (key == "corpus") cfg.corpus = value;
            else if (key == "vocab") cfg.vocab = value;
            else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
            else if (key == "dataset") cfg.dataset = value;
            else if (key == "split") cfg.split = value;
            else if (key == "report_dir") cfg.report_dir = value;
            else fail(line, "unknown key \"paths." + key + "\"");
        } else if (section == "model") {
            if (key == "vocab_size")
                cfg.teacher.vocab_size = static_cast<int>(to_int(line, value));
            else if (key == "hidden_size")
                cfg.teacher.hidden_size = static_cast<int>(to_int(line, value));
            else if (key == "num_layers")
                cfg.teacher.num_layers = static_cast<int>(to_int(line, value));
            else if (key == "num_heads")
                cfg.teacher.num_heads = static_cast<int>(to_int(line, value));
            else if (key == "intermediate_size")
                cfg.teacher.intermediate_size =
                    static_cast<int>(to_int(line, value));
            else if (key == "max_seq_len")
                cfg.teacher.max_seq_len = static_cast<int>(to_int(line, value));
            else if (key == "layer_norm_eps")
                cfg.teacher.layer_norm_eps = to_double(line, value);
            else if (key == "student_layers")
                cfg.student_layers = static_cast<int>(to_int(line, value));
            else if (key == "allow_any_depth")
                cfg.allow_any_depth = to_bool(line, value);
            else fail(line, "unknown key \"model." + key + "\"");
        } else if (section == "pretrain") {
            PretrainConfig& p = cfg.pretrain;
            if (key == "batch_size")
                p.batch_size = static_cast<int>(to_int(line, value));
            else if (key == "learning_rate")
                p.learning_rate = to_double(line, value);
            else if (key == "epochs")
                p.epochs = static_cast<int>(to_int(line, value));
            else if (key == "mask_prob") p.mask_prob = to_double(line, value);
            else if (key == "alpha_kd")
                p.weights.alpha_kd = to_double(line, value);
            else if (key == "alpha_mlm")
                p.weights.alpha_mlm = to_double(line, value);
            else if (key == "alpha_cos")
                p.weights.alpha_cos = to_double(line, value);
            else if (key == "temperature")
                p.temperature = to_double(line, value);
            else if (key == "dropout") p.dropout = to_double(line, value);
            else if (key == "lr_decay") p.lr_decay = to_double(line, value);
            else if (key == "max_steps") p.max_steps = to_int(line, value);
            else fail(line, "unknown key \"pretrain." + key + "\"");
        } else if (section == "task") {
            TaskSpec& t = cfg.task;
            if (key == "kind") {
                if (value == "token") t.kind = TaskKind::token_classification;
                else if (value == "sequence")
                    t.kind = TaskKind::sequence_classification;
                else fail(line, "task.kind must be token or sequence");
            } else if (key == "num_labels") {
                t.num_labels = static_cast<int>(to_int(line, value));
            } else if (key == "epochs") {
                t.epochs = static_cast<int>(to_int(line, value));
            } else if (key == "batch_size") {
                t.batch_size = static_cast<int>(to_int(line, value));
            } else if (key == "learning_rate") {
                t.learning_rate = to_double(line, value);
            } else if (key == "folds") {
                t.folds = static_cast<int>(to_int(line, value));
            } else if (key == "f1") {
                if (value == "micro") t.f1 = F1Kind::micro;
                else if (value == "span") t.f1 = F1Kind::span;
                else if (value == "weighted") t.f1 = F1Kind::weighted;
                else fail(line, "task.f1 must be micro, span or weighted");
            } else {
                fail(line, "unknown key \"task." + key + "\"");
            }
        } else {
            fail(line, "unknown section [" + section + "]");
        }
    }
};

}  // namespace

ModelConfig RunConfig::student_config() const {
    ModelConfig s = teacher;
    s.num_layers = student_layers > 0 ? student_layers : teacher.num_layers / 2;
    return s;
}

void RunConfig::validate() const {
    teacher.validate();
    const int depth = student_config().num_layers;
    if (depth < 1)
        throw ContractError("config: student needs at least 1 layer");
    if (!allow_any_depth && depth * 2 != teacher.num_layers)
        throw ContractError(
            "config: student depth must be half the teacher's (" +
            std::to_string(depth) + " vs " +
            std::to_string(teacher.num_layers) +
            "); set allow_any_depth = true to override");
    pretrain.validate();
    task.validate();
}

RunConfig full_scale_config() {
    RunConfig c;
    c.teacher.vocab_size = 32000;
    c.teacher.hidden_size = 768;
    c.teacher.num_layers = 12;
    c.teacher.num_heads = 12;
    c.teacher.intermediate_size = 3072;
    c.teacher.max_seq_len = 512;
    c.student_layers = 6;
    // PretrainConfig and TaskSpec defaults already carry the published
    // values (batch 6 / lr 5e-4 / 3 epochs; 4 epochs / batch 32 / lr 5e-5).
    return c;
}

RunConfig desk_config() {
    RunConfig c;
    c.teacher.vocab_size = 211;
    c.teacher.hidden_size = 32;
    c.teacher.num_layers = 4;
    c.teacher.num_heads = 4;
    c.teacher.intermediate_size = 128;
    c.teacher.max_seq_len = 64;
    c.student_layers = 2;
    return c;
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg = full_scale_config();
    Parser parser(cfg);
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                parser.fail(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            parser.fail(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) parser.fail(line_no, "empty key");
        parser.apply(line_no, section, key, value);
    }
    cfg.validate();
    return cfg;
}

std::string run_config_to_text(const RunConfig& c) {
    std::ostringstream out;
    out << "seed = " << num(c.global_seed) << "\n\n";
    out << "[paths]\n";
    out << "corpus = " << c.corpus << "\n";
    out << "vocab = " << c.vocab << "\n";
    out << "checkpoint_dir = " << c.checkpoint_dir << "\n";
    out << "dataset = " << c.dataset << "\n";
    out << "split = " << c.split << "\n";
    out << "report_dir = " << c.report_dir << "\n\n";
    out << "[model]\n";
    out << "vocab_size = " << num(c.teacher.vocab_size) << "\n";
    out << "hidden_size = " << num(c.teacher.hidden_size) << "\n";
    out << "num_layers = " << num(c.teacher.num_layers) << "\n";
    out << "num_heads = " << num(c.teacher.num_heads) << "\n";
    out << "intermediate_size = " << num(c.teacher.intermediate_size) << "\n";
    out << "max_seq_len = " << num(c.teacher.max_seq_len) << "\n";
    out << "layer_norm_eps = " << num(c.teacher.layer_norm_eps) << "\n";
    out << "student_layers = " << num(c.student_layers) << "\n";
    out << "allow_any_depth = " << (c.allow_any_depth ? "true" : "false")
        << "\n\n";
    out << "[pretrain]\n";
    out << "batch_size = " << num(c.pretrain.batch_size) << "\n";
    out << "learning_rate = " << num(c.pretrain.learning_rate) << "\n";
    out << "epochs = " << num(c.pretrain.epochs) << "\n";
    out << "mask_prob = " << num(c.pretrain.mask_prob) << "\n";
    out << "alpha_kd = " << num(c.pretrain.weights.alpha_kd) << "\n";
    out << "alpha_mlm = " << num(c.pretrain.weights.alpha_mlm) << "\n";
    out << "alpha_cos = " << num(c.pretrain.weights.alpha_cos) << "\n";
    out << "temperature = " << num(c.pretrain.temperature) << "\n";
    out << "dropout = " << num(c.pretrain.dropout) << "\n";
    out << "lr_decay = " << num(c.pretrain.lr_decay) << "\n";
    out << "max_steps = " << num(c.pretrain.max_steps) << "\n\n";
    out << "[task]\n";
    out << "kind = " << task_kind_name(c.task.kind) << "\n";
    out << "num_labels = " << num(c.task.num_labels) << "\n";
    out << "epochs = " << num(c.task.epochs) << "\n";
    out << "batch_size = " << num(c.task.batch_size) << "\n";
    out << "learning_rate = " << num(c.task.learning_rate) << "\n";
    out << "folds = " << num(c.task.folds) << "\n";
    out << "f1 = " << f1_kind_name(c.task.f1) << "\n";
    return out.str();
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_run_config(buf.str());
    } catch (const DataError& e) {
        throw DataError(std::string(e.what()).substr(6) + " in " + path);
    }
}

void save_run_config(const RunConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("config: cannot write " + path);
    out << run_config_to_text(config);
    if (!out) throw IoError("config: failed writing " + path);
}

}  // namespace distil
