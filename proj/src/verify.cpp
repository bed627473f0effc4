#include "distil/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "distil/corpus.hpp"
#include "distil/encoder.hpp"
#include "distil/error.hpp"
#include "distil/finetune.hpp"
#include "distil/rng.hpp"

namespace distil {

namespace {

// ---------------------------------------------------------------------
// Shared gradient-check plumbing.
// ---------------------------------------------------------------------

// Central finite differences of `eval` with respect to every component of
// `param` (tensor handles alias storage, so poking param.data() is seen by
// the closure). A 64-bit central difference cannot resolve derivatives
// below ulp(|f|) / (2h); components under that quantum are compared
// absolutely against it instead of relatively.
void fd_check(const std::function<double()>& eval, Tensor param,
              const std::vector<double>& analytic, double h, double tol,
              SuiteResult& suite) {
    const double f0 = std::abs(eval());
    const double quantum =
        std::ldexp(std::max(f0, 1e-30), -52) / (2.0 * h);
    std::vector<double>& data = param.data();
    for (size_t i = 0; i < data.size(); ++i) {
        const double saved = data[i];
        data[i] = saved + h;
        const double fp = eval();
        data[i] = saved - h;
        const double fm = eval();
        data[i] = saved;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[i];
        ++suite.checks;
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        if (std::max(std::abs(a), std::abs(numeric)) >= quantum / tol) {
            if (std::abs(a - numeric) > tol * denom) ++suite.failures;
        } else if (std::abs(a - numeric) >
                   std::max(tol * denom, 4.0 * quantum)) {
            ++suite.failures;
        }
    }
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, bool grad,
                     double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape), grad);
    for (double& x : t.data()) x = rng.normal(0.0, scale);
    return t;
}

// ---------------------------------------------------------------------
// Independent scalar references (plain loops, no autodiff).
// ---------------------------------------------------------------------

// Soft-target cross entropy, temperature-scaled, log clamped at -100.
double ref_kd(const Tensor& teacher_logits, const Tensor& student_logits,
              double temperature) {
    const int v = teacher_logits.dim(teacher_logits.rank() - 1);
    const int n = static_cast<int>(teacher_logits.size()) / v;
    const std::vector<double>& t = teacher_logits.data();
    const std::vector<double>& s = student_logits.data();
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
        double tmax = -1e300, smax = -1e300;
        for (int c = 0; c < v; ++c) {
            tmax = std::max(tmax, t[static_cast<size_t>(r) * v + c]);
            smax = std::max(smax, s[static_cast<size_t>(r) * v + c]);
        }
        double tz = 0.0, sz = 0.0;
        for (int c = 0; c < v; ++c) {
            tz += std::exp((t[static_cast<size_t>(r) * v + c] - tmax) /
                           temperature);
            sz += std::exp((s[static_cast<size_t>(r) * v + c] - smax) /
                           temperature);
        }
        for (int c = 0; c < v; ++c) {
            const double tp =
                std::exp((t[static_cast<size_t>(r) * v + c] - tmax) /
                         temperature) /
                tz;
            const double sp =
                std::exp((s[static_cast<size_t>(r) * v + c] - smax) /
                         temperature) /
                sz;
            total -= tp * std::max(std::log(sp), -100.0);
        }
    }
    // The tempered objective is scaled by T^2 so gradient magnitudes stay
    // comparable across temperatures.
    return temperature * temperature * total / n;
}

// Mean cross entropy over rows whose label is not the ignore marker.
double ref_mlm(const Tensor& logits, const IntMat& labels) {
    const int v = logits.dim(logits.rank() - 1);
    const int n = static_cast<int>(logits.size()) / v;
    const std::vector<double>& x = logits.data();
    double total = 0.0;
    int counted = 0;
    for (int r = 0; r < n; ++r) {
        const int label = labels.v[static_cast<size_t>(r)];
        if (label == kIgnoreLabel) continue;
        double mx = -1e300;
        for (int c = 0; c < v; ++c)
            mx = std::max(mx, x[static_cast<size_t>(r) * v + c]);
        double z = 0.0;
        for (int c = 0; c < v; ++c)
            z += std::exp(x[static_cast<size_t>(r) * v + c] - mx);
        const double p =
            std::exp(x[static_cast<size_t>(r) * v + label] - mx) / z;
        total -= std::max(std::log(p), -100.0);
        ++counted;
    }
    return counted == 0 ? 0.0 : total / counted;
}

// Mean of 1 - cosine over mask==1 positions; zero-norm vectors score 1.
double ref_cos(const Tensor& student_hidden, const Tensor& teacher_hidden,
               const IntMat& mask) {
    const int h = student_hidden.dim(student_hidden.rank() - 1);
    const int n = static_cast<int>(student_hidden.size()) / h;
    const std::vector<double>& s = student_hidden.data();
    const std::vector<double>& t = teacher_hidden.data();
    double total = 0.0;
    int counted = 0;
    for (int r = 0; r < n; ++r) {
        if (mask.v[static_cast<size_t>(r)] == 0) continue;
        double dot = 0.0, sn = 0.0, tn = 0.0;
        for (int c = 0; c < h; ++c) {
            const double sv = s[static_cast<size_t>(r) * h + c];
            const double tv = t[static_cast<size_t>(r) * h + c];
            dot += sv * tv;
            sn += sv * sv;
            tn += tv * tv;
        }
        const double norm = std::sqrt(sn) * std::sqrt(tn);
        total += norm == 0.0 ? 1.0 : 1.0 - dot / norm;
        ++counted;
    }
    return counted == 0 ? 0.0 : total / counted;
}

// ---------------------------------------------------------------------
// Independent F1 references (quadratic, set-based).
// ---------------------------------------------------------------------

double ref_micro(const std::vector<int>& pred, const std::vector<int>& gold) {
    if (gold.empty()) return 1.0;
    int hit = 0;
    for (size_t i = 0; i < gold.size(); ++i)
        if (pred[i] == gold[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(gold.size());
}

std::vector<std::tuple<std::string, int, int>> ref_spans(
    const std::vector<std::string>& tags) {
    std::vector<std::tuple<std::string, int, int>> out;
    size_t i = 0;
    while (i < tags.size()) {
        if (tags[i] == "O") {
            ++i;
            continue;
        }
        const std::string type = tags[i].substr(2);
        size_t j = i + 1;
        while (j < tags.size() && tags[j] == "I-" + type) ++j;
        out.emplace_back(type, static_cast<int>(i), static_cast<int>(j));
        i = j;
    }
    return out;
}

double ref_span_f1(const std::vector<std::string>& pred,
                   const std::vector<std::string>& gold) {
    auto ps = ref_spans(pred);
    auto gs = ref_spans(gold);
    if (ps.empty() && gs.empty()) return 0.0;
    int tp = 0;
    for (const auto& span : ps)
        if (std::find(gs.begin(), gs.end(), span) != gs.end()) ++tp;
    if (tp == 0) return 0.0;
    const double p = static_cast<double>(tp) / static_cast<double>(ps.size());
    const double r = static_cast<double>(tp) / static_cast<double>(gs.size());
    return 2.0 * p * r / (p + r);
}

double ref_weighted(const std::vector<int>& pred, const std::vector<int>& gold,
                    int num_labels) {
    double out = 0.0;
    for (int c = 0; c < num_labels; ++c) {
        int tp = 0, predicted = 0, support = 0;
        for (size_t i = 0; i < gold.size(); ++i) {
            if (pred[i] == c && gold[i] == c) ++tp;
            if (pred[i] == c) ++predicted;
            if (gold[i] == c) ++support;
        }
        if (support == 0) continue;
        double f1 = 0.0;
        if (predicted > 0 && tp > 0) {
            const double p = static_cast<double>(tp) / predicted;
            const double r = static_cast<double>(tp) / support;
            f1 = 2.0 * p * r / (p + r);
        }
        out += static_cast<double>(support) * f1;
    }
    return out / static_cast<double>(gold.size());
}

// ---------------------------------------------------------------------
// Suites.
// ---------------------------------------------------------------------

// FD-checks every primitive operation through a fixed linear readout.
SuiteResult suite_gradient_ops() {
    SuiteResult suite{"gradient-ops", 0, 0};
    Rng rng(101);
    const double h = 1e-6, tol = 1e-4;

    // loss(out) = mean(out * coeff) with constant coefficients, so the
    // objective is sensitive to every output component.
    auto readout = [&](Graph& g, const Tensor& out, const Tensor& coeff) {
        Tensor prod = mul(g, out, coeff);
        return mean(g, prod);
    };
    auto run = [&](const std::vector<Tensor>& inputs, const Tensor& coeff,
                   const std::function<Tensor(Graph&)>& forward) {
        for (Tensor input : inputs) input.zero_grad();
        Graph g;
        Tensor out = forward(g);
        Tensor loss = readout(g, out, coeff);
        backward(g, loss);
        auto eval = [&forward, &readout, coeff]() {
            Graph fresh(false);
            Tensor out2 = forward(fresh);
            Tensor l = readout(fresh, out2, coeff);
            return l.data()[0];
        };
        for (const Tensor& input : inputs)
            fd_check(eval, input, input.grad(), h, tol, suite);
    };

    {
        Tensor a = random_tensor({3, 4}, rng, true);
        Tensor b = random_tensor({3, 4}, rng, true);
        Tensor coeff = random_tensor({3, 4}, rng, false);
        run({a, b}, coeff, [=](Graph& g) { return add(g, a, b); });
        run({a, b}, coeff, [=](Graph& g) { return mul(g, a, b); });
        run({a}, coeff, [=](Graph& g) { return scale(g, a, -1.7); });
        run({a}, coeff, [=](Graph& g) { return gelu(g, a); });
    }
    {
        // row-broadcast bias add
        Tensor a = random_tensor({3, 4}, rng, true);
        Tensor b = random_tensor({4}, rng, true);
        Tensor coeff = random_tensor({3, 4}, rng, false);
        run({a, b}, coeff, [=](Graph& g) { return add(g, a, b); });
    }
    {
        Tensor a = random_tensor({3, 4}, rng, true);
        Tensor b = random_tensor({4, 2}, rng, true);
        Tensor coeff = random_tensor({3, 2}, rng, false);
        run({a, b}, coeff, [=](Graph& g) { return matmul(g, a, b); });
    }
    {
        Tensor a = random_tensor({3, 4}, rng, true);
        Tensor coeff = random_tensor({2, 6}, rng, false);
        run({a}, coeff, [=](Graph& g) { return reshape(g, a, {2, 6}); });
    }
    {
        Tensor a = random_tensor({2, 3, 4}, rng, true);
        Tensor coeff = random_tensor({3, 2, 4}, rng, false);
        run({a}, coeff,
            [=](Graph& g) { return permute(g, a, {1, 0, 2}); });
    }
    {
        Tensor a = random_tensor({3, 5}, rng, true);
        Tensor coeff = random_tensor({3, 5}, rng, false);
        run({a}, coeff, [=](Graph& g) { return softmax(g, a); });
    }
    {
        Tensor a = random_tensor({3, 6}, rng, true);
        Tensor gain = random_tensor({6}, rng, true);
        Tensor bias = random_tensor({6}, rng, true);
        Tensor coeff = random_tensor({3, 6}, rng, false);
        run({a, gain, bias}, coeff,
            [=](Graph& g) { return layer_norm(g, a, gain, bias, 1e-12); });
    }
    {
        // positive inputs away from the clamp kink
        Tensor a = Tensor::zeros({3, 4}, true);
        for (double& x : a.data()) x = 0.5 + rng.uniform();
        Tensor coeff = random_tensor({3, 4}, rng, false);
        run({a}, coeff, [=](Graph& g) { return log_clamped(g, a); });
    }
    {
        Tensor table = random_tensor({7, 5}, rng, true);
        IntMat ids(2, 3);
        int fill[] = {0, 3, 3, 6, 1, 0};  // repeats exercise accumulation
        std::copy(std::begin(fill), std::end(fill), ids.v.begin());
        Tensor coeff = random_tensor({2, 3, 5}, rng, false);
        run({table}, coeff,
            [=](Graph& g) { return embedding(g, table, ids); });
    }
    {
        Tensor a = random_tensor({6, 4}, rng, true);
        std::vector<int> rows = {0, 3, 3, 5};
        Tensor coeff = random_tensor({4, 4}, rng, false);
        run({a}, coeff,
            [=](Graph& g) { return gather_rows(g, a, rows); });
    }
    {
        Tensor a = random_tensor({3, 4}, rng, true);
        Tensor one = Tensor::zeros({1});
        one.data()[0] = 1.0;
        run({a}, one, [=](Graph& g) { return sum(g, a); });
        run({a}, one, [=](Graph& g) { return mean(g, a); });
    }
    return suite;
}

using KdFn =
    std::function<LossResult(Graph&, const Tensor&, const Tensor&, double)>;

// Analytic gradients (through the hook for the distillation term) against
// finite differences of the independent references.
SuiteResult suite_gradient_losses(const KdFn& kd) {
    SuiteResult suite{"gradient-losses", 0, 0};
    Rng rng(202);
    const double h = 1e-6, tol = 1e-4;

    {  // distillation loss, plain and tempered
        for (double temperature : {1.0, 2.0}) {
            Tensor t = random_tensor({4, 7}, rng, false);
            Tensor s = random_tensor({4, 7}, rng, true);
            Graph g;
            LossResult r = kd(g, t, s, temperature);
            backward(g, r.value);
            auto eval = [=]() { return ref_kd(t, s, temperature); };
            fd_check(eval, s, s.grad(), h, tol, suite);
        }
    }
    {  // masked-LM loss with ignored rows
        Tensor logits = random_tensor({6, 5}, rng, true);
        IntMat labels(1, 6);
        int fill[] = {2, kIgnoreLabel, 0, 4, kIgnoreLabel, 1};
        std::copy(std::begin(fill), std::end(fill), labels.v.begin());
        Graph g;
        LossResult r = mlm_loss(g, logits, labels);
        backward(g, r.value);
        auto eval = [=]() { return ref_mlm(logits, labels); };
        fd_check(eval, logits, logits.grad(), h, tol, suite);
    }
    {  // hidden-alignment loss with an excluded position
        Tensor s = random_tensor({1, 4, 5}, rng, true);
        Tensor t = random_tensor({1, 4, 5}, rng, false);
        IntMat mask(1, 4, 1);
        mask.at(0, 2) = 0;
        Graph g;
        LossResult r = cos_loss(g, s, t, mask);
        backward(g, r.value);
        auto eval = [=]() { return ref_cos(s, t, mask); };
        fd_check(eval, s, s.grad(), h, tol, suite);
    }
    return suite;
}

// The full distillation objective differentiated through two live
// encoders, checked against finite differences of its own forward pass.
SuiteResult suite_gradient_model() {
    SuiteResult suite{"gradient-model", 0, 0};
    ModelConfig cfg;
    cfg.vocab_size = 11;
    cfg.hidden_size = 8;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.intermediate_size = 16;
    cfg.max_seq_len = 12;
    EncoderModel teacher = EncoderModel::random_init(cfg, 7);
    EncoderModel student = init_student_from_teacher(teacher);
    // 0.02-scale init leaves many derivatives below the finite-difference
    // resolution floor; a well-conditioned parameter point keeps the check
    // honest for every component.
    for (Tensor& p : student.parameters())
        for (double& x : p.data()) x *= 10.0;

    Vocab vocab;
    vocab.tokens = Vocab::reserved_tokens();
    for (const char* w : {"ape", "bee", "cat", "dog", "elk", "fox"})
        vocab.tokens.push_back(w);
    for (int i = 0; i < vocab.size(); ++i)
        vocab.ids[vocab.tokens[static_cast<size_t>(i)]] = i;
    Batch batch = make_batch({"ape bee cat dog", "fox elk ape"}, vocab, 12);
    batch = mask_for_mlm(batch, vocab, 0.35, 3);

    student.set_requires_grad(true);
    Graph g;
    DistillOutput out = combined_loss(g, batch, teacher, student);
    backward(g, out.total);

    auto eval = [&]() {
        Graph fresh(false);
        return combined_loss(fresh, batch, teacher, student)
            .total.data()[0];
    };
    for (const Tensor& p : student.parameters())
        fd_check(eval, p, p.grad(), 1e-6, 1e-4, suite);
    return suite;
}

SuiteResult suite_loss_oracles(const KdFn& kd) {
    SuiteResult suite{"loss-oracles", 0, 0};
    Rng rng(303);
    auto check_close = [&suite](double got, double want, double tol) {
        ++suite.checks;
        if (std::abs(got - want) > tol) ++suite.failures;
    };

    for (int trial = 0; trial < 10; ++trial) {
        const double temperature = trial % 2 == 0 ? 1.0 : 1.5 + trial * 0.2;
        Tensor t = random_tensor({3, 6}, rng, false);
        Tensor s = random_tensor({3, 6}, rng, false);
        Graph g(false);
        check_close(kd(g, t, s, temperature).value.data()[0],
                    ref_kd(t, s, temperature), 1e-6);
    }
    for (int trial = 0; trial < 10; ++trial) {
        Tensor logits = random_tensor({5, 4}, rng, false);
        IntMat labels(1, 5);
        for (int i = 0; i < 5; ++i)
            labels.v[static_cast<size_t>(i)] =
                rng.uniform() < 0.3 ? kIgnoreLabel : rng.uniform_int(0, 4);
        Graph g(false);
        check_close(mlm_loss(g, logits, labels).value.data()[0],
                    ref_mlm(logits, labels), 1e-6);
    }
    for (int trial = 0; trial < 10; ++trial) {
        Tensor s = random_tensor({1, 3, 6}, rng, false);
        Tensor t = random_tensor({1, 3, 6}, rng, false);
        IntMat mask(1, 3, 1);
        if (trial % 3 == 0) mask.at(0, 1) = 0;
        Graph g(false);
        check_close(cos_loss(g, s, t, mask).value.data()[0],
                    ref_cos(s, t, mask), 1e-6);
    }

    // combined objective: the reported total must reassemble exactly from
    // the weighted parts.
    ModelConfig cfg;
    cfg.vocab_size = 11;
    cfg.hidden_size = 8;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.intermediate_size = 16;
    cfg.max_seq_len = 12;
    EncoderModel teacher = EncoderModel::random_init(cfg, 9);
    EncoderModel student = init_student_from_teacher(teacher);
    Vocab vocab;
    vocab.tokens = Vocab::reserved_tokens();
    for (const char* w : {"ape", "bee", "cat", "dog", "elk", "fox"})
        vocab.tokens.push_back(w);
    for (int i = 0; i < vocab.size(); ++i)
        vocab.ids[vocab.tokens[static_cast<size_t>(i)]] = i;
    DistillWeights w;
    for (int trial = 0; trial < 5; ++trial) {
        Batch batch =
            make_batch({"ape bee cat", "dog elk fox ape bee"}, vocab, 12);
        batch = mask_for_mlm(batch, vocab, 0.3,
                             static_cast<uint64_t>(trial) + 11);
        Graph g(false);
        DistillOutput out = combined_loss(g, batch, teacher, student);
        const double reassembled = (w.alpha_kd * out.breakdown.kd +
                                    w.alpha_mlm * out.breakdown.mlm) +
                                   w.alpha_cos * out.breakdown.cos;
        check_close(out.breakdown.total, reassembled, 1e-12);
        check_close(out.total.data()[0], out.breakdown.total, 0.0);
    }
    return suite;
}

SuiteResult suite_splitter_fuzz() {
    SuiteResult suite{"splitter-fuzz", 0, 0};
    Rng rng(404);
    const int limit = 40;
    for (int trial = 0; trial < 1000; ++trial) {
        // random words, ~15% carrying a sentence-final period
        const int n = 1 + rng.uniform_int(0, 120);
        std::string text;
        for (int i = 0; i < n; ++i) {
            if (i) text += ' ';
            const int len = 1 + rng.uniform_int(0, 8);
            for (int j = 0; j < len; ++j)
                text += static_cast<char>('a' + rng.uniform_int(0, 26));
            if (rng.uniform() < 0.15) text += '.';
        }
        const std::vector<std::string> original = split_words(text);
        const std::vector<std::string> chunks =
            split_long_sentences(text, limit);

        std::vector<std::string> reassembled;
        bool chunks_valid = true;
        for (const std::string& chunk : chunks) {
            const std::vector<std::string> words = split_words(chunk);
            reassembled.insert(reassembled.end(), words.begin(), words.end());
            if (static_cast<int>(words.size()) > limit) {
                // only legal when the chunk is one unbreakable segment:
                // no word before the last may end with a period
                for (size_t i = 0; i + 1 < words.size(); ++i)
                    if (words[i].back() == '.') chunks_valid = false;
            }
        }
        ++suite.checks;
        if (reassembled != original) ++suite.failures;
        ++suite.checks;
        if (!chunks_valid) ++suite.failures;
    }
    return suite;
}

SuiteResult suite_f1_oracles() {
    SuiteResult suite{"f1-oracles", 0, 0};
    Rng rng(505);
    auto check_equal = [&suite](double got, double want) {
        ++suite.checks;
        if (got != want) ++suite.failures;
    };

    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + rng.uniform_int(0, 12);
        const int labels = 2 + rng.uniform_int(0, 4);
        std::vector<int> pred, gold;
        for (int i = 0; i < n; ++i) {
            gold.push_back(rng.uniform_int(0, labels));
            pred.push_back(rng.uniform() < 0.6 ? gold.back()
                                               : rng.uniform_int(0, labels));
        }
        check_equal(f1_token(pred, gold), ref_micro(pred, gold));
        check_equal(f1_multiclass(pred, gold, labels),
                    ref_weighted(pred, gold, labels));
    }

    const char* types[] = {"PER", "LOC", "ORG"};
    auto random_bio = [&](int n) {
        std::vector<std::string> tags;
        int i = 0;
        while (i < n) {
            if (rng.uniform() < 0.55) {
                tags.push_back("O");
                ++i;
            } else {
                const std::string type = types[rng.uniform_int(0, 3)];
                const int len = std::min(1 + rng.uniform_int(0, 3), n - i);
                tags.push_back("B-" + type);
                for (int j = 1; j < len; ++j) tags.push_back("I-" + type);
                i += len;
            }
        }
        return tags;
    };
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + rng.uniform_int(0, 10);
        const std::vector<std::string> pred = random_bio(n);
        const std::vector<std::string> gold = random_bio(n);
        check_equal(f1_span(pred, gold), ref_span_f1(pred, gold));
    }
    return suite;
}

}  // namespace

VerifyReport run_verification(std::ostream& out, const VerifyHooks& hooks) {
    KdFn kd = hooks.kd_loss;
    if (!kd)
        kd = [](Graph& g, const Tensor& t, const Tensor& s,
                double temperature) {
            return kd_loss(g, t, s, temperature);
        };

    VerifyReport report;
    report.suites.push_back(suite_gradient_ops());
    report.suites.push_back(suite_gradient_losses(kd));
    report.suites.push_back(suite_gradient_model());
    report.suites.push_back(suite_loss_oracles(kd));
    report.suites.push_back(suite_splitter_fuzz());
    report.suites.push_back(suite_f1_oracles());
    for (const SuiteResult& s : report.suites)
        out << s.name << ": " << s.checks << " checks, " << s.failures
            << " failures\n";
    out << (report.ok() ? "verification passed" : "verification FAILED")
        << "\n";
    return report;
}

}  // namespace distil
