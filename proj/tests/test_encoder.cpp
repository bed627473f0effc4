#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "distil/encoder.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace distil;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.vocab_size = 11;
    c.hidden_size = 8;
    c.num_layers = 2;
    c.num_heads = 2;
    c.intermediate_size = 16;
    c.max_seq_len = 8;
    return c;
}

ModelConfig desk_teacher_config() {
    ModelConfig c;
    c.vocab_size = 211;
    c.hidden_size = 32;
    c.num_layers = 4;
    c.num_heads = 4;
    c.intermediate_size = 128;
    c.max_seq_len = 64;
    return c;
}

Batch tiny_batch() {
    Batch b;
    b.token_ids = IntMat(2, 5);
    b.attention_mask = IntMat(2, 5, 1);
    int ids[2][5] = {{1, 4, 7, 2, 9}, {3, 3, 10, 0, 0}};
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 5; ++c) b.token_ids.at(r, c) = ids[r][c];
    b.attention_mask.at(1, 3) = 0;
    b.attention_mask.at(1, 4) = 0;
    return b;
}

double order_checksum(const std::vector<double>& v) {
    double s = 0.0;
    for (size_t i = 0; i < v.size(); ++i)
        s += v[i] * static_cast<double>(i % 7 + 1);
    return s;
}

bool print_goldens() { return std::getenv("DISTIL_PRINT_GOLDENS") != nullptr; }

// Self-consistency values recorded at first build of this test.
constexpr double kGoldenHiddenChecksum = 19.406829900087619;
constexpr double kGoldenLogitsChecksum = 1.0664181410981681;
constexpr long kGoldenCheckpointBytes = 11765;

}  // namespace

TEST_CASE("model config validation") {
    ModelConfig c = tiny_config();
    CHECK_NOTHROW(c.validate());
    c.num_heads = 3;  // 8 % 3 != 0
    CHECK_THROWS_AS(c.validate(), ContractError);
    c = tiny_config();
    c.vocab_size = 0;
    CHECK_THROWS_AS(c.validate(), ContractError);
    c = tiny_config();
    c.layer_norm_eps = 0.0;
    CHECK_THROWS_AS(c.validate(), ContractError);
}

TEST_CASE("config text round-trips through string and file") {
    ModelConfig c = desk_teacher_config();
    CHECK(config_from_text(config_to_text(c)) == c);

    testutil::TempDir dir("enc-cfg");
    save_config(c, dir.file("model.cfg"));
    CHECK(load_config(dir.file("model.cfg")) == c);

    CHECK_THROWS_AS(config_from_text("vocab_size 211\n"), DataError);
    CHECK_THROWS_AS(config_from_text("mystery_key: 3\n"), DataError);
    CHECK_THROWS_AS(load_config(dir.file("missing.cfg")), IoError);
}

TEST_CASE("random_init builds consistent parameter shapes") {
    EncoderModel m = EncoderModel::random_init(tiny_config(), 0);
    CHECK(m.blocks.size() == 2);
    CHECK(m.token_embeddings.shape() == std::vector<int>{11, 8});
    CHECK(m.position_embeddings.shape() == std::vector<int>{8, 8});
    CHECK(m.blocks[0].w1.shape() == std::vector<int>{8, 16});
    CHECK(m.blocks[0].w2.shape() == std::vector<int>{16, 8});
    CHECK(m.mlm_w.shape() == std::vector<int>{8, 11});
    CHECK(m.mlm_b.shape() == std::vector<int>{11});
    // layer norms start at identity
    for (double v : m.blocks[0].ln1_gain.data()) CHECK(v == 1.0);
    for (double v : m.blocks[0].ln1_bias.data()) CHECK(v == 0.0);
    // deterministic in the seed
    EncoderModel m2 = EncoderModel::random_init(tiny_config(), 0);
    CHECK(m.blocks[1].wv.data() == m2.blocks[1].wv.data());
    EncoderModel m3 = EncoderModel::random_init(tiny_config(), 1);
    CHECK(m.blocks[1].wv.data() != m3.blocks[1].wv.data());
}

TEST_CASE("param_count matches shape-walk oracles") {
    // hand walk at a minimal config: vocab 2, hidden 2, 1 layer, 1 head,
    // intermediate 2, seq 2 -> embeddings 4+4, block 44, head 4+2 = 58
    ModelConfig mini;
    mini.vocab_size = 2;
    mini.hidden_size = 2;
    mini.num_layers = 1;
    mini.num_heads = 1;
    mini.intermediate_size = 2;
    mini.max_seq_len = 2;
    CHECK(param_count(EncoderModel::random_init(mini, 0)) == 58);

    EncoderModel teacher = EncoderModel::random_init(desk_teacher_config(), 0);
    CHECK(param_count(teacher) == 66579);
    EncoderModel student = init_student_from_teacher(teacher);
    CHECK(param_count(student) == 41171);
    CHECK(param_count(student) < param_count(teacher));
}

TEST_CASE("all-pad batch with all-zero mask stays finite") {
    EncoderModel m = EncoderModel::random_init(tiny_config(), 3);
    Batch b;
    b.token_ids = IntMat(2, 4, 0);
    b.attention_mask = IntMat(2, 4, 0);
    Graph g(false);
    Tensor h = encoder_forward(g, m, b);
    for (double v : h.data()) CHECK(std::isfinite(v));
}

TEST_CASE("zero attention and feed-forward weights reduce to embeddings") {
    ModelConfig c = tiny_config();
    c.num_layers = 1;
    EncoderModel m = EncoderModel::random_init(c, 5);
    for (Tensor t : {m.blocks[0].wq, m.blocks[0].bq, m.blocks[0].wk,
                     m.blocks[0].bk, m.blocks[0].wv, m.blocks[0].bv,
                     m.blocks[0].wo, m.blocks[0].bo, m.blocks[0].w1,
                     m.blocks[0].b1, m.blocks[0].w2, m.blocks[0].b2})
        std::fill(t.data().begin(), t.data().end(), 0.0);

    Batch b;
    b.token_ids = IntMat(1, 1, 7);
    b.attention_mask = IntMat(1, 1, 1);

    // the embedding-sum vector this input produces
    std::vector<double> x(8);
    for (int h = 0; h < 8; ++h)
        x[h] = m.token_embeddings.data()[7 * 8 + h] +
               m.position_embeddings.data()[h];
    double mu = 0.0, var = 0.0;
    for (double v : x) mu += v;
    mu /= 8;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= 8;
    const double sigma = std::sqrt(var + c.layer_norm_eps);
    // choose norm parameters that act as the identity on exactly this vector
    for (auto* t : {&m.blocks[0].ln1_gain, &m.blocks[0].ln2_gain})
        std::fill(t->data().begin(), t->data().end(), sigma);
    for (auto* t : {&m.blocks[0].ln1_bias, &m.blocks[0].ln2_bias})
        std::fill(t->data().begin(), t->data().end(), mu);

    Graph g(false);
    Tensor h = encoder_forward(g, m, b);
    CHECK(testutil::max_abs_diff(h.data(), x) <= 1e-9);
}

TEST_CASE("sequence length and token id limits are enforced") {
    EncoderModel m = EncoderModel::random_init(tiny_config(), 1);
    Batch b;
    b.token_ids = IntMat(1, 9, 0);  // max_seq_len is 8
    b.attention_mask = IntMat(1, 9, 1);
    CHECK_THROWS_AS(
        { Graph g(false); encoder_forward(g, m, b); }, ContractError);

    Batch b2;
    b2.token_ids = IntMat(1, 3, 0);
    b2.attention_mask = IntMat(1, 3, 1);
    b2.token_ids.at(0, 2) = 11;  // vocab is 11, ids 0..10
    try {
        Graph g(false);
        encoder_forward(g, m, b2);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        std::string msg = e.what();
        CHECK(msg.find("11") != std::string::npos);  // offending id
        CHECK(msg.find("2") != std::string::npos);   // position
    }
}

TEST_CASE("attention rows are distributions that ignore masked keys") {
    EncoderModel m = EncoderModel::random_init(tiny_config(), 9);
    Batch b = tiny_batch();  // row 1 masks keys 3 and 4
    ForwardTrace trace;
    ForwardOptions opts;
    opts.trace = &trace;
    Graph g(false);
    encoder_forward(g, m, b, opts);
    REQUIRE(trace.blocks_executed == 2);
    REQUIRE(trace.attention_probs.size() == 2);
    for (const Tensor& probs : trace.attention_probs) {
        REQUIRE(probs.shape() == std::vector<int>{2, 2, 5, 5});
        const auto& v = probs.data();
        for (int bi = 0; bi < 2; ++bi)
            for (int hd = 0; hd < 2; ++hd)
                for (int q = 0; q < 5; ++q) {
                    double s = 0.0;
                    for (int k = 0; k < 5; ++k) {
                        double p = v[((bi * 2 + hd) * 5 + q) * 5 + k];
                        if (bi == 1 && k >= 3)
                            CHECK(p <= 1e-30);  // masked keys
                        s += p;
                    }
                    CHECK(std::abs(s - 1.0) <= 1e-9);
                }
    }
}

TEST_CASE("token permutation permutes outputs when positions are zeroed") {
    EncoderModel m = EncoderModel::random_init(tiny_config(), 13);
    std::fill(m.position_embeddings.data().begin(),
              m.position_embeddings.data().end(), 0.0);
    Batch b;
    b.token_ids = IntMat(1, 4);
    b.attention_mask = IntMat(1, 4, 1);
    int ids[4] = {5, 2, 9, 2};
    for (int i = 0; i < 4; ++i) b.token_ids.at(0, i) = ids[i];
    b.attention_mask.at(0, 2) = 0;

    // reversal permutation of tokens and mask
    Batch rb;
    rb.token_ids = IntMat(1, 4);
    rb.attention_mask = IntMat(1, 4, 1);
    for (int i = 0; i < 4; ++i) {
        rb.token_ids.at(0, i) = b.token_ids.at(0, 3 - i);
        rb.attention_mask.at(0, i) = b.attention_mask.at(0, 3 - i);
    }

    Graph g(false);
    Tensor h = encoder_forward(g, m, b);
    Tensor rh = encoder_forward(g, m, rb);
    const int hs = 8;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < hs; ++k)
            CHECK(std::abs(h.data()[i * hs + k] -
                           rh.data()[(3 - i) * hs + k]) <= 1e-12);
}

TEST_CASE("dropout is active only with a generator and is seed-stable") {
    EncoderModel m = EncoderModel::random_init(tiny_config(), 17);
    Batch b = tiny_batch();
    Graph g(false);
    Tensor plain = encoder_forward(g, m, b);

    ForwardOptions opts;
    opts.dropout = 0.5;
    Tensor no_rng = encoder_forward(g, m, b, opts);  // rng unset: inert knob
    CHECK(testutil::max_abs_diff(plain.data(), no_rng.data()) == 0.0);

    Rng r1(99);
    opts.rng = &r1;
    Tensor d1 = encoder_forward(g, m, b, opts);
    CHECK(testutil::max_abs_diff(plain.data(), d1.data()) > 1e-6);
    Rng r2(99);
    opts.rng = &r2;
    Tensor d2 = encoder_forward(g, m, b, opts);
    CHECK(testutil::max_abs_diff(d1.data(), d2.data()) == 0.0);
}

TEST_CASE("mlm_logits closed forms") {
    EncoderModel m = EncoderModel::random_init(tiny_config(), 21);
    Graph g(false);
    Tensor zero_hidden = Tensor::zeros({1, 3, 8});
    Tensor logits = mlm_logits(g, m, zero_hidden);
    REQUIRE(logits.shape() == std::vector<int>{1, 3, 11});
    for (double v : logits.data()) CHECK(v == 0.0);  // bias starts at zero

    for (int i = 0; i < 11; ++i) m.mlm_b.data()[i] = 0.25 * i;
    Tensor logits2 = mlm_logits(g, m, zero_hidden);
    for (int pos = 0; pos < 3; ++pos)
        for (int i = 0; i < 11; ++i)
            CHECK(logits2.data()[pos * 11 + i] == 0.25 * i);

    CHECK_THROWS_AS(mlm_logits(g, m, Tensor::zeros({1, 3, 7})), ShapeError);
}

TEST_CASE("seed-0 forward and logits checksums stay stable") {
    EncoderModel m = EncoderModel::random_init(tiny_config(), 0);
    Batch b = tiny_batch();
    Graph g(false);
    Tensor h = encoder_forward(g, m, b);
    Tensor logits = mlm_logits(g, m, h);
    const double hsum = order_checksum(h.data());
    const double lsum = order_checksum(logits.data());
    if (print_goldens()) {
        std::printf("GOLDEN hidden_checksum %.17g\n", hsum);
        std::printf("GOLDEN logits_checksum %.17g\n", lsum);
    }
    CHECK(hsum == doctest::Approx(kGoldenHiddenChecksum).epsilon(1e-12));
    CHECK(lsum == doctest::Approx(kGoldenLogitsChecksum).epsilon(1e-12));
}

TEST_CASE("student initialization copies every second block") {
    ModelConfig c = tiny_config();
    c.num_layers = 12;
    EncoderModel teacher = EncoderModel::random_init(c, 23);
    EncoderModel student = init_student_from_teacher(teacher);
    CHECK(student.config.num_layers == 6);
    ModelConfig expect = c;
    expect.num_layers = 6;
    CHECK(student.config == expect);
    REQUIRE(student.blocks.size() == 6);
    for (int j = 0; j < 6; ++j) {
        CHECK(student.blocks[j].wq.data() == teacher.blocks[2 * j].wq.data());
        CHECK(student.blocks[j].w2.data() == teacher.blocks[2 * j].w2.data());
        CHECK(student.blocks[j].ln2_bias.data() ==
              teacher.blocks[2 * j].ln2_bias.data());
    }
    CHECK(student.token_embeddings.data() == teacher.token_embeddings.data());
    CHECK(student.mlm_w.data() == teacher.mlm_w.data());

    // deep copies: no aliasing in either direction
    student.blocks[0].wq.data()[0] += 1.0;
    CHECK(student.blocks[0].wq.data()[0] != teacher.blocks[0].wq.data()[0]);
    teacher.mlm_w.data()[3] += 1.0;
    CHECK(student.mlm_w.data()[3] != teacher.mlm_w.data()[3]);
}

TEST_CASE("two-layer teacher gives one-layer student equal to block 0") {
    EncoderModel teacher = EncoderModel::random_init(tiny_config(), 29);
    EncoderModel student = init_student_from_teacher(teacher);
    REQUIRE(student.blocks.size() == 1);
    CHECK(student.blocks[0].wv.data() == teacher.blocks[0].wv.data());

    ForwardTrace trace;
    ForwardOptions opts;
    opts.trace = &trace;
    Graph g(false);
    encoder_forward(g, student, tiny_batch(), opts);
    CHECK(trace.blocks_executed == 1);  // half the teacher's two
}

TEST_CASE("odd teacher depth is rejected") {
    ModelConfig c = tiny_config();
    c.num_layers = 3;
    EncoderModel teacher = EncoderModel::random_init(c, 31);
    CHECK_THROWS_AS(init_student_from_teacher(teacher), ContractError);
}

TEST_CASE("checkpoint round-trip restores parameters and config exactly") {
    testutil::TempDir dir("enc-ckpt");
    EncoderModel m = EncoderModel::random_init(tiny_config(), 37);
    const std::string path = dir.file("model.ckpt");
    save_checkpoint(m, path);
    EncoderModel r = load_checkpoint(path);
    CHECK(r.config == m.config);
    auto mp = m.parameters();
    auto rp = r.parameters();
    REQUIRE(mp.size() == rp.size());
    for (size_t i = 0; i < mp.size(); ++i) CHECK(mp[i].data() == rp[i].data());
}

TEST_CASE("corrupt checkpoints are rejected") {
    testutil::TempDir dir("enc-ckpt-bad");
    EncoderModel m = EncoderModel::random_init(tiny_config(), 41);
    const std::string path = dir.file("model.ckpt");
    save_checkpoint(m, path);
    std::string bytes = testutil::slurp(path);

    // truncated
    std::ofstream(dir.file("trunc.ckpt"), std::ios::binary)
        .write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(dir.file("trunc.ckpt")), CheckpointError);

    // wrong magic
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream(dir.file("magic.ckpt"), std::ios::binary)
        .write(bad.data(), static_cast<std::streamsize>(bad.size()));
    CHECK_THROWS_AS(load_checkpoint(dir.file("magic.ckpt")), CheckpointError);

    // future version
    std::string vers = bytes;
    vers[8] = 2;
    std::ofstream(dir.file("vers.ckpt"), std::ios::binary)
        .write(vers.data(), static_cast<std::streamsize>(vers.size()));
    CHECK_THROWS_AS(load_checkpoint(dir.file("vers.ckpt")), CheckpointError);

    // trailing garbage
    std::string tail = bytes + "zzzz";
    std::ofstream(dir.file("tail.ckpt"), std::ios::binary)
        .write(tail.data(), static_cast<std::streamsize>(tail.size()));
    CHECK_THROWS_AS(load_checkpoint(dir.file("tail.ckpt")), CheckpointError);

    CHECK_THROWS_AS(load_checkpoint(dir.file("absent.ckpt")), IoError);
}

TEST_CASE("seed-0 checkpoint byte length is stable and matches the format") {
    testutil::TempDir dir("enc-ckpt-len");
    EncoderModel m = EncoderModel::random_init(tiny_config(), 0);
    const std::string path = dir.file("model.ckpt");
    save_checkpoint(m, path);
    const long actual = static_cast<long>(testutil::slurp(path).size());
    const long expected_from_format =
        8 + 4 + 4 + static_cast<long>(config_to_text(m.config).size()) + 8 +
        static_cast<long>(param_count(m)) * 8;
    CHECK(actual == expected_from_format);
    if (print_goldens()) std::printf("GOLDEN checkpoint_bytes %ld\n", actual);
    if (kGoldenCheckpointBytes != 0) CHECK(actual == kGoldenCheckpointBytes);
}

TEST_CASE("clone yields an independent equal model") {
    EncoderModel m = EncoderModel::random_init(tiny_config(), 43);
    EncoderModel c = m.clone();
    CHECK(c.config == m.config);
    CHECK(c.blocks[1].w1.data() == m.blocks[1].w1.data());
    c.blocks[1].w1.data()[0] += 5.0;
    CHECK(c.blocks[1].w1.data()[0] != m.blocks[1].w1.data()[0]);
}
