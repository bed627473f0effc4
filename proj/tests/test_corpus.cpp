#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "distil/corpus.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace distil;

namespace {

const std::string kFixtures = DISTIL_FIXTURE_DIR;

std::string repeated_words(int n, const char* stem = "w") {
    std::string s;
    for (int i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += stem + std::to_string(i);
    }
    return s;
}

std::string join_words(const std::vector<std::string>& chunks) {
    std::string all;
    for (const std::string& c : chunks) {
        for (const std::string& w : split_words(c)) {
            if (!all.empty()) all += ' ';
            all += w;
        }
    }
    return all;
}

Vocab tiny_vocab() {
    std::istringstream corpus("alpha alpha alpha beta beta gamma delta");
    return build_vocab(corpus, 11);
}

}  // namespace

TEST_CASE("lowercase and split_words basics") {
    CHECK(lowercase("AbC xYz.") == "abc xyz.");
    CHECK(split_words("  a\tbb  c \n") ==
          std::vector<std::string>{"a", "bb", "c"});
    CHECK(split_words("   ").empty());
    CHECK(split_words("").empty());
}

TEST_CASE("short sentences pass through the splitter unchanged") {
    std::string s = repeated_words(100);
    auto chunks = split_long_sentences(s, 400);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0] == s);
}

TEST_CASE("one mid-sentence period splits 450 words into 250 + 200") {
    std::vector<std::string> words;
    for (int i = 0; i < 450; ++i) {
        std::string w = "w" + std::to_string(i);
        if (i == 249) w += '.';
        words.push_back(w);
    }
    std::string s;
    for (const auto& w : words) {
        if (!s.empty()) s += ' ';
        s += w;
    }
    auto chunks = split_long_sentences(s, 400);
    REQUIRE(chunks.size() == 2);
    CHECK(split_words(chunks[0]).size() == 250);
    CHECK(split_words(chunks[1]).size() == 200);
    CHECK(join_words(chunks) == s);
}

TEST_CASE("a periodless 900-word sentence stays one oversized chunk") {
    std::string s = repeated_words(900);
    auto chunks = split_long_sentences(s, 400);
    REQUIRE(chunks.size() == 1);
    CHECK(split_words(chunks[0]).size() == 900);

    std::istringstream in(s);
    CorpusStats stats = corpus_stats(in, 400);
    CHECK(stats.sentence_count == 1);
    CHECK(stats.word_count == 900);
    CHECK(stats.over_limit_count == 1);
}

TEST_CASE("splitter fuzz: conservation and chunk-size discipline") {
    Rng rng(12345);
    for (int iter = 0; iter < 1000; ++iter) {
        const int n = rng.uniform_int(1, 1001);
        const double period_prob = rng.uniform() * 0.1;
        std::vector<std::string> words;
        std::string s;
        for (int i = 0; i < n; ++i) {
            std::string w = "t" + std::to_string(rng.uniform_int(0, 500));
            if (rng.uniform() < period_prob) w += '.';
            words.push_back(w);
            if (!s.empty()) s += ' ';
            s += w;
        }
        auto chunks = split_long_sentences(s, 400);
        CHECK(join_words(chunks) == s);  // no loss, no reorder
        for (const std::string& chunk : chunks) {
            auto cw = split_words(chunk);
            if (cw.size() > 400) {
                // oversized chunks must be unsplittable: no sentence-final
                // period before the last word
                for (size_t i = 0; i + 1 < cw.size(); ++i)
                    CHECK(cw[i].back() != '.');
            }
        }
    }
}

TEST_CASE("pipeline statistics match the generator ledger") {
    std::ifstream in(kFixtures + "/split_fuzz.txt");
    REQUIRE(in.good());
    CorpusStats got = corpus_stats(in, 400);
    CorpusStats want = load_stats(kFixtures + "/split_fuzz.ledger");
    CHECK(got == want);
}

TEST_CASE("corpus_stats closed forms") {
    std::istringstream two("a b\nc");
    CorpusStats s = corpus_stats(two);
    CHECK(s.sentence_count == 2);
    CHECK(s.word_count == 3);
    CHECK(s.over_limit_count == 0);

    std::istringstream empty("");
    CHECK(corpus_stats(empty) == CorpusStats{});
}

TEST_CASE("preprocess_corpus writes chunks and a faithful stats sidecar") {
    testutil::TempDir dir("corpus-pre");
    {
        std::ofstream out(dir.file("raw.txt"));
        out << repeated_words(100) << "\n\n";  // blank line is dropped
        std::vector<std::string> words;
        for (int i = 0; i < 450; ++i)
            words.push_back(i == 249 ? "x." : "x");
        for (size_t i = 0; i < words.size(); ++i)
            out << (i ? " " : "") << words[i];
        out << "\n";
    }
    CorpusStats stats =
        preprocess_corpus(dir.file("raw.txt"), dir.file("clean.txt"), 400);
    CHECK(stats.sentence_count == 3);  // 1 short + 2 chunks
    CHECK(stats.word_count == 550);
    CHECK(stats.over_limit_count == 0);

    // the cleaned file needs no further splitting and re-counts identically
    std::ifstream clean(dir.file("clean.txt"));
    CHECK(corpus_stats(clean, 400) == stats);

    save_stats(stats, dir.file("stats.txt"));
    CHECK(load_stats(dir.file("stats.txt")) == stats);

    CHECK_THROWS_AS(preprocess_corpus(dir.file("absent.txt"),
                                      dir.file("out.txt")),
                    IoError);
}

TEST_CASE("build_vocab ranks by frequency then lexicographically") {
    std::istringstream freq("a a b");
    Vocab v = build_vocab(freq, 7);
    REQUIRE(v.size() == 7);
    CHECK(v.tokens[0] == "[PAD]");
    CHECK(v.tokens[4] == "[MASK]");
    CHECK(v.ids.at("a") == 5);
    CHECK(v.ids.at("b") == 6);

    std::istringstream ties("b a");
    Vocab t = build_vocab(ties, 7);
    CHECK(t.ids.at("a") < t.ids.at("b"));

    std::istringstream cased("Foo foo FOO bar");
    Vocab c = build_vocab(cased, 7);
    CHECK(c.ids.at("foo") == 5);  // lowercased and merged
    CHECK(c.ids.at("bar") == 6);

    std::istringstream empty("\n \n");
    CHECK_THROWS_AS(build_vocab(empty, 7), ContractError);
    std::istringstream ok("a");
    CHECK_THROWS_AS(build_vocab(ok, 5), ContractError);
}

TEST_CASE("vocabulary truncates to target size in rank order") {
    std::istringstream corpus("most most most mid mid rare");
    Vocab v = build_vocab(corpus, 7);  // room for only two words
    REQUIRE(v.size() == 7);
    CHECK(v.ids.count("most") == 1);
    CHECK(v.ids.count("mid") == 1);
    CHECK(v.ids.count("rare") == 0);
    CHECK(v.id_or_unk("rare") == Vocab::kUnk);
}

TEST_CASE("zipf vocabulary matches the independent frequency oracle") {
    Vocab v = build_vocab_file(kFixtures + "/zipf_corpus.txt", 211);
    REQUIRE(v.size() == 211);
    std::ifstream top(kFixtures + "/zipf_top206.txt");
    REQUIRE(top.good());
    std::string word;
    int id = Vocab::kNumReserved;
    while (std::getline(top, word)) {
        CHECK(v.tokens[static_cast<size_t>(id)] == word);
        ++id;
    }
    CHECK(id == 211);
}

TEST_CASE("vocab file round-trip and validation") {
    testutil::TempDir dir("corpus-vocab");
    Vocab v = tiny_vocab();
    save_vocab(v, dir.file("vocab.txt"));
    Vocab r = load_vocab(dir.file("vocab.txt"));
    CHECK(r.tokens == v.tokens);
    CHECK(r.ids.at("alpha") == v.ids.at("alpha"));

    {
        std::ofstream bad(dir.file("bad.txt"));
        bad << "[PAD]\n[UNK]\nalpha\n";  // reserved set out of order
    }
    CHECK_THROWS_AS(load_vocab(dir.file("bad.txt")), DataError);
    {
        std::ofstream dup(dir.file("dup.txt"));
        dup << "[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\nx\nx\n";
    }
    CHECK_THROWS_AS(load_vocab(dir.file("dup.txt")), DataError);
    CHECK_THROWS_AS(load_vocab(dir.file("absent.txt")), IoError);
}

TEST_CASE("encode pads, truncates and keeps the trailing separator") {
    Vocab v = tiny_vocab();

    Encoded e = encode("", v, 6);
    CHECK(e.ids == std::vector<int>{Vocab::kCls, Vocab::kSep, 0, 0, 0, 0});
    CHECK(e.mask == std::vector<int>{1, 1, 0, 0, 0, 0});

    Encoded w3 = encode("alpha beta gamma", v, 8);
    CHECK(w3.ids[0] == Vocab::kCls);
    CHECK(w3.ids[4] == Vocab::kSep);
    CHECK(w3.mask == std::vector<int>{1, 1, 1, 1, 1, 0, 0, 0});

    Encoded longs = encode(repeated_words(100), v, 16);
    CHECK(longs.ids.size() == 16);
    CHECK(longs.ids[15] == Vocab::kSep);
    for (int m : longs.mask) CHECK(m == 1);

    CHECK(encode("ALPHA", v, 4).ids[1] == v.ids.at("alpha"));
    CHECK(encode("unheard", v, 4).ids[1] == Vocab::kUnk);
    CHECK_THROWS_AS(encode("x", v, 1), ContractError);
}

TEST_CASE("encode/decode word round-trip for in-vocab sentences") {
    Vocab v = tiny_vocab();
    const std::string sentence = "gamma alpha beta beta";
    Encoded e = encode(sentence, v, 10);
    CHECK(decode_words(e.ids, v) == sentence);
}

TEST_CASE("make_batch uses the tightest sequence length that fits") {
    Vocab v = tiny_vocab();
    Batch b = make_batch({"alpha", "beta gamma delta"}, v, 64);
    CHECK(b.batch_size() == 2);
    CHECK(b.seq_len() == 5);  // 3 words + [CLS] + [SEP]
    CHECK(b.token_ids.at(0, 0) == Vocab::kCls);
    CHECK(b.attention_mask.at(0, 3) == 0);  // "alpha" row is padded
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 5; ++c) {
            CHECK(b.mlm_labels.at(r, c) == kIgnoreLabel);
            CHECK(b.token_ids.at(r, c) < v.size());
        }

    Batch capped = make_batch({repeated_words(100)}, v, 16);
    CHECK(capped.seq_len() == 16);
}

TEST_CASE("mlm masking is deterministic, respects exclusions, labels targets") {
    Vocab v = tiny_vocab();
    std::vector<std::string> sents;
    for (int i = 0; i < 32; ++i)
        sents.push_back("alpha beta gamma delta alpha beta gamma delta");
    Batch base = make_batch(sents, v, 16);

    Batch m1 = mask_for_mlm(base, v, 0.15, 7);
    Batch m2 = mask_for_mlm(base, v, 0.15, 7);
    CHECK(m1.token_ids.v == m2.token_ids.v);
    CHECK(m1.mlm_labels.v == m2.mlm_labels.v);
    Batch m3 = mask_for_mlm(base, v, 0.15, 8);
    CHECK(m1.mlm_labels.v != m3.mlm_labels.v);

    int selected = 0, masked = 0, changed = 0;
    for (int r = 0; r < base.token_ids.rows; ++r)
        for (int c = 0; c < base.token_ids.cols; ++c) {
            const int orig = base.token_ids.at(r, c);
            const int now = m1.token_ids.at(r, c);
            const int label = m1.mlm_labels.at(r, c);
            if (Vocab::is_reserved(orig) || base.attention_mask.at(r, c) == 0) {
                CHECK(label == kIgnoreLabel);  // hard exclusions
                CHECK(now == orig);
                continue;
            }
            if (label == kIgnoreLabel) {
                CHECK(now == orig);  // unselected positions untouched
            } else {
                CHECK(label == orig);  // label holds the original id
                CHECK(label != kIgnoreLabel);
                CHECK(base.attention_mask.at(r, c) == 1);
                ++selected;
                if (now == Vocab::kMask) ++masked;
                if (now != orig) ++changed;
                CHECK_FALSE(now == Vocab::kPad);
                CHECK(now < v.size());
            }
        }
    CHECK(selected > 0);
    CHECK(masked <= changed + selected);

    CHECK_THROWS_AS(mask_for_mlm(base, v, 0.0, 1), ContractError);
    CHECK_THROWS_AS(mask_for_mlm(base, v, 1.0, 1), ContractError);
}

TEST_CASE("vanishing mask probability leaves the batch unchanged") {
    Vocab v = tiny_vocab();
    Batch base = make_batch({"alpha beta gamma delta alpha beta"}, v, 16);
    Batch out = mask_for_mlm(base, v, 1e-15, 0);
    CHECK(out.token_ids.v == base.token_ids.v);
    for (int x : out.mlm_labels.v) CHECK(x == kIgnoreLabel);
}

TEST_CASE("selection frequency concentrates near the mask probability") {
    Vocab v = tiny_vocab();
    std::vector<std::string> sents;
    for (int i = 0; i < 1000; ++i) {
        std::string s;
        for (int j = 0; j < 100; ++j) s += j ? " alpha" : "alpha";
        sents.push_back(s);
    }
    Batch base = make_batch(sents, v, 102);  // 100k maskable positions
    Batch m = mask_for_mlm(base, v, 0.15, 0);
    int64_t selected = 0, maskable = 0, to_mask_token = 0, kept = 0;
    for (int r = 0; r < base.token_ids.rows; ++r)
        for (int c = 0; c < base.token_ids.cols; ++c) {
            if (Vocab::is_reserved(base.token_ids.at(r, c))) continue;
            ++maskable;
            if (m.mlm_labels.at(r, c) == kIgnoreLabel) continue;
            ++selected;
            if (m.token_ids.at(r, c) == Vocab::kMask) ++to_mask_token;
            if (m.token_ids.at(r, c) == base.token_ids.at(r, c)) ++kept;
        }
    CHECK(maskable == 100000);
    const double frac = static_cast<double>(selected) / maskable;
    CHECK(frac >= 0.14);
    CHECK(frac <= 0.16);
    // 80/10/10 replacement split, within loose binomial bounds
    const double mask_frac = static_cast<double>(to_mask_token) / selected;
    const double keep_frac = static_cast<double>(kept) / selected;
    CHECK(mask_frac >= 0.76);
    CHECK(mask_frac <= 0.84);
    CHECK(keep_frac >= 0.07);
    CHECK(keep_frac <= 0.13);
}

TEST_CASE("read_corpus_lines keeps only lines holding words") {
    testutil::TempDir dir("corpus-lines");
    {
        std::ofstream out(dir.file("c.txt"));
        out << "one two\n\n   \nthree\n";
    }
    auto lines = read_corpus_lines(dir.file("c.txt"));
    CHECK(lines == std::vector<std::string>{"one two", "three"});
    CHECK_THROWS_AS(read_corpus_lines(dir.file("absent.txt")), IoError);
}
