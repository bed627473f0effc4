#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

#include "distil/batch.hpp"
#include "distil/error.hpp"
#include "distil/rng.hpp"

namespace distil {

// Word-level vocabulary with five reserved control tokens at fixed ids.
struct Vocab {
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;
    static constexpr int kSep = 3;
    static constexpr int kMask = 4;
    static constexpr int kNumReserved = 5;

    std::vector<std::string> tokens;             // id -> token
    std::unordered_map<std::string, int> ids;    // token -> id

    int size() const { return static_cast<int>(tokens.size()); }
    int id_or_unk(const std::string& token) const {
        auto it = ids.find(token);
        return it == ids.end() ? kUnk : it->second;
    }
    static bool is_reserved(int id) { return id >= 0 && id < kNumReserved; }
    static const std::vector<std::string>& reserved_tokens();
};

// Lowercases ASCII letters; other bytes pass through untouched.
std::string lowercase(const std::string& s);

// Whitespace tokenization (space, tab, CR, LF).
std::vector<std::string> split_words(const std::string& line);

// Splits an over-long sentence at sentence-final periods (a word ending in
// '.'), greedily packing whole period-delimited segments into chunks of at
// most word_limit words. A single segment longer than the limit is kept
// intact as one oversized chunk. Word sequence is always preserved.
std::vector<std::string> split_long_sentences(const std::string& text,
                                              int word_limit = 400);

struct CorpusStats {
    int64_t sentence_count = 0;
    int64_t word_count = 0;
    int64_t over_limit_count = 0;

    bool operator==(const CorpusStats&) const = default;
};

// Counts post-splitting: each emitted chunk is one sentence. Lines with no
// words are skipped.
CorpusStats corpus_stats(std::istream& in, int word_limit = 400);

// Reads one sentence per line, splits over-long ones, writes one chunk per
// line to out_path, and returns the resulting stats.
CorpusStats preprocess_corpus(const std::string& in_path,
                              const std::string& out_path,
                              int word_limit = 400);

void save_stats(const CorpusStats& stats, const std::string& path);
CorpusStats load_stats(const std::string& path);

// Frequency-ranked lowercased word vocabulary; reserved tokens first, then
// words by descending count with lexicographic tie-break, truncated to
// target_size entries in total.
Vocab build_vocab(std::istream& in, int target_size);
Vocab build_vocab_file(const std::string& path, int target_size);

// One token per line; id = line number.
void save_vocab(const Vocab& vocab, const std::string& path);
Vocab load_vocab(const std::string& path);

struct Encoded {
    std::vector<int> ids;
    std::vector<int> mask;
};

// [CLS] + lowercased word ids + [SEP], truncated so the result never
// exceeds seq_len and always ends with [SEP] before padding; padded with
// [PAD] / mask 0 up to seq_len.
Encoded encode(const std::string& sentence, const Vocab& vocab, int seq_len);

// Joins the non-reserved tokens back into a space-separated word string.
std::string decode_words(const std::vector<int>& ids, const Vocab& vocab);

// Encodes a group of sentences into one batch. The sequence dimension is
// the smallest length that fits the longest sentence, capped at
// max_seq_len. mlm_labels start as all ignore-markers.
Batch make_batch(const std::vector<std::string>& sentences,
                 const Vocab& vocab, int max_seq_len);

// BERT-style masking: every non-reserved position is selected with
// probability mask_prob; a selected position keeps its original id as the
// label and its input becomes [MASK] (80%), a random non-reserved id (10%),
// or stays unchanged (10%). Deterministic in rng_seed.
Batch mask_for_mlm(const Batch& batch, const Vocab& vocab,
                   double mask_prob, uint64_t rng_seed);

// All lines of a text file that contain at least one word.
std::vector<std::string> read_corpus_lines(const std::string& path);

}  // namespace distil
