#include "distil/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace distil {

const std::vector<std::string>& Vocab::reserved_tokens() {
    static const std::vector<std::string> kReserved = {
        "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
    return kReserved;
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        c = static_cast<char>(
            std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split_words(const std::string& line) {
    std::vector<std::string> out;
    size_t i = 0;
    const size_t n = line.size();
    auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n';
    };
    while (i < n) {
        while (i < n && is_space(line[i])) ++i;
        size_t start = i;
        while (i < n && !is_space(line[i])) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::vector<std::string> split_long_sentences(const std::string& text,
                                              int word_limit) {
    if (word_limit < 1)
        throw ContractError("split_long_sentences: word_limit must be >= 1");
    std::vector<std::string> words = split_words(text);
    if (static_cast<int>(words.size()) <= word_limit) return {text};

    // period-delimited segments, as [begin, end) word index ranges
    std::vector<std::pair<size_t, size_t>> segments;
    size_t seg_start = 0;
    for (size_t i = 0; i < words.size(); ++i) {
        if (words[i].back() == '.') {
            segments.emplace_back(seg_start, i + 1);
            seg_start = i + 1;
        }
    }
    if (seg_start < words.size()) segments.emplace_back(seg_start, words.size());

    auto join = [&](size_t b, size_t e) {
        std::string s = words[b];
        for (size_t i = b + 1; i < e; ++i) {
            s += ' ';
            s += words[i];
        }
        return s;
    };

    std::vector<std::string> chunks;
    size_t chunk_begin = segments.front().first;
    size_t chunk_end = chunk_begin;
    for (const auto& [b, e] : segments) {
        const size_t seg_len = e - b;
        const size_t chunk_len = chunk_end - chunk_begin;
        if (chunk_len > 0 &&
            chunk_len + seg_len > static_cast<size_t>(word_limit)) {
            chunks.push_back(join(chunk_begin, chunk_end));
            chunk_begin = b;
        }
        chunk_end = e;
    }
    if (chunk_end > chunk_begin) chunks.push_back(join(chunk_begin, chunk_end));
    return chunks;
}

CorpusStats corpus_stats(std::istream& in, int word_limit) {
    CorpusStats stats;
    std::string line;
    while (std::getline(in, line)) {
        if (split_words(line).empty()) continue;
        for (const std::string& chunk : split_long_sentences(line, word_limit)) {
            const auto n = static_cast<int64_t>(split_words(chunk).size());
            stats.sentence_count += 1;
            stats.word_count += n;
            if (n > word_limit) stats.over_limit_count += 1;
        }
    }
    return stats;
}

CorpusStats preprocess_corpus(const std::string& in_path,
                              const std::string& out_path, int word_limit) {
    std::ifstream in(in_path);
    if (!in) throw IoError("cannot read " + in_path);
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write " + out_path);
    CorpusStats stats;
    std::string line;
    while (std::getline(in, line)) {
        if (split_words(line).empty()) continue;
        for (const std::string& chunk : split_long_sentences(line, word_limit)) {
            const auto n = static_cast<int64_t>(split_words(chunk).size());
            stats.sentence_count += 1;
            stats.word_count += n;
            if (n > word_limit) stats.over_limit_count += 1;
            out << chunk << '\n';
        }
    }
    if (!out) throw IoError("write failed for " + out_path);
    return stats;
}

void save_stats(const CorpusStats& stats, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "sentences: " << stats.sentence_count << '\n'
        << "words: " << stats.word_count << '\n'
        << "over_limit: " << stats.over_limit_count << '\n';
}

CorpusStats load_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    CorpusStats stats;
    std::string line;
    while (std::getline(in, line)) {
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw DataError("stats file: bad line '" + line + "'");
        const std::string key = line.substr(0, colon);
        const int64_t value = std::stoll(line.substr(colon + 1));
        if (key == "sentences") stats.sentence_count = value;
        else if (key == "words") stats.word_count = value;
        else if (key == "over_limit") stats.over_limit_count = value;
        else throw DataError("stats file: unknown key '" + key + "'");
    }
    return stats;
}

Vocab build_vocab(std::istream& in, int target_size) {
    if (target_size <= Vocab::kNumReserved)
        throw ContractError("build_vocab: target_size must exceed " +
                            std::to_string(Vocab::kNumReserved) +
                            " reserved tokens");
    std::unordered_map<std::string, int64_t> counts;
    std::string line;
    while (std::getline(in, line))
        for (const std::string& w : split_words(line)) ++counts[lowercase(w)];
    if (counts.empty()) throw ContractError("build_vocab: empty corpus");

    std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(),
                                                        counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocab v;
    v.tokens = Vocab::reserved_tokens();
    const size_t want = static_cast<size_t>(target_size - Vocab::kNumReserved);
    for (size_t i = 0; i < ranked.size() && i < want; ++i)
        v.tokens.push_back(ranked[i].first);
    for (int i = 0; i < v.size(); ++i) v.ids[v.tokens[static_cast<size_t>(i)]] = i;
    return v;
}

Vocab build_vocab_file(const std::string& path, int target_size) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    return build_vocab(in, target_size);
}

void save_vocab(const Vocab& vocab, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (const std::string& t : vocab.tokens) out << t << '\n';
}

Vocab load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    Vocab v;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) throw DataError("vocab file: empty line in " + path);
        if (v.ids.count(line))
            throw DataError("vocab file: duplicate token '" + line + "'");
        v.ids[line] = v.size();
        v.tokens.push_back(line);
    }
    const auto& reserved = Vocab::reserved_tokens();
    if (v.tokens.size() < reserved.size())
        throw DataError("vocab file: fewer tokens than the reserved set");
    for (size_t i = 0; i < reserved.size(); ++i)
        if (v.tokens[i] != reserved[i])
            throw DataError("vocab file: id " + std::to_string(i) +
                            " must be " + reserved[i] + ", got '" +
                            v.tokens[i] + "'");
    return v;
}

Encoded encode(const std::string& sentence, const Vocab& vocab, int seq_len) {
    if (seq_len < 2)
        throw ContractError("encode: seq_len must fit [CLS] and [SEP]");
    std::vector<std::string> words = split_words(lowercase(sentence));
    const size_t max_words = static_cast<size_t>(seq_len) - 2;
    if (words.size() > max_words) words.resize(max_words);

    Encoded e;
    e.ids.reserve(static_cast<size_t>(seq_len));
    e.ids.push_back(Vocab::kCls);
    for (const std::string& w : words) e.ids.push_back(vocab.id_or_unk(w));
    e.ids.push_back(Vocab::kSep);
    e.mask.assign(e.ids.size(), 1);
    e.ids.resize(static_cast<size_t>(seq_len), Vocab::kPad);
    e.mask.resize(static_cast<size_t>(seq_len), 0);
    return e;
}

std::string decode_words(const std::vector<int>& ids, const Vocab& vocab) {
    std::string out;
    for (int id : ids) {
        if (Vocab::is_reserved(id)) continue;
        if (id < 0 || id >= vocab.size())
            throw DataError("decode: token id " + std::to_string(id) +
                            " out of range [0," +
                            std::to_string(vocab.size()) + ")");
        if (!out.empty()) out += ' ';
        out += vocab.tokens[static_cast<size_t>(id)];
    }
    return out;
}

Batch make_batch(const std::vector<std::string>& sentences, const Vocab& vocab,
                 int max_seq_len) {
    if (sentences.empty()) throw ContractError("make_batch: no sentences");
    if (max_seq_len < 2)
        throw ContractError("make_batch: max_seq_len must be >= 2");
    size_t longest = 0;
    for (const std::string& s : sentences)
        longest = std::max(longest, split_words(s).size());
    const int seq_len = static_cast<int>(
        std::min<size_t>(longest + 2, static_cast<size_t>(max_seq_len)));

    Batch b;
    const int n = static_cast<int>(sentences.size());
    b.token_ids = IntMat(n, seq_len);
    b.attention_mask = IntMat(n, seq_len);
    b.mlm_labels = IntMat(n, seq_len, kIgnoreLabel);
    for (int r = 0; r < n; ++r) {
        Encoded e = encode(sentences[static_cast<size_t>(r)], vocab, seq_len);
        for (int c = 0; c < seq_len; ++c) {
            b.token_ids.at(r, c) = e.ids[static_cast<size_t>(c)];
            b.attention_mask.at(r, c) = e.mask[static_cast<size_t>(c)];
        }
    }
    return b;
}

Batch mask_for_mlm(const Batch& batch, const Vocab& vocab, double mask_prob,
                   uint64_t rng_seed) {
    if (!(mask_prob > 0.0 && mask_prob < 1.0))
        throw ContractError("mask_for_mlm: mask_prob must be in (0, 1)");
    if (vocab.size() <= Vocab::kNumReserved)
        throw ContractError("mask_for_mlm: vocabulary has no real words");
    Batch out;
    out.token_ids = batch.token_ids;
    out.attention_mask = batch.attention_mask;
    out.mlm_labels =
        IntMat(batch.token_ids.rows, batch.token_ids.cols, kIgnoreLabel);

    Rng rng(rng_seed);
    for (int r = 0; r < batch.token_ids.rows; ++r) {
        for (int c = 0; c < batch.token_ids.cols; ++c) {
            const int id = batch.token_ids.at(r, c);
            if (batch.attention_mask.at(r, c) == 0 || Vocab::is_reserved(id))
                continue;
            if (rng.uniform() >= mask_prob) continue;
            out.mlm_labels.at(r, c) = id;
            const double action = rng.uniform();
            if (action < 0.8) {
                out.token_ids.at(r, c) = Vocab::kMask;
            } else if (action < 0.9) {
                out.token_ids.at(r, c) =
                    rng.uniform_int(Vocab::kNumReserved, vocab.size());
            }  // else: keep the original token
        }
    }
    return out;
}

std::vector<std::string> read_corpus_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
        if (!split_words(line).empty()) out.push_back(line);
    return out;
}

}  // namespace distil
