#include "chartqa/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace chartqa {

namespace {

const char* kSpecialStrings[kNumSpecialTokens] = {
    "<pad>", "<bos>", "<eos>", "<img>", "</img>", "<tab>", "</tab>", "<q>", "<ans>"};

std::string char_name(char c) {
    if (c >= 33 && c <= 126) return std::string("'") + c + "'";
    return "code " + std::to_string(static_cast<int>(static_cast<unsigned char>(c)));
}

}  // namespace

bool Tokenizer::supported_char(char c) {
    return c == '\n' || (c >= 32 && c <= 126);
}

Tokenizer::Tokenizer() {
    for (const char* s : kSpecialStrings) vocab_.emplace_back(s);
    for (int c = 32; c <= 126; ++c) vocab_.emplace_back(1, static_cast<char>(c));
    vocab_.emplace_back(1, '\n');
    rebuild_index();
}

Tokenizer Tokenizer::build(const std::vector<std::string>& corpus, int max_merges) {
    if (max_merges < 0) throw ConfigError("merge budget must be non-negative");
    Tokenizer tok;

    // Word counts over whitespace-delimited runs.
    std::map<std::string, long long> counts;
    for (const std::string& text : corpus) {
        size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            size_t start = i;
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            if (i - start >= 2) counts[text.substr(start, i - start)] += 1;
        }
    }

    struct Candidate {
        std::string word;
        long long score;
    };
    std::vector<Candidate> cands;
    for (const auto& [word, count] : counts) {
        bool supported = std::all_of(word.begin(), word.end(), supported_char);
        if (!supported) continue;
        if (tok.index_.count(word)) continue;  // guards against control strings
        cands.push_back({word, count * static_cast<long long>(word.size() - 1)});
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.word < b.word;
    });
    size_t keep = std::min<size_t>(cands.size(), static_cast<size_t>(max_merges));
    for (size_t i = 0; i < keep; ++i) tok.vocab_.push_back(cands[i].word);
    tok.rebuild_index();
    return tok;
}

Tokenizer Tokenizer::from_vocabulary(const std::vector<std::string>& vocab) {
    if (vocab.size() < static_cast<size_t>(kNumSpecialTokens) + 96)
        throw CorruptionError("vocabulary list is too short to hold the base units");
    for (int i = 0; i < kNumSpecialTokens; ++i) {
        if (vocab[static_cast<size_t>(i)] != kSpecialStrings[i])
            throw CorruptionError("vocabulary slot " + std::to_string(i) +
                                  " holds \"" + vocab[static_cast<size_t>(i)] +
                                  "\", expected control token \"" + kSpecialStrings[i] + "\"");
    }
    Tokenizer base;
    for (size_t i = 0; i < base.vocab_.size(); ++i) {
        if (vocab[i] != base.vocab_[i])
            throw CorruptionError("vocabulary slot " + std::to_string(i) +
                                  " does not match the base character table");
    }
    Tokenizer tok;
    tok.vocab_ = vocab;
    for (size_t i = base.vocab_.size(); i < vocab.size(); ++i) {
        if (vocab[i].size() < 2)
            throw CorruptionError("merged unit \"" + vocab[i] + "\" is shorter than two characters");
        if (!std::all_of(vocab[i].begin(), vocab[i].end(), supported_char))
            throw CorruptionError("merged unit at slot " + std::to_string(i) +
                                  " contains an unsupported character");
    }
    tok.rebuild_index();
    return tok;
}

void Tokenizer::rebuild_index() {
    index_.clear();
    merges_by_length_.clear();
    for (size_t i = 0; i < vocab_.size(); ++i) {
        auto [it, inserted] = index_.emplace(vocab_[i], static_cast<int>(i));
        if (!inserted)
            throw CorruptionError("duplicate vocabulary entry \"" + vocab_[i] + "\"");
        if (i >= static_cast<size_t>(kNumSpecialTokens) && vocab_[i].size() >= 2)
            merges_by_length_.push_back(static_cast<int>(i));
    }
    std::sort(merges_by_length_.begin(), merges_by_length_.end(), [this](int a, int b) {
        return vocab_[static_cast<size_t>(a)].size() > vocab_[static_cast<size_t>(b)].size();
    });
}

std::vector<int> Tokenizer::tokenize(const std::string& s) const {
    std::vector<int> ids;
    size_t pos = 0;
    while (pos < s.size()) {
        if (!supported_char(s[pos]))
            throw InputError("unsupported character " + char_name(s[pos]) +
                             " at offset " + std::to_string(pos));
        int best = -1;
        for (int id : merges_by_length_) {
            const std::string& unit = vocab_[static_cast<size_t>(id)];
            if (unit.size() > s.size() - pos) continue;
            if (s.compare(pos, unit.size(), unit) == 0) {
                best = id;
                break;  // sorted by length descending, first hit is longest
            }
        }
        if (best >= 0) {
            ids.push_back(best);
            pos += vocab_[static_cast<size_t>(best)].size();
        } else {
            auto it = index_.find(std::string(1, s[pos]));
            ids.push_back(it->second);
            ++pos;
        }
    }
    return ids;
}

std::string Tokenizer::detokenize(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) {
        if (id < 0 || id >= vocab_size())
            throw InputError("token id " + std::to_string(id) + " is outside the vocabulary");
        if (is_special(id)) continue;
        out += vocab_[static_cast<size_t>(id)];
    }
    return out;
}

const std::string& Tokenizer::entry(int id) const {
    if (id < 0 || id >= vocab_size())
        throw InputError("token id " + std::to_string(id) + " is outside the vocabulary");
    return vocab_[static_cast<size_t>(id)];
}

}  // namespace chartqa
