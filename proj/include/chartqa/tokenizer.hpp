#ifndef CHARTQA_TOKENIZER_HPP_
#define CHARTQA_TOKENIZER_HPP_

#include <string>
#include <unordered_map>
#include <vector>

#include "chartqa/common.hpp"

namespace chartqa {

// Ids of the control tokens. These occupy the first vocabulary slots in this
// exact order.
struct SpecialIds {
    int pad = 0;
    int bos = 1;
    int eos = 2;
    int img_start = 3;
    int img_end = 4;
    int tab_start = 5;
    int tab_end = 6;
    int q_start = 7;
    int ans = 8;
};

constexpr int kNumSpecialTokens = 9;

// Character-level tokenizer over printable ASCII plus newline, with an
// optional table of merged multi-character units mined from a corpus.
// Control tokens never participate in text matching: a literal "<pad>" in
// content text tokenizes as five characters, so control ids can only be
// produced by sequence assembly, never by user text.
class Tokenizer {
  public:
    // Base vocabulary only (specials + characters).
    Tokenizer();

    // Mines merge candidates from whitespace-delimited words in `corpus`,
    // scored by count * (length - 1) descending (characters saved), ties
    // broken lexicographically, keeping at most `max_merges`.
    static Tokenizer build(const std::vector<std::string>& corpus, int max_merges);

    // Reconstructs a tokenizer from a serialized vocabulary list. The list
    // must start with the nine control tokens and contain every base
    // character unit.
    static Tokenizer from_vocabulary(const std::vector<std::string>& vocab);

    // Greedy longest-match over content entries. Unsupported characters
    // raise InputError naming the character.
    std::vector<int> tokenize(const std::string& s) const;

    // Concatenates content entries; control ids are dropped.
    std::string detokenize(const std::vector<int>& ids) const;

    const std::vector<std::string>& vocabulary() const { return vocab_; }
    int vocab_size() const { return static_cast<int>(vocab_.size()); }
    SpecialIds specials() const { return SpecialIds{}; }
    bool is_special(int id) const { return id >= 0 && id < kNumSpecialTokens; }
    const std::string& entry(int id) const;

    static bool supported_char(char c);

  private:
    void rebuild_index();

    std::vector<std::string> vocab_;
    std::unordered_map<std::string, int> index_;
    // Content entries of length >= 2, sorted by length descending, so the
    // first match at a position is the longest.
    std::vector<int> merges_by_length_;
};

}  // namespace chartqa

#endif  // CHARTQA_TOKENIZER_HPP_
