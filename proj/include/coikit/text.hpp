#pragma once

// Small text helpers shared by the stub clients, the reward rules and the
// question filter. All of them are byte-deterministic.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace coikit::text {

/// Decodes UTF-8 into code points. Invalid bytes decode to themselves.
std::u32string decode_utf8(std::string_view s);

/// Set of character trigrams (code points). Texts shorter than three
/// characters contribute the whole text as their only gram.
std::vector<std::u32string> char_trigrams(std::string_view s);

struct JaccardRatio {
  std::size_t intersection = 0;
  std::size_t union_size = 0;
  double value() const {
    return union_size == 0 ? 1.0
                           : static_cast<double>(intersection) /
                                 static_cast<double>(union_size);
  }
};

/// Character-trigram Jaccard similarity as an exact ratio.
JaccardRatio trigram_jaccard(std::string_view a, std::string_view b);

std::vector<std::string> split_whitespace(std::string_view s);
std::string ascii_lower(std::string_view s);
std::string_view trim(std::string_view s);

/// Lowercased word tokens: runs of ASCII alphanumerics and apostrophes;
/// every non-ASCII code point becomes its own token.
std::vector<std::string> word_tokens(std::string_view s);

/// True when `phrase` (already tokenized) occurs as a contiguous run.
bool contains_phrase(const std::vector<std::string>& tokens,
                     const std::vector<std::string>& phrase);

/// ASCII '?' or fullwidth U+FF1F.
bool has_question_mark(std::string_view s);

}  // namespace coikit::text
