#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cqkit {

using TokenList = std::vector<std::string>;

/// Lowercases, maps Unicode punctuation and symbols to separators and splits
/// on whitespace. With `drop_stopwords`, tokens from the bundled English
/// stopword list are removed. Invalid UTF-8 bytes are treated as separators.
TokenList normalize(std::string_view text, bool drop_stopwords = false);

/// normalize() followed by joining with single spaces; the canonical form used
/// whenever two strings are compared as token sequences.
std::string normalized_key(std::string_view text);

std::string join_tokens(std::span<const std::string> tokens);

bool is_stopword(std::string_view token);

/// The bundled list, in file order (data/stopwords_en.txt).
std::span<const std::string_view> stopword_list();

/// True when `needle` occurs as a contiguous run inside `haystack`.
/// An empty needle never matches.
bool contains_sequence(std::span<const std::string> haystack,
                       std::span<const std::string> needle);

} // namespace cqkit
