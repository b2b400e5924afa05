#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ctxbrowse/document.hpp"

namespace ctxbrowse {

inline constexpr std::size_t kMinTokenLength = 2;

/// Lowercased, NFC, whitespace-collapsed and trimmed form of a
/// controlled-vocabulary value (author, keyword, category, journal).
std::string normalize_value(std::string_view raw);

/// Lowercased NFC word tokens of free text. Tokens shorter than
/// kMinTokenLength code points and non-word segments are dropped.
std::vector<std::string> tokenize(std::string_view raw);

/// Field-aware normalization: exact-value kinds produce at most one term,
/// free-text kinds produce the token list. Empty input gives empty output.
std::vector<std::string> normalize_term(std::string_view raw, FieldKind kind);

/// Number of Unicode code points in a UTF-8 string.
std::size_t codepoint_length(std::string_view utf8);

}  // namespace ctxbrowse
