#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctxbrowse {

/// Metadata fields that are indexed. Title and abstract are free text and
/// tokenized; the rest are matched as whole normalized values.
enum class FieldKind : std::uint8_t {
  title,
  abstract,
  author,
  keyword,
  keyword_free,
  category,
  journal,
};

inline constexpr std::size_t kFieldCount = 7;

inline constexpr std::array<FieldKind, kFieldCount> kAllFields = {
    FieldKind::title,        FieldKind::abstract, FieldKind::author,
    FieldKind::keyword,      FieldKind::keyword_free,
    FieldKind::category,     FieldKind::journal,
};

constexpr bool is_free_text(FieldKind kind) {
  return kind == FieldKind::title || kind == FieldKind::abstract;
}

constexpr std::size_t field_slot(FieldKind kind) {
  return static_cast<std::size_t>(kind);
}

std::string_view field_name(FieldKind kind);
std::optional<FieldKind> parse_field(std::string_view name);

struct DocumentRecord {
  std::string doc_id;
  std::string title;
  std::map<std::string, std::string> abstracts;  // language code -> text
  std::vector<std::string> authors;
  std::vector<std::string> keywords;
  std::vector<std::string> keywords_free;
  std::vector<std::string> categories;
  std::optional<std::string> journal;
  std::optional<int> year;
  std::optional<std::string> language;
};

inline constexpr int kMinYear = 1400;
inline constexpr int kMaxYear = 2100;

/// Raw (display form) values a record carries for one field. Free-text
/// fields yield their text blocks, abstracts in language-code order.
std::vector<std::string> field_values(const DocumentRecord& doc,
                                      FieldKind kind);

}  // namespace ctxbrowse
