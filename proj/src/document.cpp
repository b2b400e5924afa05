#include "ctxbrowse/document.hpp"

namespace ctxbrowse {

std::string_view field_name(FieldKind kind) {
  switch (kind) {
    case FieldKind::title: return "title";
    case FieldKind::abstract: return "abstract";
    case FieldKind::author: return "author";
    case FieldKind::keyword: return "keyword";
    case FieldKind::keyword_free: return "keyword_free";
    case FieldKind::category: return "category";
    case FieldKind::journal: return "journal";
  }
  return "unknown";
}

std::optional<FieldKind> parse_field(std::string_view name) {
  for (const FieldKind kind : kAllFields) {
    if (field_name(kind) == name) return kind;
  }
  return std::nullopt;
}

std::vector<std::string> field_values(const DocumentRecord& doc,
                                      FieldKind kind) {
  switch (kind) {
    case FieldKind::title:
      if (doc.title.empty()) return {};
      return {doc.title};
    case FieldKind::abstract: {
      std::vector<std::string> out;
      for (const auto& [lang, text] : doc.abstracts) out.push_back(text);
      return out;
    }
    case FieldKind::author: return doc.authors;
    case FieldKind::keyword: return doc.keywords;
    case FieldKind::keyword_free: return doc.keywords_free;
    case FieldKind::category: return doc.categories;
    case FieldKind::journal:
      if (!doc.journal) return {};
      return {*doc.journal};
  }
  return {};
}

}  // namespace ctxbrowse
