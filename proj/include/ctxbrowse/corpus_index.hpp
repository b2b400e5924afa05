#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctxbrowse/document.hpp"

namespace ctxbrowse {

/// Dense document number. Ordinals follow ascending doc_id order, so a
/// postings list sorted by ordinal is also sorted by doc_id.
using DocOrdinal = std::uint32_t;

struct Posting {
  DocOrdinal doc;
  std::uint32_t tf;

  friend bool operator==(const Posting&, const Posting&) = default;
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownDocument : public std::out_of_range {
 public:
  explicit UnknownDocument(std::string_view doc_id)
      : std::out_of_range("unknown document: " + std::string(doc_id)) {}
};

/// Inverse document frequency used throughout: 1 + ln(N / (1 + df)).
double idf_value(std::size_t doc_count, std::size_t df);

/// Immutable field-aware inverted index. Safe to share between threads
/// once built.
class CorpusIndex {
 public:
  CorpusIndex() = default;

  /// Builds the index from normalized records. Throws IngestError on a
  /// duplicate or empty doc_id.
  static CorpusIndex build(std::vector<DocumentRecord> docs);

  std::size_t doc_count() const { return docs_.size(); }

  const std::vector<DocumentRecord>& documents() const { return docs_; }
  const DocumentRecord& document(DocOrdinal ord) const { return docs_[ord]; }
  const DocumentRecord& document(std::string_view doc_id) const;
  const DocumentRecord* find(std::string_view doc_id) const;
  std::optional<DocOrdinal> ordinal(std::string_view doc_id) const;

  std::span<const Posting> postings(FieldKind field,
                                    std::string_view term) const;
  std::size_t df(FieldKind field, std::string_view term) const;
  double idf(FieldKind field, std::string_view term) const;
  std::uint32_t tf(FieldKind field, std::string_view term,
                   DocOrdinal doc) const;

  /// tf × idf of a normalized term in one field of one document; 0 when
  /// the term does not occur there. Throws UnknownDocument.
  double tf_idf(std::string_view term, FieldKind field,
                std::string_view doc_id) const;

  /// Number of distinct terms in a field.
  std::size_t term_count(FieldKind field) const;
  std::size_t posting_count() const;

  /// Visits every (term, postings) pair of a field in unspecified order.
  template <typename Visitor>
  void for_each_term(FieldKind field, Visitor&& visit) const {
    for (const auto& [term, list] : postings_[field_slot(field)]) {
      visit(std::string_view(term), std::span<const Posting>(list));
    }
  }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  using PostingMap = std::unordered_map<std::string, std::vector<Posting>,
                                        StringHash, std::equal_to<>>;

  std::vector<DocumentRecord> docs_;
  std::unordered_map<std::string, DocOrdinal, StringHash, std::equal_to<>>
      ordinals_;
  std::array<PostingMap, kFieldCount> postings_;
};

struct IngestDiagnostic {
  std::size_t line;
  std::string message;
};

struct IngestResult {
  CorpusIndex index;
  std::vector<IngestDiagnostic> diagnostics;
};

/// Deduplicates list fields by normalized value (first spelling wins) and
/// drops empty entries.
DocumentRecord normalize_record(DocumentRecord doc);

/// Reads the line-delimited corpus format. Records without a usable id
/// (or otherwise invalid) are skipped with a diagnostic; a duplicate id is
/// fatal and reported with both line numbers.
IngestResult ingest_corpus(std::istream& source);
IngestResult ingest_corpus_file(const std::filesystem::path& path);

}  // namespace ctxbrowse
