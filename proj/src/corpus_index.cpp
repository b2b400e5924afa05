#include "ctxbrowse/corpus_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ctxbrowse/corpus_format.hpp"
#include "ctxbrowse/text.hpp"

namespace ctxbrowse {
namespace {

void dedupe_values(std::vector<std::string>& values) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> kept;
  kept.reserve(values.size());
  for (auto& value : values) {
    std::string key = normalize_value(value);
    if (key.empty() || !seen.insert(std::move(key)).second) continue;
    kept.push_back(std::move(value));
  }
  values = std::move(kept);
}

}  // namespace

double idf_value(std::size_t doc_count, std::size_t df) {
  return 1.0 + std::log(static_cast<double>(doc_count) /
                        (1.0 + static_cast<double>(df)));
}

DocumentRecord normalize_record(DocumentRecord doc) {
  dedupe_values(doc.authors);
  dedupe_values(doc.keywords);
  dedupe_values(doc.keywords_free);
  dedupe_values(doc.categories);
  if (doc.journal && normalize_value(*doc.journal).empty()) doc.journal.reset();
  return doc;
}

CorpusIndex CorpusIndex::build(std::vector<DocumentRecord> docs) {
  std::sort(docs.begin(), docs.end(),
            [](const DocumentRecord& a, const DocumentRecord& b) {
              return a.doc_id < b.doc_id;
            });

  CorpusIndex index;
  index.docs_ = std::move(docs);
  index.ordinals_.reserve(index.docs_.size());

  for (std::size_t i = 0; i < index.docs_.size(); ++i) {
    const DocumentRecord& doc = index.docs_[i];
    if (doc.doc_id.empty()) throw IngestError("record with empty doc_id");
    if (!index.ordinals_.emplace(doc.doc_id, static_cast<DocOrdinal>(i))
             .second) {
      throw IngestError("duplicate doc_id: " + doc.doc_id);
    }
    const auto ord = static_cast<DocOrdinal>(i);

    for (const FieldKind field : kAllFields) {
      // term -> tf within this document and field
      std::vector<std::pair<std::string, std::uint32_t>> counts;
      for (const auto& raw : field_values(doc, field)) {
        for (auto& term : normalize_term(raw, field)) {
          auto it = std::find_if(counts.begin(), counts.end(),
                                 [&](const auto& c) { return c.first == term; });
          if (it == counts.end()) {
            counts.emplace_back(std::move(term), 1);
          } else if (is_free_text(field)) {
            ++it->second;
          }
        }
      }
      auto& map = index.postings_[field_slot(field)];
      for (auto& [term, tf] : counts) map[std::move(term)].push_back({ord, tf});
    }
  }
  return index;
}

const DocumentRecord& CorpusIndex::document(std::string_view doc_id) const {
  const auto* doc = find(doc_id);
  if (doc == nullptr) throw UnknownDocument(doc_id);
  return *doc;
}

const DocumentRecord* CorpusIndex::find(std::string_view doc_id) const {
  const auto it = ordinals_.find(doc_id);
  return it == ordinals_.end() ? nullptr : &docs_[it->second];
}

std::optional<DocOrdinal> CorpusIndex::ordinal(std::string_view doc_id) const {
  const auto it = ordinals_.find(doc_id);
  if (it == ordinals_.end()) return std::nullopt;
  return it->second;
}

std::span<const Posting> CorpusIndex::postings(FieldKind field,
                                               std::string_view term) const {
  const auto& map = postings_[field_slot(field)];
  const auto it = map.find(term);
  if (it == map.end()) return {};
  return it->second;
}

std::size_t CorpusIndex::df(FieldKind field, std::string_view term) const {
  return postings(field, term).size();
}

double CorpusIndex::idf(FieldKind field, std::string_view term) const {
  return idf_value(doc_count(), df(field, term));
}

std::uint32_t CorpusIndex::tf(FieldKind field, std::string_view term,
                              DocOrdinal doc) const {
  const auto list = postings(field, term);
  const auto it = std::lower_bound(
      list.begin(), list.end(), doc,
      [](const Posting& p, DocOrdinal d) { return p.doc < d; });
  return (it != list.end() && it->doc == doc) ? it->tf : 0;
}

double CorpusIndex::tf_idf(std::string_view term, FieldKind field,
                           std::string_view doc_id) const {
  const auto ord = ordinal(doc_id);
  if (!ord) throw UnknownDocument(doc_id);
  const std::uint32_t count = tf(field, term, *ord);
  if (count == 0) return 0.0;
  return static_cast<double>(count) * idf(field, term);
}

std::size_t CorpusIndex::term_count(FieldKind field) const {
  return postings_[field_slot(field)].size();
}

std::size_t CorpusIndex::posting_count() const {
  std::size_t total = 0;
  for (const auto& map : postings_) {
    for (const auto& [term, list] : map) total += list.size();
  }
  return total;
}

IngestResult ingest_corpus(std::istream& source) {
  if (!source) throw IngestError("corpus source is not readable");

  std::vector<DocumentRecord> docs;
  std::unordered_map<std::string, std::size_t> first_line;
  std::vector<IngestDiagnostic> diagnostics;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    DocumentRecord doc;
    try {
      doc = record_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      diagnostics.push_back({line_no, std::string("malformed record: ") + e.what()});
      continue;
    }
    if (doc.doc_id.empty()) {
      diagnostics.push_back({line_no, "record has no id"});
      continue;
    }
    if (doc.year && (*doc.year < kMinYear || *doc.year > kMaxYear)) {
      diagnostics.push_back({line_no, "year " + std::to_string(*doc.year) +
                                          " outside [1400, 2100]"});
      continue;
    }
    const auto [it, inserted] = first_line.emplace(doc.doc_id, line_no);
    if (!inserted) {
      throw IngestError("duplicate doc_id '" + doc.doc_id + "' on lines " +
                        std::to_string(it->second) + " and " +
                        std::to_string(line_no));
    }
    docs.push_back(normalize_record(std::move(doc)));
  }
  if (source.bad()) throw IngestError("error while reading corpus source");

  return {CorpusIndex::build(std::move(docs)), std::move(diagnostics)};
}

IngestResult ingest_corpus_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open corpus file: " + path.string());
  return ingest_corpus(in);
}

}  // namespace ctxbrowse
