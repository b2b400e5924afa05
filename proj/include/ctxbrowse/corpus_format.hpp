#pragma once

#include <nlohmann/json.hpp>

#include "ctxbrowse/document.hpp"

namespace ctxbrowse {

/// One corpus line: a flat object with keys id, title, abstracts, authors,
/// keywords, keywords_free, categories, journal, year, language. Unknown
/// keys are ignored; throws std::invalid_argument on a type mismatch.
DocumentRecord record_from_json(const nlohmann::json& obj);
nlohmann::json record_to_json(const DocumentRecord& doc);

}  // namespace ctxbrowse
