#include "ctxbrowse/corpus_format.hpp"

#include <stdexcept>

namespace ctxbrowse {
namespace {

using nlohmann::json;

std::string string_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) {
    throw std::invalid_argument(std::string("field '") + key +
                                "' must be a string");
  }
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return {it->get<std::string>()};
  if (!it->is_array()) {
    throw std::invalid_argument(std::string("field '") + key +
                                "' must be a list of strings");
  }
  std::vector<std::string> out;
  for (const auto& item : *it) {
    if (!item.is_string()) {
      throw std::invalid_argument(std::string("field '") + key +
                                  "' must be a list of strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

DocumentRecord record_from_json(const json& obj) {
  if (!obj.is_object()) throw std::invalid_argument("record is not an object");
  DocumentRecord doc;
  if (const auto it = obj.find("id"); it != obj.end() && it->is_number_integer()) {
    doc.doc_id = std::to_string(it->get<long long>());
  } else {
    doc.doc_id = string_field(obj, "id");
  }
  doc.title = string_field(obj, "title");

  if (const auto it = obj.find("abstracts"); it != obj.end() && !it->is_null()) {
    if (it->is_string()) {
      doc.abstracts.emplace("", it->get<std::string>());
    } else if (it->is_object()) {
      for (const auto& [lang, text] : it->items()) {
        if (!text.is_string()) {
          throw std::invalid_argument("abstract texts must be strings");
        }
        doc.abstracts.emplace(lang, text.get<std::string>());
      }
    } else {
      throw std::invalid_argument("field 'abstracts' must be a map");
    }
  }

  doc.authors = string_list(obj, "authors");
  doc.keywords = string_list(obj, "keywords");
  doc.keywords_free = string_list(obj, "keywords_free");
  doc.categories = string_list(obj, "categories");

  if (auto journal = string_field(obj, "journal"); !journal.empty()) {
    doc.journal = std::move(journal);
  }
  if (const auto it = obj.find("year"); it != obj.end() && !it->is_null()) {
    if (it->is_number_integer()) {
      doc.year = it->get<int>();
    } else if (it->is_string() && !it->get<std::string>().empty()) {
      doc.year = std::stoi(it->get<std::string>());
    } else if (!it->is_string()) {
      throw std::invalid_argument("field 'year' must be an integer");
    }
  }
  if (auto lang = string_field(obj, "language"); !lang.empty()) {
    doc.language = std::move(lang);
  }
  return doc;
}

json record_to_json(const DocumentRecord& doc) {
  json obj;
  obj["id"] = doc.doc_id;
  obj["title"] = doc.title;
  obj["abstracts"] = json::object();
  for (const auto& [lang, text] : doc.abstracts) obj["abstracts"][lang] = text;
  obj["authors"] = doc.authors;
  obj["keywords"] = doc.keywords;
  obj["keywords_free"] = doc.keywords_free;
  obj["categories"] = doc.categories;
  obj["journal"] = doc.journal ? json(*doc.journal) : json(nullptr);
  obj["year"] = doc.year ? json(*doc.year) : json(nullptr);
  obj["language"] = doc.language ? json(*doc.language) : json(nullptr);
  return obj;
}

}  // namespace ctxbrowse
