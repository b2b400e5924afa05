#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ctxbrowse {

inline constexpr std::size_t kContextFeatureLimit = 3;

struct WeightedTerm {
  std::string term;  // normalized value
  double rank = 0.0;  // in (0, 1]

  friend bool operator==(const WeightedTerm&, const WeightedTerm&) = default;
};

/// Short-term user model of one session: every query issued plus the most
/// frequent keywords and categories, max-normalized.
struct SessionContext {
  std::vector<std::string> queries;
  std::vector<WeightedTerm> keywords;
  std::vector<WeightedTerm> categories;
  std::size_t history_size = 0;
  bool cold_start = false;

  bool empty() const {
    return queries.empty() && keywords.empty() && categories.empty();
  }
};

}  // namespace ctxbrowse
