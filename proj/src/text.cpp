#include "ctxbrowse/text.hpp"

#include <memory>
#include <stdexcept>

#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace ctxbrowse {
namespace {

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* instance = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || instance == nullptr) {
    throw std::runtime_error("ICU NFC normalizer unavailable");
  }
  return *instance;
}

icu::UnicodeString folded(std::string_view raw) {
  UErrorCode status = U_ZERO_ERROR;
  const auto& norm = nfc();
  icu::UnicodeString text = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  text = norm.normalize(text, status);
  text.toLower(icu::Locale::getRoot());
  text = norm.normalize(text, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("ICU normalization failed");
  }
  return text;
}

std::string to_utf8(const icu::UnicodeString& text) {
  std::string out;
  text.toUTF8String(out);
  return out;
}

icu::BreakIterator& word_breaker() {
  thread_local std::unique_ptr<icu::BreakIterator> breaker = [] {
    UErrorCode status = U_ZERO_ERROR;
    std::unique_ptr<icu::BreakIterator> it(
        icu::BreakIterator::createWordInstance(icu::Locale::getRoot(),
                                               status));
    if (U_FAILURE(status) || !it) {
      throw std::runtime_error("ICU word break iterator unavailable");
    }
    return it;
  }();
  return *breaker;
}

}  // namespace

std::string normalize_value(std::string_view raw) {
  const icu::UnicodeString text = folded(raw);
  icu::UnicodeString out;
  bool pending_space = false;
  for (int32_t i = 0; i < text.length();) {
    const UChar32 c = text.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = !out.isEmpty();
      continue;
    }
    if (pending_space) {
      out.append(static_cast<UChar>(0x20));
      pending_space = false;
    }
    out.append(c);
  }
  return to_utf8(out);
}

std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> tokens;
  const icu::UnicodeString text = folded(raw);
  if (text.isEmpty()) return tokens;

  auto& breaker = word_breaker();
  breaker.setText(text);
  int32_t start = breaker.first();
  for (int32_t end = breaker.next(); end != icu::BreakIterator::DONE;
       start = end, end = breaker.next()) {
    if (breaker.getRuleStatus() < UBRK_WORD_NONE_LIMIT) continue;
    const icu::UnicodeString word = text.tempSubStringBetween(start, end);
    if (static_cast<std::size_t>(word.countChar32()) < kMinTokenLength) {
      continue;
    }
    tokens.push_back(to_utf8(word));
  }
  return tokens;
}

std::vector<std::string> normalize_term(std::string_view raw, FieldKind kind) {
  if (is_free_text(kind)) return tokenize(raw);
  std::string value = normalize_value(raw);
  if (value.empty()) return {};
  return {std::move(value)};
}

std::size_t codepoint_length(std::string_view utf8) {
  std::size_t n = 0;
  for (const char ch : utf8) {
    if ((static_cast<unsigned char>(ch) & 0xC0U) != 0x80U) ++n;
  }
  return n;
}

}  // namespace ctxbrowse
