#include "fame/text.hpp"

#include <memory>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "fame/error.hpp"

namespace fame::text {
namespace {

bool is_ascii_space(unsigned char c) { return c == ' ' || (c >= 0x09 && c <= 0x0d); }

const icu::Normalizer2& nfc() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error(ErrorCode::kInternal, "ICU NFC normalizer unavailable");
    return n;
  }();
  return *instance;
}

// Collapses whitespace runs in already-normalized UTF-16 text.
std::string collapse_to_utf8(const icu::UnicodeString& in) {
  icu::UnicodeString out;
  out.getBuffer(in.length() + 1);
  out.releaseBuffer(0);
  bool pending_space = false;
  for (int32_t i = 0; i < in.length();) {
    const UChar32 c = in.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.isEmpty()) out.append(static_cast<UChar>(' '));
    pending_space = false;
    out.append(c);
  }
  std::string s;
  out.toUTF8String(s);
  return s;
}

std::string ascii_collapse(std::string_view s, bool lower) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (is_ascii_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    if (lower && c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c + 32);
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::string icu_normalize(std::string_view s, bool fold) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  if (fold) u.foldCase(U_FOLD_CASE_DEFAULT);
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString n = nfc().normalize(u, status);
  if (U_FAILURE(status)) throw Error(ErrorCode::kInternal, "NFC normalization failed");
  return collapse_to_utf8(n);
}

}  // namespace

bool is_ascii(std::string_view s) {
  for (unsigned char c : s) {
    if (c >= 0x80) return false;
  }
  return true;
}

std::string normalize_display(std::string_view s) {
  if (is_ascii(s)) return ascii_collapse(s, false);
  return icu_normalize(s, false);
}

std::string normalize_match(std::string_view s) {
  if (is_ascii(s)) return ascii_collapse(s, true);
  return icu_normalize(s, true);
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  const auto c = static_cast<UChar32>(cp);
  if (u_isalnum(c)) return true;
  const int8_t type = u_charType(c);
  return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK ||
         type == U_ENCLOSING_MARK;
}

bool is_upper(char32_t cp) {
  if (cp < 0x80) return cp >= 'A' && cp <= 'Z';
  const auto c = static_cast<UChar32>(cp);
  return u_isupper(c) || u_istitle(c);
}

char32_t decode_next(std::string_view s, std::size_t& pos) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  auto i = static_cast<int32_t>(pos);
  const auto len = static_cast<int32_t>(s.size());
  UChar32 c;
  U8_NEXT(p, i, len, c);
  pos = static_cast<std::size_t>(i);
  return c < 0 ? 0xFFFD : static_cast<char32_t>(c);
}

char32_t decode_prev(std::string_view s, std::size_t& pos) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  auto i = static_cast<int32_t>(pos);
  UChar32 c;
  U8_PREV(p, 0, i, c);
  pos = static_cast<std::size_t>(i);
  return c < 0 ? 0xFFFD : static_cast<char32_t>(c);
}

bool is_token_bounded(std::string_view s, std::size_t begin, std::size_t end) {
  if (begin > 0) {
    const auto prev = static_cast<unsigned char>(s[begin - 1]);
    if (prev < 0x80) {
      if (is_word_char(prev)) return false;
    } else {
      std::size_t p = begin;
      if (is_word_char(decode_prev(s, p))) return false;
    }
  }
  if (end < s.size()) {
    const auto next = static_cast<unsigned char>(s[end]);
    if (next < 0x80) {
      if (is_word_char(next)) return false;
    } else {
      std::size_t p = end;
      if (is_word_char(decode_next(s, p))) return false;
    }
  }
  return true;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_ascii_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_ascii_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace fame::text
