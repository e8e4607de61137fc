#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// UTF-8 text helpers shared by the corpus, lexicon, and matcher. All
// normalization goes through ICU, with an ASCII fast path that produces
// byte-identical results.
namespace fame::text {

// NFC, runs of Unicode whitespace collapsed to one ASCII space, trimmed.
std::string normalize_display(std::string_view s);

// Full case folding, then NFC, then whitespace collapse. This is the form
// that keywords and article text are compared in.
std::string normalize_match(std::string_view s);

// Letters, digits, and combining marks. A keyword hit may not be preceded
// or followed by such a code point.
bool is_word_char(char32_t cp);
bool is_upper(char32_t cp);

// Decodes the code point starting at `pos`; advances `pos` past it.
// Malformed sequences decode as U+FFFD and consume one byte.
char32_t decode_next(std::string_view s, std::size_t& pos);
// Decodes the code point ending just before `pos`; moves `pos` to its start.
char32_t decode_prev(std::string_view s, std::size_t& pos);

// True iff the match [begin, end) is not glued to a word character on
// either side.
bool is_token_bounded(std::string_view s, std::size_t begin, std::size_t end);

bool is_ascii(std::string_view s);
std::string ascii_lower(std::string_view s);
std::string_view trim(std::string_view s);

}  // namespace fame::text
