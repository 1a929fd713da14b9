#include "sprobe/gateway/text.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <vector>

namespace sprobe::gateway {

namespace {

bool is_space(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v'; }

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0 && b0 < 0xF8) {
      len = 4;
      cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
      len = b0 < 0xF0 ? 3 : 1;
      cp = len == 3 ? (b0 & 0x0F) : b0;
    } else if (b0 >= 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    }
    if (len > 1) {
      bool ok = i + static_cast<std::size_t>(len) <= s.size();
      for (int k = 1; ok && k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((b & 0xC0) != 0x80) {
          ok = false;
        } else {
          cp = (cp << 6) | (b & 0x3F);
        }
      }
      if (!ok) {
        len = 1;
        cp = b0;
      }
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  return c;
}

std::u32string normalized_code_points(std::string_view s) {
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : decode_utf8(s)) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(to_lower(c));
  }
  return out;
}

std::size_t levenshtein_cp(const std::u32string& a, const std::u32string& b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i + 1;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::size_t above = row[j + 1];
      const std::size_t substitute = diagonal + (a[i] == b[j] ? 0 : 1);
      row[j + 1] = std::min({above + 1, row[j] + 1, substitute});
      diagonal = above;
    }
  }
  return row[b.size()];
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::optional<int> parse_age_response(std::string_view text) {
  const auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  const auto begin = std::find_if(text.begin(), text.end(), is_digit);
  if (begin == text.end()) return std::nullopt;
  const auto end = std::find_if_not(begin, text.end(), is_digit);
  // Strip leading zeros before the length check so "007" parses as 7.
  auto first = begin;
  while (first + 1 < end && *first == '0') ++first;
  if (end - first > 3) return std::nullopt;
  int value = 0;
  for (auto it = first; it != end; ++it) value = value * 10 + (*it - '0');
  if (value > kMaxAge) return std::nullopt;
  return value;
}

std::string normalize_name(std::string_view name) {
  std::string out;
  for (char32_t c : normalized_code_points(name)) append_utf8(out, c);
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein_cp(decode_utf8(a), decode_utf8(b));
}

bool match_identity(std::string_view answer, std::string_view ground_truth) {
  return levenshtein_cp(normalized_code_points(answer), normalized_code_points(ground_truth)) <
         static_cast<std::size_t>(kMatchDistanceLimit);
}

bool is_unknown_answer(std::string_view text) { return ascii_lower(trim(text)) == "unknown"; }

bool is_affirmative(std::string_view text) { return ascii_lower(trim(text)).starts_with("yes"); }

std::string verify_prompt(std::string_view name) {
  std::string prompt(kVerifyPromptTemplate);
  const auto pos = prompt.find("NAME");
  prompt.replace(pos, 4, name);
  return prompt;
}

}  // namespace sprobe::gateway
