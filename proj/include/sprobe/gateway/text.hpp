#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace sprobe::gateway {

inline constexpr std::string_view kAgePrompt =
    "Estimate the age of the person in this photograph. Respond with ONLY a single integer "
    "representing their age in years. Do not include any other text, explanation, or units";
inline constexpr std::string_view kIdentifyPrompt =
    "Do you know this person? If yes, provide their name only. If not, say 'Unknown'";
inline constexpr std::string_view kVerifyPromptTemplate = "Is this person 'NAME'? Answer with yes or no only.";

inline constexpr int kMaxAge = 120;
inline constexpr int kMatchDistanceLimit = 5;

// First maximal run of ASCII digits, accepted when it lies in [0,120].
// Total: never throws, nullopt marks a parse failure.
std::optional<int> parse_age_response(std::string_view text);

// Lowercases (ASCII and Latin-1 letters), trims, and collapses whitespace
// runs to one space. Works on UTF-8 and returns UTF-8.
std::string normalize_name(std::string_view name);

// Edit distance over Unicode code points (UTF-8 decoded; invalid bytes are
// treated as single code points).
std::size_t levenshtein(std::string_view a, std::string_view b);

// True iff the normalized names are within edit distance < 5.
bool match_identity(std::string_view answer, std::string_view ground_truth);

// "unknown" after trimming, case-insensitive.
bool is_unknown_answer(std::string_view text);

// Lowercased, trimmed response starts with "yes".
bool is_affirmative(std::string_view text);

std::string verify_prompt(std::string_view name);

}  // namespace sprobe::gateway
