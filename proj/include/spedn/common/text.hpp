#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace spedn::text {

std::string fold(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_ws(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with(std::string_view s, std::string_view prefix);

/// Lowercased word tokens with surrounding punctuation removed
/// ("alaska?" -> "alaska"). Apostrophes inside words are kept.
std::vector<std::string> word_tokens(std::string_view question);

}  // namespace spedn::text
