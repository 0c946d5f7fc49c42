#include "spedn/logic/length.hpp"

#include <cctype>
#include <cmath>

#include "spedn/common/text.hpp"

namespace spedn::logic {

std::size_t count_lf_tokens(std::string_view s) {
  std::size_t n = 0, i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(' || c == ')' || c == ',') {
      ++n;
      ++i;
    } else if (c == '\'') {
      auto end = s.find('\'', i + 1);
      i = end == std::string_view::npos ? s.size() : end + 1;
      ++n;
    } else {
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '(' && s[i] != ')' &&
             s[i] != ',' && s[i] != '\'')
        ++i;
      ++n;
    }
  }
  return n;
}

LengthReport length_report(std::string_view question, std::string_view logical_form,
                           const blocks::BlockSequence& blocks) {
  return {text::split_ws(question).size(), count_lf_tokens(logical_form), blocks.size()};
}

double length_ratio_percent(double block_len, double lf_len) {
  if (lf_len == 0) return 0;
  return std::round(1000.0 * block_len / lf_len) / 10.0;
}

}  // namespace spedn::logic
