#pragma once

#include <string_view>

#include "spedn/blocks/block.hpp"

namespace spedn::logic {

struct LengthReport {
  std::size_t question_tokens = 0;
  std::size_t logical_form_tokens = 0;
  std::size_t block_count = 0;
};

/// Parentheses, commas and quoted constants count one token each; any other
/// maximal run of non-space characters is one token.
std::size_t count_lf_tokens(std::string_view logical_form);

LengthReport length_report(std::string_view question, std::string_view logical_form,
                           const blocks::BlockSequence& blocks);

/// 100 * blocks / lf, rounded half away from zero to one decimal.
double length_ratio_percent(double block_len, double lf_len);

}  // namespace spedn::logic
