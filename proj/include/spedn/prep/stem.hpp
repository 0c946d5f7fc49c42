#pragma once

#include <string>
#include <string_view>

namespace spedn::prep {

/// One pass of the Porter (1980) suffix stripper over a lowercase word.
std::string porter_stem(std::string_view word);

/// porter_stem applied until it stops changing the word, so stem is idempotent.
std::string stem(std::string_view word);

}  // namespace spedn::prep
