#include "spedn/prep/stem.hpp"

#include <array>
#include <utility>

namespace spedn::prep {

namespace {

class Porter {
 public:
  explicit Porter(std::string_view w) : b_(w) {}

  std::string run() {
    if (b_.size() <= 2) return b_;
    step1ab();
    step1c();
    step2();
    step3();
    step4();
    step5();
    return b_;
  }

 private:
  bool cons(std::size_t i) const {
    switch (b_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return false;
      case 'y': return i == 0 || !cons(i - 1);
      default: return true;
    }
  }

  // m() counts VC sequences in b_[0, j_).
  int m() const {
    int n = 0;
    std::size_t i = 0;
    while (i < j_ && cons(i)) ++i;
    while (i < j_) {
      while (i < j_ && !cons(i)) ++i;
      if (i >= j_) break;
      while (i < j_ && cons(i)) ++i;
      ++n;
    }
    return n;
  }

  bool vowel_in_stem() const {
    for (std::size_t i = 0; i < j_; ++i)
      if (!cons(i)) return true;
    return false;
  }

  bool double_cons(std::size_t end) const {
    return end >= 2 && b_[end - 1] == b_[end - 2] && cons(end - 1);
  }

  // cvc ending at position end-1, last consonant not w, x or y.
  bool cvc(std::size_t end) const {
    if (end < 3 || !cons(end - 1) || cons(end - 2) || !cons(end - 3)) return false;
    char c = b_[end - 1];
    return c != 'w' && c != 'x' && c != 'y';
  }

  bool ends(std::string_view s) {
    if (s.size() > b_.size() || b_.compare(b_.size() - s.size(), s.size(), s) != 0) return false;
    j_ = b_.size() - s.size();
    return true;
  }

  void set_to(std::string_view s) { b_ = b_.substr(0, j_) + std::string(s); }
  void replace_if_m(std::string_view s) {
    if (m() > 0) set_to(s);
  }

  void step1ab() {
    if (b_.back() == 's') {
      if (ends("sses")) b_.resize(b_.size() - 2);
      else if (ends("ies")) set_to("i");
      else if (b_.size() >= 2 && b_[b_.size() - 2] != 's') b_.pop_back();
    }
    if (ends("eed")) {
      if (m() > 0) b_.pop_back();
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      b_.resize(j_);
      if (ends("at")) set_to("ate");
      else if (ends("bl")) set_to("ble");
      else if (ends("iz")) set_to("ize");
      else if (double_cons(b_.size())) {
        char c = b_.back();
        if (c != 'l' && c != 's' && c != 'z') b_.pop_back();
      } else {
        j_ = b_.size();
        if (m() == 1 && cvc(b_.size())) b_ += 'e';
      }
    }
  }

  void step1c() {
    if (ends("y") && vowel_in_stem()) b_.back() = 'i';
  }

  template <std::size_t N>
  void rules(const std::array<std::pair<const char*, const char*>, N>& table) {
    for (const auto& [from, to] : table) {
      if (ends(from)) {
        replace_if_m(to);
        return;
      }
    }
  }

  void step2() {
    static const std::array<std::pair<const char*, const char*>, 20> t{{
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},  {"anci", "ance"},  {"izer", "ize"},
        {"bli", "ble"},     {"alli", "al"},     {"entli", "ent"},  {"eli", "e"},      {"ousli", "ous"},
        {"ization", "ize"}, {"ation", "ate"},   {"ator", "ate"},   {"alism", "al"},   {"iveness", "ive"},
        {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},   {"iviti", "ive"},  {"biliti", "ble"},
    }};
    if (b_.size() > 2) rules(t);
  }

  void step3() {
    static const std::array<std::pair<const char*, const char*>, 7> t{{
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"}, {"ical", "ic"}, {"ful", ""}, {"ness", ""},
    }};
    rules(t);
  }

  void step4() {
    static const char* const suffixes[] = {"al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement",
                                           "ment", "ent", "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize"};
    for (const char* s : suffixes) {
      if (!ends(s)) continue;
      if (m() > 1) b_.resize(j_);
      return;
    }
    if (ends("ion") && j_ > 0 && (b_[j_ - 1] == 's' || b_[j_ - 1] == 't') && m() > 1) b_.resize(j_);
  }

  void step5() {
    j_ = b_.size();
    if (b_.back() == 'e') {
      j_ = b_.size() - 1;
      int a = m();
      if (a > 1 || (a == 1 && !cvc(j_))) b_.pop_back();
    }
    j_ = b_.size();
    if (b_.back() == 'l' && double_cons(b_.size()) && m() > 1) b_.pop_back();
  }

  std::string b_;
  std::size_t j_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word) { return Porter(word).run(); }

std::string stem(std::string_view word) {
  std::string cur(word);
  for (;;) {
    auto next = porter_stem(cur);
    if (next == cur) return cur;
    cur = std::move(next);
  }
}

}  // namespace spedn::prep
