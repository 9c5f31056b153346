#pragma once

// Brute-force interpolated Kneser-Ney, written directly from the textbook
// recursion over raw string n-grams. Shares no code with the library model.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace lexd::testing {

class KneserNeyOracle {
 public:
  KneserNeyOracle(const std::vector<std::vector<std::string>>& corpus, int order, double discount, int min_count)
      : n_(order), d_(discount) {
    std::map<std::string, int> freq;
    for (const auto& s : corpus) {
      for (const auto& w : s) ++freq[w];
    }
    for (const auto& s : corpus) {
      std::vector<std::string> seq(static_cast<std::size_t>(n_ - 1), "<s>");
      for (const auto& w : s) seq.push_back(freq[w] >= min_count ? w : "<unk>");
      seq.push_back("</s>");
      padded_.push_back(seq);
    }
    targets_.insert("<unk>");
    targets_.insert("</s>");
    for (const auto& [w, c] : freq) {
      if (c >= min_count) targets_.insert(w);
    }
  }

  const std::set<std::string>& targets() const { return targets_; }

  // P(w | h) for a context of exactly order-1 tokens (already padded).
  double prob(const std::vector<std::string>& context, const std::string& w) const {
    return p(n_, std::vector<std::string>(context.end() - (n_ - 1), context.end()), w);
  }

  std::string map(const std::string& w) const { return targets_.count(w) ? w : "<unk>"; }

 private:
  // Occurrences of the exact token sequence g in the padded corpus.
  long count(const std::vector<std::string>& g) const {
    long c = 0;
    for (const auto& s : padded_) {
      if (s.size() < g.size()) continue;
      for (std::size_t i = 0; i + g.size() <= s.size(); ++i) {
        if (std::equal(g.begin(), g.end(), s.begin() + static_cast<long>(i))) ++c;
      }
    }
    return c;
  }

  // Raw count at the top order, continuation count below it.
  double a(int k, const std::vector<std::string>& hw) const {
    if (k == n_) return static_cast<double>(count(hw));
    std::set<std::string> left;
    for (const auto& s : padded_) {
      for (std::size_t i = 0; i + hw.size() + 1 <= s.size(); ++i) {
        if (std::equal(hw.begin(), hw.end(), s.begin() + static_cast<long>(i) + 1)) left.insert(s[i]);
      }
    }
    return static_cast<double>(left.size());
  }

  double p(int k, const std::vector<std::string>& h, const std::string& w) const {
    if (k == 0) return 1.0 / static_cast<double>(targets_.size());
    const std::vector<std::string> shorter = h.empty() ? h : std::vector<std::string>(h.begin() + 1, h.end());
    const double lower = p(k - 1, shorter, w);
    double total = 0.0;
    double distinct = 0.0;
    for (const auto& v : targets_) {
      auto hv = h;
      hv.push_back(v);
      const double av = a(k, hv);
      total += av;
      if (av > 0) distinct += 1.0;
    }
    if (total == 0.0) return lower;
    auto hw = h;
    hw.push_back(w);
    return std::max(a(k, hw) - d_, 0.0) / total + d_ * distinct / total * lower;
  }

  int n_;
  double d_;
  std::vector<std::vector<std::string>> padded_;
  std::set<std::string> targets_;
};

}  // namespace lexd::testing
