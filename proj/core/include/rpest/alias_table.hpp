#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace rpest {

// Walker alias method: O(n) construction, O(1) sampling from a fixed
// discrete distribution given by unnormalized non-negative weights.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(const std::vector<double>& weights) { build(weights); }

  void build(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    if (n == 0) return;

    double total = 0.0;
    for (double w : weights) total += w;

    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = weights[i] * static_cast<double>(n) / total;
      if (scaled[i] < 1.0)
        small.push_back(static_cast<std::uint32_t>(i));
      else
        large.push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      small.pop_back();
      const std::uint32_t l = large.back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0)
        small.push_back(l);
      else
        large.push_back(l);
    }
    // Leftovers are 1.0 up to rounding.
    for (std::uint32_t s : small) prob_[s] = 1.0;
    for (std::uint32_t l : large) prob_[l] = 1.0;
  }

  std::size_t size() const { return prob_.size(); }
  bool empty() const { return prob_.empty(); }

  template <class Rng>
  std::uint32_t sample(Rng& rng) const {
    std::uniform_int_distribution<std::uint32_t> pick(
        0, static_cast<std::uint32_t>(prob_.size() - 1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::uint32_t i = pick(rng);
    return unit(rng) < prob_[i] ? i : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace rpest
