#include "rpest/eval.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace rpest {

std::int32_t raw_rank(const Vector& scores, std::int32_t target) {
  const double s = scores(target);
  std::int32_t above = 0;
  for (Eigen::Index j = 0; j < scores.size(); ++j)
    if (scores(j) > s) ++above;
  return 1 + above;
}

std::int32_t filtered_rank(const Vector& scores, std::int32_t target,
                           std::span<const std::int32_t> valid) {
  if (!std::binary_search(valid.begin(), valid.end(), target))
    throw DimensionError("filtered_rank: target relation missing from the "
                         "pair's valid set (pair index is inconsistent)");
  const double s = scores(target);
  std::int32_t rank = raw_rank(scores, target);
  for (std::int32_t v : valid)
    if (v != target && scores(v) > s) --rank;
  return rank;
}

Metrics evaluate(const PairScorer& scorer,
                 std::span<const IndexedTriple> test_triples,
                 const PairRelationIndex& index, int threads) {
  struct Partial {
    std::uint64_t rank_sum = 0;
    std::uint64_t filtered_rank_sum = 0;
    std::uint64_t hits = 0;
    std::uint64_t filtered_hits = 0;
  };

  const auto score_range = [&](std::size_t begin, std::size_t end,
                               Partial& out) {
    for (std::size_t i = begin; i < end; ++i) {
      const IndexedTriple& t = test_triples[i];
      const Vector scores = scorer(t.head, t.tail);
      const auto valid = index.relations_for(t.head, t.tail);
      const std::int32_t rank = raw_rank(scores, t.relation);
      const std::int32_t frank = filtered_rank(scores, t.relation, valid);
      out.rank_sum += rank;
      out.filtered_rank_sum += frank;
      if (rank == 1) ++out.hits;
      if (frank == 1) ++out.filtered_hits;
    }
  };

  std::vector<Partial> partials;
  if (threads <= 1 || test_triples.size() < 2) {
    partials.resize(1);
    score_range(0, test_triples.size(), partials[0]);
  } else {
    partials.resize(threads);
    std::vector<std::thread> pool;
    const std::size_t per = (test_triples.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t b = std::min(test_triples.size(), t * per);
      const std::size_t e = std::min(test_triples.size(), b + per);
      if (b < e) pool.emplace_back(score_range, b, e, std::ref(partials[t]));
    }
    for (auto& th : pool) th.join();
  }

  Partial total;
  for (const Partial& p : partials) {
    total.rank_sum += p.rank_sum;
    total.filtered_rank_sum += p.filtered_rank_sum;
    total.hits += p.hits;
    total.filtered_hits += p.filtered_hits;
  }

  Metrics m;
  m.triple_count = test_triples.size();
  if (m.triple_count == 0) return m;
  const double n = static_cast<double>(m.triple_count);
  m.mean_rank = static_cast<double>(total.rank_sum) / n;
  m.filtered_mean_rank = static_cast<double>(total.filtered_rank_sum) / n;
  m.hits_at_1 = 100.0 * static_cast<double>(total.hits) / n;
  m.filtered_hits_at_1 = 100.0 * static_cast<double>(total.filtered_hits) / n;
  return m;
}

}  // namespace rpest
