#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rpest/common.hpp"
#include "rpest/kg.hpp"

namespace rpest {

struct Metrics {
  double mean_rank = 0.0;
  double hits_at_1 = 0.0;  // percentage
  double filtered_mean_rank = 0.0;
  double filtered_hits_at_1 = 0.0;  // percentage
  std::size_t triple_count = 0;
};

// Rank of `target` under optimistic ties: 1 + |{j : s_j > s_target}|.
std::int32_t raw_rank(const Vector& scores, std::int32_t target);

// Raw rank decremented by the other valid relations scoring above the
// target; never below 1. Throws if target is not in `valid` (the pair
// index would have to be broken for that to happen).
std::int32_t filtered_rank(const Vector& scores, std::int32_t target,
                           std::span<const std::int32_t> valid);

// Scores every test triple's pair once and accumulates the four
// metrics. The scorer must be pure; accumulation is order-independent,
// so any thread count produces identical results.
using PairScorer = std::function<Vector(std::int32_t head, std::int32_t tail)>;

Metrics evaluate(const PairScorer& scorer,
                 std::span<const IndexedTriple> test_triples,
                 const PairRelationIndex& index, int threads = 1);

}  // namespace rpest
