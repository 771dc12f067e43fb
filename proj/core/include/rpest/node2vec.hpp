#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "rpest/alias_table.hpp"
#include "rpest/common.hpp"
#include "rpest/kg.hpp"

namespace rpest {

struct WalkConfig {
  std::int32_t walk_length = 50;
  std::int32_t walks_per_node = 50;
  double p = 1.0;  // return parameter
  double q = 1.0;  // in-out parameter
  std::uint64_t seed = 42;

  void validate() const;
};

struct WalkCorpus {
  std::vector<std::vector<std::int32_t>> walks;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& w : walks) n += w.size();
    return n;
  }
};

// Second-order transition sampler. For the walk step arriving at `cur`
// from `prev`, neighbor x of `cur` gets unnormalized weight
//   1/p if x == prev, 1 if x is adjacent to prev, 1/q otherwise.
//
// p == q == 1 needs no tables (all weights equal); otherwise one alias
// table per directed train edge gives O(1) sampling. When those tables
// would exceed the entry budget, sampling falls back to rejection
// against the weight upper bound, still O(1) expected per step.
class TransitionTables {
 public:
  static TransitionTables build(const KnowledgeGraph& graph, double p,
                                double q,
                                std::size_t alias_entry_budget = 1u << 26);

  // Next node for the step prev -> cur -> ?
  std::int32_t sample(std::int32_t prev, std::int32_t cur,
                      std::mt19937_64& rng) const;
  // First step of a walk: uniform over the source's neighbors.
  std::int32_t first_step(std::int32_t cur, std::mt19937_64& rng) const;

  // Exact normalized distribution over cur's neighbors, in adjacency
  // order. This is the distribution sample() draws from in every mode.
  std::vector<double> probabilities(std::int32_t prev, std::int32_t cur) const;

  bool uses_alias_tables() const { return mode_ == Mode::kAlias; }

 private:
  enum class Mode { kUniform, kAlias, kRejection };

  double weight(std::int32_t prev, std::int32_t x) const;

  const KnowledgeGraph* graph_ = nullptr;
  Mode mode_ = Mode::kUniform;
  double p_ = 1.0;
  double q_ = 1.0;
  double max_weight_ = 1.0;
  // Alias mode: tables indexed by directed-edge id, where the id of
  // (prev -> cur) is edge_offset_[prev] + rank of cur in adjacency[prev].
  std::vector<std::size_t> edge_offset_;
  std::vector<AliasTable> tables_;
};

// walks_per_node walks from every entity with at least one edge, in
// source-major order, plus one singleton walk per isolated entity.
// Deterministic for a fixed seed regardless of thread count.
WalkCorpus generate_walks(const KnowledgeGraph& graph,
                          const TransitionTables& transitions,
                          const WalkConfig& config, int threads = 1);

void dump_walks(std::ostream& out, const WalkCorpus& corpus);

struct SgnsConfig {
  std::int32_t dim = 300;
  std::int32_t window = 10;
  std::int32_t negatives = 5;
  std::int32_t epochs = 5;
  double initial_lr = 0.025;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SgnsStats {
  std::vector<double> epoch_loss;   // mean loss per positive pair
  std::size_t trained_entities = 0; // rows that received at least one update
};

// Skip-gram with negative sampling over the walk corpus. Positive pair
// (u, v) maximizes log s(e_u . e'_v) + sum_neg log s(-e_u . e'_n) with
// negatives from the corpus unigram distribution raised to 0.75. The
// learning rate decays linearly to initial_lr / 10000 over all
// processed pairs. Single-threaded mode is bit-deterministic for a
// fixed seed; threads > 1 updates shared rows without synchronization
// and is not deterministic.
RowMatrixF train_sgns(const WalkCorpus& corpus, const SgnsConfig& config,
                      std::int32_t entity_count, int threads = 1,
                      SgnsStats* stats = nullptr);

// Text export: entity-id SPACE v1 ... vd, round-trip precision.
void export_embeddings_text(std::ostream& out, const Vocabulary& entities,
                            const RowMatrixF& embeddings);

}  // namespace rpest
