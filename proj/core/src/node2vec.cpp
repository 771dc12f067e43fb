#include "rpest/node2vec.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

namespace rpest {

void WalkConfig::validate() const {
  if (walk_length < 1) throw DimensionError("walk_length must be >= 1");
  if (walks_per_node < 1) throw DimensionError("walks_per_node must be >= 1");
  if (p <= 0.0 || q <= 0.0) throw DimensionError("p and q must be > 0");
}

void SgnsConfig::validate() const {
  if (dim < 1) throw DimensionError("sgns dim must be >= 1");
  if (window < 1) throw DimensionError("sgns window must be >= 1");
  if (negatives < 1) throw DimensionError("sgns negatives must be >= 1");
  if (epochs < 1) throw DimensionError("sgns epochs must be >= 1");
}

double TransitionTables::weight(std::int32_t prev, std::int32_t x) const {
  if (x == prev) return 1.0 / p_;
  if (graph_->adjacent(prev, x)) return 1.0;
  return 1.0 / q_;
}

TransitionTables TransitionTables::build(const KnowledgeGraph& graph, double p,
                                         double q,
                                         std::size_t alias_entry_budget) {
  TransitionTables t;
  t.graph_ = &graph;
  t.p_ = p;
  t.q_ = q;
  t.max_weight_ = std::max({1.0, 1.0 / p, 1.0 / q});

  if (p == 1.0 && q == 1.0) {
    t.mode_ = Mode::kUniform;
    return t;
  }

  // Entries needed: sum over directed edges (prev -> cur) of deg(cur).
  std::size_t entries = 0;
  for (const auto& nbrs : graph.adjacency)
    for (std::int32_t cur : nbrs) entries += graph.adjacency[cur].size();

  if (entries > alias_entry_budget) {
    t.mode_ = Mode::kRejection;
    return t;
  }

  t.mode_ = Mode::kAlias;
  const std::int32_t n = graph.entities.size();
  t.edge_offset_.resize(n + 1, 0);
  for (std::int32_t u = 0; u < n; ++u)
    t.edge_offset_[u + 1] = t.edge_offset_[u] + graph.adjacency[u].size();
  t.tables_.resize(t.edge_offset_[n]);

  std::vector<double> weights;
  for (std::int32_t prev = 0; prev < n; ++prev) {
    const auto& outgoing = graph.adjacency[prev];
    for (std::size_t j = 0; j < outgoing.size(); ++j) {
      const std::int32_t cur = outgoing[j];
      const auto& nbrs = graph.adjacency[cur];
      weights.resize(nbrs.size());
      for (std::size_t i = 0; i < nbrs.size(); ++i)
        weights[i] = t.weight(prev, nbrs[i]);
      t.tables_[t.edge_offset_[prev] + j].build(weights);
    }
  }
  return t;
}

std::int32_t TransitionTables::first_step(std::int32_t cur,
                                          std::mt19937_64& rng) const {
  const auto& nbrs = graph_->adjacency[cur];
  std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
  return nbrs[pick(rng)];
}

std::int32_t TransitionTables::sample(std::int32_t prev, std::int32_t cur,
                                      std::mt19937_64& rng) const {
  const auto& nbrs = graph_->adjacency[cur];
  switch (mode_) {
    case Mode::kUniform:
      return first_step(cur, rng);
    case Mode::kAlias: {
      const auto& adj_prev = graph_->adjacency[prev];
      const auto it =
          std::lower_bound(adj_prev.begin(), adj_prev.end(), cur);
      const std::size_t edge =
          edge_offset_[prev] + static_cast<std::size_t>(it - adj_prev.begin());
      return nbrs[tables_[edge].sample(rng)];
    }
    case Mode::kRejection:
    default: {
      std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      while (true) {
        const std::int32_t x = nbrs[pick(rng)];
        if (unit(rng) * max_weight_ <= weight(prev, x)) return x;
      }
    }
  }
}

std::vector<double> TransitionTables::probabilities(std::int32_t prev,
                                                    std::int32_t cur) const {
  const auto& nbrs = graph_->adjacency[cur];
  std::vector<double> probs(nbrs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    probs[i] = mode_ == Mode::kUniform ? 1.0 : weight(prev, nbrs[i]);
    total += probs[i];
  }
  for (double& v : probs) v /= total;
  return probs;
}

WalkCorpus generate_walks(const KnowledgeGraph& graph,
                          const TransitionTables& transitions,
                          const WalkConfig& config, int threads) {
  config.validate();
  const std::int32_t n = graph.entities.size();

  // Lay out walk slots up front so worker count cannot affect order.
  std::vector<std::size_t> slot_of_source(n + 1, 0);
  for (std::int32_t u = 0; u < n; ++u) {
    const std::size_t count =
        graph.degree(u) > 0 ? static_cast<std::size_t>(config.walks_per_node)
                            : 1;
    slot_of_source[u + 1] = slot_of_source[u] + count;
  }

  WalkCorpus corpus;
  corpus.walks.resize(slot_of_source[n]);

  const auto run_source = [&](std::int32_t source) {
    const std::size_t base = slot_of_source[source];
    if (graph.degree(source) == 0) {
      corpus.walks[base] = {source};
      return;
    }
    for (std::int32_t w = 0; w < config.walks_per_node; ++w) {
      const std::uint64_t stream =
          static_cast<std::uint64_t>(source) *
              static_cast<std::uint64_t>(config.walks_per_node) +
          static_cast<std::uint64_t>(w);
      std::mt19937_64 rng(derive_seed(config.seed, stream));
      auto& walk = corpus.walks[base + w];
      walk.clear();
      walk.reserve(config.walk_length);
      walk.push_back(source);
      if (config.walk_length == 1) continue;
      std::int32_t cur = transitions.first_step(source, rng);
      walk.push_back(cur);
      std::int32_t prev = source;
      while (static_cast<std::int32_t>(walk.size()) < config.walk_length) {
        const std::int32_t next = transitions.sample(prev, cur, rng);
        walk.push_back(next);
        prev = cur;
        cur = next;
      }
    }
  };

  if (threads <= 1) {
    for (std::int32_t u = 0; u < n; ++u) run_source(u);
  } else {
    std::atomic<std::int32_t> next_source{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i)
      pool.emplace_back([&] {
        while (true) {
          const std::int32_t u = next_source.fetch_add(1);
          if (u >= n) return;
          run_source(u);
        }
      });
    for (auto& th : pool) th.join();
  }
  return corpus;
}

void dump_walks(std::ostream& out, const WalkCorpus& corpus) {
  for (const auto& walk : corpus.walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (i) out << ' ';
      out << walk[i];
    }
    out << '\n';
  }
}

namespace {

inline float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(-x)); }

struct SgnsPlan {
  AliasTable negative_table;
  std::vector<std::int32_t> table_to_entity;
  std::size_t pairs_per_epoch = 0;
};

SgnsPlan plan_sgns(const WalkCorpus& corpus, const SgnsConfig& cfg,
                   std::int32_t entity_count) {
  SgnsPlan plan;
  std::vector<std::size_t> freq(entity_count, 0);
  for (const auto& walk : corpus.walks) {
    const std::size_t len = walk.size();
    for (std::int32_t node : walk) ++freq[node];
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t w = static_cast<std::size_t>(cfg.window);
      plan.pairs_per_epoch += std::min(i, w) + std::min(len - 1 - i, w);
    }
  }
  std::vector<double> weights;
  for (std::int32_t e = 0; e < entity_count; ++e) {
    if (freq[e] == 0) continue;
    plan.table_to_entity.push_back(e);
    weights.push_back(std::pow(static_cast<double>(freq[e]), 0.75));
  }
  plan.negative_table.build(weights);
  return plan;
}

}  // namespace

RowMatrixF train_sgns(const WalkCorpus& corpus, const SgnsConfig& cfg,
                      std::int32_t entity_count, int threads,
                      SgnsStats* stats) {
  cfg.validate();
  if (corpus.walks.empty()) throw DimensionError("walk corpus is empty");

  const std::int32_t d = cfg.dim;
  RowMatrixF input(entity_count, d);
  RowMatrixF output = RowMatrixF::Zero(entity_count, d);
  {
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x1a17));
    std::uniform_real_distribution<float> unif(-0.5f / d, 0.5f / d);
    for (Eigen::Index i = 0; i < input.size(); ++i) input.data()[i] = unif(rng);
  }

  const SgnsPlan plan = plan_sgns(corpus, cfg, entity_count);
  const std::size_t total_pairs =
      plan.pairs_per_epoch * static_cast<std::size_t>(cfg.epochs);
  std::vector<char> touched(entity_count, 0);
  if (stats) stats->epoch_loss.assign(cfg.epochs, 0.0);

  std::atomic<std::size_t> processed{0};

  // One contiguous range of walks per worker; epoch order preserved.
  const auto run_range = [&](std::size_t walk_begin, std::size_t walk_end,
                             std::uint64_t stream, double* loss_sum,
                             std::size_t* loss_pairs) {
    std::mt19937_64 rng(derive_seed(cfg.seed, stream));
    std::vector<float> accum(d);
    for (std::size_t wi = walk_begin; wi < walk_end; ++wi) {
      const auto& walk = corpus.walks[wi];
      const std::int32_t len = static_cast<std::int32_t>(walk.size());
      for (std::int32_t i = 0; i < len; ++i) {
        const std::int32_t u = walk[i];
        const std::int32_t lo = std::max<std::int32_t>(0, i - cfg.window);
        const std::int32_t hi = std::min<std::int32_t>(len - 1, i + cfg.window);
        for (std::int32_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const std::int32_t v = walk[j];
          const std::size_t done =
              processed.fetch_add(1, std::memory_order_relaxed);
          const double frac =
              static_cast<double>(done) / static_cast<double>(total_pairs);
          const float lr = static_cast<float>(
              cfg.initial_lr * std::max(1.0 - frac, 1e-4));

          float* in_row = input.row(u).data();
          std::fill(accum.begin(), accum.end(), 0.0f);
          double pair_loss = 0.0;
          for (std::int32_t s = 0; s <= cfg.negatives; ++s) {
            std::int32_t target;
            float label;
            if (s == 0) {
              target = v;
              label = 1.0f;
            } else {
              target = plan.table_to_entity[plan.negative_table.sample(rng)];
              if (target == v) continue;
              label = 0.0f;
            }
            float* out_row = output.row(target).data();
            float dot = 0.0f;
            for (std::int32_t c = 0; c < d; ++c) dot += in_row[c] * out_row[c];
            const float f = sigmoidf(dot);
            pair_loss -= std::log(std::max(label == 1.0f ? f : 1.0f - f,
                                           1e-30f));
            const float g = (label - f) * lr;
            for (std::int32_t c = 0; c < d; ++c) {
              accum[c] += g * out_row[c];
              out_row[c] += g * in_row[c];
            }
            touched[target] = 1;
          }
          for (std::int32_t c = 0; c < d; ++c) in_row[c] += accum[c];
          touched[u] = 1;
          *loss_sum += pair_loss;
          ++*loss_pairs;
        }
      }
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t loss_pairs = 0;
    if (threads <= 1) {
      run_range(0, corpus.walks.size(),
                0x5346u + static_cast<std::uint64_t>(epoch), &loss_sum,
                &loss_pairs);
    } else {
      std::vector<std::thread> pool;
      std::vector<double> sums(threads, 0.0);
      std::vector<std::size_t> counts(threads, 0);
      const std::size_t per =
          (corpus.walks.size() + threads - 1) / static_cast<std::size_t>(threads);
      for (int t = 0; t < threads; ++t) {
        const std::size_t b = std::min(corpus.walks.size(), t * per);
        const std::size_t e = std::min(corpus.walks.size(), b + per);
        pool.emplace_back(run_range, b, e,
                          0x5346u + static_cast<std::uint64_t>(epoch) * 131 +
                              static_cast<std::uint64_t>(t),
                          &sums[t], &counts[t]);
      }
      for (auto& th : pool) th.join();
      for (int t = 0; t < threads; ++t) {
        loss_sum += sums[t];
        loss_pairs += counts[t];
      }
    }
    const double mean_loss =
        loss_pairs == 0 ? 0.0 : loss_sum / static_cast<double>(loss_pairs);
    if (!std::isfinite(mean_loss))
      throw NumericError("sgns loss became non-finite in epoch " +
                         std::to_string(epoch + 1));
    if (stats) stats->epoch_loss[epoch] = mean_loss;
  }

  if (!input.allFinite())
    throw NumericError("structural embeddings contain non-finite values");
  if (stats)
    stats->trained_entities = static_cast<std::size_t>(
        std::count(touched.begin(), touched.end(), 1));
  return input;
}

void export_embeddings_text(std::ostream& out, const Vocabulary& entities,
                            const RowMatrixF& embeddings) {
  char buf[48];
  for (std::int32_t e = 0; e < entities.size(); ++e) {
    out << entities.id_of(e);
    for (Eigen::Index c = 0; c < embeddings.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), " %.9g",
                    static_cast<double>(embeddings(e, c)));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace rpest
