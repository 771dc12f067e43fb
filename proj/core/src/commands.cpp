#include "rpest/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "rpest/artifacts.hpp"
#include "rpest/eval.hpp"
#include "rpest/model.hpp"
#include "rpest/node2vec.hpp"

namespace rpest {
namespace {

namespace fs = std::filesystem;

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in)
    throw IoError(std::string("cannot open ") + what + ": " + path);
  return in;
}

// Re-throws parse errors with the offending file named.
template <class Fn>
auto with_file_context(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::vector<Triple> read_triples(const std::string& path) {
  auto in = open_input(path, "triple file");
  return with_file_context(path, [&] { return parse_triples(in); });
}

NameMap read_names(const std::string& path) {
  auto in = open_input(path, "name map");
  return with_file_context(path, [&] { return load_names(in); });
}

WordEmbeddings read_word_vectors(const std::string& path, std::int32_t dim) {
  auto in = open_input(path, "word vector file");
  return with_file_context(path,
                           [&] { return load_word_embeddings(in, dim); });
}

KnowledgeGraph require_dataset_cache(const RunConfig& config) {
  const std::string path = config.dataset_cache();
  if (!fs::exists(path))
    throw PrerequisiteError("missing dataset cache " + path +
                            "; run `rpest prepare` first");
  return load_dataset_cache(path);
}

WordEmbeddings require_word_cache(const RunConfig& config) {
  const std::string path = config.word_vector_cache();
  if (!fs::exists(path))
    throw PrerequisiteError("missing word vector cache " + path +
                            "; run `rpest prepare` first");
  return load_word_vector_cache(path);
}

RowMatrixF require_structural(const RunConfig& config,
                              const KnowledgeGraph& graph) {
  if (config.text_only)
    return RowMatrixF::Zero(graph.entities.size(), config.dim);
  const std::string path = config.embedding_cache();
  if (!fs::exists(path))
    throw PrerequisiteError("missing structural embeddings " + path +
                            "; run `rpest train-structural` first");
  RowMatrixF m = load_embedding_cache(path, graph);
  if (m.cols() != config.dim)
    throw DimensionError("structural embeddings are " +
                         std::to_string(m.cols()) + "-wide, config says " +
                         std::to_string(config.dim));
  return m;
}

ModelParams require_checkpoint(const std::string& path,
                               const KnowledgeGraph& graph) {
  if (!fs::exists(path))
    throw PrerequisiteError("missing checkpoint " + path +
                            "; run `rpest train` first");
  std::vector<std::string> relations;
  ModelParams params = load_checkpoint(path, &relations);
  if (static_cast<std::int32_t>(relations.size()) != graph.relations.size())
    throw DimensionError(
        "checkpoint has " + std::to_string(relations.size()) +
        " relations, dataset has " + std::to_string(graph.relations.size()));
  for (std::int32_t r = 0; r < graph.relations.size(); ++r)
    if (relations[r] != graph.relations.id_of(r))
      throw DimensionError("checkpoint relation vocabulary does not match "
                           "the dataset (first difference at index " +
                           std::to_string(r) + ")");
  return params;
}

ModelConfig model_config(const RunConfig& config,
                         const KnowledgeGraph& graph) {
  ModelConfig m;
  m.input_dim = config.dim;
  m.hidden = config.hidden;
  m.attention_dim = config.attention_dim;
  m.layers = config.lstm_layers;
  m.relations = graph.relations.size();
  return m;
}

void print_metrics(std::ostream& out, const Metrics& m, double seconds) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "mean rank %.4f | hits@1 %.2f%% | filtered mean rank %.4f | "
                "filtered hits@1 %.2f%% (%zu triples)",
                m.mean_rank, m.hits_at_1, m.filtered_mean_rank,
                m.filtered_hits_at_1, m.triple_count);
  out << buf << '\n';
  out << "metric.mean_rank=" << m.mean_rank << '\n'
      << "metric.hits_at_1=" << m.hits_at_1 << '\n'
      << "metric.filtered_mean_rank=" << m.filtered_mean_rank << '\n'
      << "metric.filtered_hits_at_1=" << m.filtered_hits_at_1 << '\n'
      << "metric.triple_count=" << m.triple_count << '\n'
      << "metric.seconds=" << seconds << '\n';
}

}  // namespace

void cmd_prepare(const RunConfig& config, std::ostream& out) {
  config.echo(out);

  const auto train = read_triples(config.train_path);
  const auto valid = read_triples(config.valid_path);
  const auto test = read_triples(config.test_path);
  if (train.empty())
    throw PrerequisiteError("training split is empty: " + config.train_path);

  const KnowledgeGraph graph = build_graph(train, valid, test);
  const NameMap names = read_names(config.names_path);
  const WordEmbeddings words =
      read_word_vectors(config.word_vectors_path, config.dim);
  const OovCounts oov = scan_names(graph, names, words);

  fs::create_directories(config.work_dir);
  save_dataset_cache(config.dataset_cache(), graph);
  save_word_vector_cache(config.word_vector_cache(), words);

  out << "stats.entities=" << graph.entities.size() << '\n'
      << "stats.relations=" << graph.relations.size() << '\n'
      << "stats.train_triples=" << graph.train.size() << '\n'
      << "stats.valid_triples=" << graph.valid.size() << '\n'
      << "stats.test_triples=" << graph.test.size() << '\n'
      << "stats.name_entries=" << names.size() << '\n'
      << "stats.name_overwrites=" << names.overwrite_count() << '\n'
      << "stats.unmapped_names=" << oov.unmapped_names << '\n'
      << "stats.word_vectors=" << words.size() << '\n'
      << "stats.word_vector_duplicates=" << words.duplicate_count() << '\n'
      << "oov.direct=" << oov.direct << '\n'
      << "oov.longest_match=" << oov.longest_match << '\n'
      << "oov.letter_average=" << oov.letter_average << '\n'
      << "oov.zero=" << oov.zero << '\n'
      << "oov.rate_percent=" << 100.0 * oov.oov_rate() << '\n';
  out << "wrote " << config.dataset_cache() << '\n'
      << "wrote " << config.word_vector_cache() << '\n';
}

void cmd_train_structural(const RunConfig& config, std::ostream& out) {
  config.echo(out);
  const KnowledgeGraph graph = require_dataset_cache(config);
  fs::create_directories(config.work_dir);

  if (config.text_only) {
    const RowMatrixF zeros =
        RowMatrixF::Zero(graph.entities.size(), config.dim);
    save_embedding_cache(config.embedding_cache(), graph.entities, zeros);
    std::ofstream text(config.embedding_text());
    export_embeddings_text(text, graph.entities, zeros);
    out << "ablation=text-only: structural training skipped, wrote zero "
           "matrix artifact\n";
    out << "wrote " << config.embedding_cache() << '\n';
    return;
  }

  WalkConfig wcfg = config.walks;
  SgnsConfig scfg = config.sgns;

  const auto transitions =
      TransitionTables::build(graph, wcfg.p, wcfg.q);
  const WalkCorpus corpus =
      generate_walks(graph, transitions, wcfg, config.threads);
  out << "walks.count=" << corpus.walks.size() << '\n'
      << "walks.tokens=" << corpus.token_count() << '\n';
  if (!config.walk_dump_path.empty()) {
    std::ofstream dump(config.walk_dump_path);
    if (!dump) throw IoError("cannot write " + config.walk_dump_path);
    dump_walks(dump, corpus);
    out << "wrote " << config.walk_dump_path << '\n';
  }

  SgnsStats stats;
  const RowMatrixF embeddings = train_sgns(
      corpus, scfg, graph.entities.size(), config.threads, &stats);
  for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e)
    out << "sgns.epoch=" << e + 1 << " loss=" << stats.epoch_loss[e] << '\n';
  out << "sgns.entities_updated=" << stats.trained_entities << '\n'
      << "sgns.entities_kept_initialization="
      << graph.entities.size() - static_cast<std::int64_t>(stats.trained_entities)
      << '\n';

  save_embedding_cache(config.embedding_cache(), graph.entities, embeddings);
  std::ofstream text(config.embedding_text());
  if (!text) throw IoError("cannot write " + config.embedding_text());
  export_embeddings_text(text, graph.entities, embeddings);
  out << "wrote " << config.embedding_cache() << '\n'
      << "wrote " << config.embedding_text() << '\n';
}

void cmd_train(const RunConfig& config, std::ostream& out) {
  config.echo(out);
  const KnowledgeGraph graph = require_dataset_cache(config);
  const WordEmbeddings words = require_word_cache(config);
  const NameMap names = read_names(config.names_path);
  const RowMatrixF structural = require_structural(config, graph);

  const NodeEncoder encoder(graph, names, words, structural, config.padding,
                            config.direction_scale, !config.text_only);
  const ModelConfig mcfg = model_config(config, graph);

  std::ofstream log_file(config.training_log_path());
  if (!log_file) throw IoError("cannot write " + config.training_log_path());

  struct Tee : std::ostream, std::streambuf {
    std::ostream& a;
    std::ostream& b;
    Tee(std::ostream& a, std::ostream& b) : std::ostream(this), a(a), b(b) {}
    int overflow(int c) override {
      if (c != EOF) {
        a.put(static_cast<char>(c));
        b.put(static_cast<char>(c));
      }
      return c;
    }
  } tee(out, log_file);

  const TrainResult result = train(graph, encoder, mcfg, config.training, &tee);
  save_checkpoint(config.checkpoint_path(), result.params, graph.relations);
  out << "best_epoch=" << result.best_epoch << '\n'
      << "wrote " << config.checkpoint_path() << '\n'
      << "wrote " << config.training_log_path() << '\n';

  if (!result.log.empty()) {
    double total = 0.0;
    for (const auto& e : result.log) total += e.seconds;
    out << "epoch_seconds_mean=" << total / result.log.size() << '\n';
  }
  if (result.diverged)
    throw NumericError(
        "training diverged (non-finite loss); best checkpoint retained at " +
        config.checkpoint_path());
}

void cmd_evaluate(const RunConfig& config, const std::string& checkpoint,
                  std::ostream& out) {
  config.echo(out);
  const KnowledgeGraph graph = require_dataset_cache(config);
  const WordEmbeddings words = require_word_cache(config);
  const NameMap names = read_names(config.names_path);
  const RowMatrixF structural = require_structural(config, graph);
  const ModelParams params = require_checkpoint(checkpoint, graph);

  const NodeEncoder encoder(graph, names, words, structural, config.padding,
                            config.direction_scale, !config.text_only);
  const PairRelationIndex index = PairRelationIndex::build_all(graph);

  const auto started = std::chrono::steady_clock::now();
  const Metrics metrics = evaluate(
      [&](std::int32_t h, std::int32_t t) {
        return score_pair(h, t, params, encoder);
      },
      graph.test, index, config.threads);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  print_metrics(out, metrics, seconds);
}

void cmd_predict(const RunConfig& config, const std::string& checkpoint,
                 const std::string& head_id, const std::string& tail_id,
                 std::int32_t top_m, std::ostream& out) {
  config.echo(out);
  const KnowledgeGraph graph = require_dataset_cache(config);
  const WordEmbeddings words = require_word_cache(config);
  const NameMap names = read_names(config.names_path);
  const RowMatrixF structural = require_structural(config, graph);
  const ModelParams params = require_checkpoint(checkpoint, graph);

  const NodeEncoder encoder(graph, names, words, structural, config.padding,
                            config.direction_scale, !config.text_only);
  const auto ranked = predict(head_id, tail_id, params, encoder, graph);

  std::int32_t m = top_m;
  if (m > static_cast<std::int32_t>(ranked.size())) {
    out << "note: requested top " << top_m << " of " << ranked.size()
        << " relations; printing all\n";
    m = static_cast<std::int32_t>(ranked.size());
  }
  char buf[64];
  for (std::int32_t i = 0; i < m; ++i) {
    std::snprintf(buf, sizeof(buf), "%4d  p=%.6f  ", i + 1,
                  ranked[i].probability);
    out << buf << graph.relations.id_of(ranked[i].relation) << '\n';
  }
}

}  // namespace rpest
