#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "rpest/model.hpp"
#include "rpest/node2vec.hpp"

namespace rpest {

// Fully resolved run configuration. Defaults reproduce the reference
// training settings; a flat key=value file and CLI flags override them.
struct RunConfig {
  // Input paths.
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string names_path;
  std::string word_vectors_path;
  std::string work_dir = "work";

  // Representation.
  std::int32_t dim = 300;      // word/structural vector width
  std::int32_t padding = 40;   // word rows per node
  double direction_scale = 1.0;

  // Structural embedding phase.
  WalkConfig walks;            // length 50, 50 per node, p = q = 1
  SgnsConfig sgns;             // window 10, negatives 5, epochs 5, lr 0.025
  std::string walk_dump_path;  // optional corpus dump, empty = off

  // Prediction network.
  std::int32_t hidden = 400;
  std::int32_t attention_dim = 256;
  std::int32_t lstm_layers = 2;
  TrainConfig training;        // epochs 50, patience 5, batch 32, lr 0.0008

  // Run behaviour.
  std::uint64_t seed = 42;
  int threads = 1;
  bool text_only = false;      // ablation: zero structural rows

  // Applies one key=value assignment; unknown keys throw ParseError
  // with the supplied line number.
  void set(const std::string& key, const std::string& value,
           std::size_t lineno = 0);

  // Pushes the top-level seed/threads into the phase configs.
  void finalize();

  void echo(std::ostream& out) const;

  // Derived artifact locations under work_dir.
  std::string dataset_cache() const;
  std::string word_vector_cache() const;
  std::string embedding_cache() const;
  std::string embedding_text() const;
  std::string checkpoint_path() const;
  std::string training_log_path() const;
};

// Reads a flat key=value file ('#' comments and blank lines allowed).
RunConfig load_config(const std::string& path);
void apply_config_stream(std::istream& in, RunConfig& config);

}  // namespace rpest
