#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "rpest/config.hpp"

namespace rpest {

// Subcommand entry points. Each echoes the resolved config, runs its
// stage, and throws a typed error on failure; the binary maps those to
// exit codes.

// Parses the splits, validates the name map and word vectors, writes
// the dataset and word-vector caches, prints dataset stats and the OOV
// breakdown.
void cmd_prepare(const RunConfig& config, std::ostream& out);

// Biased walks + skip-gram training; writes the structural embedding
// artifact as both text and binary cache. Under the text-only ablation
// it writes a zero matrix and reports the skip.
void cmd_train_structural(const RunConfig& config, std::ostream& out);

// Trains the relation predictor; persists the best checkpoint and the
// per-epoch log.
void cmd_train(const RunConfig& config, std::ostream& out);

// Filtered/raw mean rank and Hits@1 over the test split.
void cmd_evaluate(const RunConfig& config, const std::string& checkpoint,
                  std::ostream& out);

// Top-m relations for one entity pair.
void cmd_predict(const RunConfig& config, const std::string& checkpoint,
                 const std::string& head_id, const std::string& tail_id,
                 std::int32_t top_m, std::ostream& out);

}  // namespace rpest
