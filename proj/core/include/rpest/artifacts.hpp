#pragma once

#include <string>

#include "rpest/kg.hpp"
#include "rpest/text_encoder.hpp"

namespace rpest {

// Binary artifact round-trips, all in the RPST container format.
// Writes are deterministic: identical inputs give identical bytes.

void save_dataset_cache(const std::string& path, const KnowledgeGraph& graph);
KnowledgeGraph load_dataset_cache(const std::string& path);

void save_word_vector_cache(const std::string& path,
                            const WordEmbeddings& emb);
WordEmbeddings load_word_vector_cache(const std::string& path);

void save_embedding_cache(const std::string& path, const Vocabulary& entities,
                          const RowMatrixF& embeddings);
// Validates the cached entity list against the graph's vocabulary.
RowMatrixF load_embedding_cache(const std::string& path,
                                const KnowledgeGraph& graph);

}  // namespace rpest
