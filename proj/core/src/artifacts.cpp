#include "rpest/artifacts.hpp"

#include "rpest/tensor_file.hpp"

namespace rpest {
namespace {

// Triple indices ride in float32 payloads; exact only below 2^24.
constexpr std::int32_t kMaxExactIndex = 1 << 24;

NamedTensor triples_tensor(const std::string& name,
                           const std::vector<IndexedTriple>& triples) {
  NamedTensor t;
  t.name = name;
  t.dims = {static_cast<std::uint32_t>(triples.size()), 3};
  t.data.reserve(triples.size() * 3);
  for (const auto& triple : triples) {
    if (triple.head >= kMaxExactIndex || triple.tail >= kMaxExactIndex ||
        triple.relation >= kMaxExactIndex)
      throw DimensionError("vocabulary too large for the dataset cache");
    t.data.push_back(static_cast<float>(triple.head));
    t.data.push_back(static_cast<float>(triple.relation));
    t.data.push_back(static_cast<float>(triple.tail));
  }
  return t;
}

std::vector<IndexedTriple> triples_from_tensor(const NamedTensor& t) {
  if (t.dims.size() != 2 || t.dims[1] != 3)
    throw IoError("tensor '" + t.name + "' is not an N x 3 triple table");
  std::vector<IndexedTriple> triples(t.dims[0]);
  for (std::size_t i = 0; i < triples.size(); ++i) {
    triples[i].head = static_cast<std::int32_t>(t.data[3 * i]);
    triples[i].relation = static_cast<std::int32_t>(t.data[3 * i + 1]);
    triples[i].tail = static_cast<std::int32_t>(t.data[3 * i + 2]);
  }
  return triples;
}

NamedTensor scalar_tensor(const std::string& name, std::uint32_t value) {
  return {name, {1}, {static_cast<float>(value)}};
}

}  // namespace

void save_dataset_cache(const std::string& path, const KnowledgeGraph& graph) {
  TensorFile file;
  file.vocab.reserve(graph.entities.size() + graph.relations.size());
  for (const auto& id : graph.entities.ids()) file.vocab.push_back(id);
  for (const auto& id : graph.relations.ids()) file.vocab.push_back(id);
  file.tensors.push_back(
      scalar_tensor("entity_count", graph.entities.size()));
  file.tensors.push_back(
      scalar_tensor("relation_count", graph.relations.size()));
  file.tensors.push_back(triples_tensor("train_triples", graph.train));
  file.tensors.push_back(triples_tensor("valid_triples", graph.valid));
  file.tensors.push_back(triples_tensor("test_triples", graph.test));
  file.save(path);
}

KnowledgeGraph load_dataset_cache(const std::string& path) {
  const TensorFile file = TensorFile::load(path);
  const std::size_t entity_count =
      static_cast<std::size_t>(file.require("entity_count").data.at(0));
  const std::size_t relation_count =
      static_cast<std::size_t>(file.require("relation_count").data.at(0));
  if (file.vocab.size() != entity_count + relation_count)
    throw IoError("dataset cache vocabulary does not match its counts");

  KnowledgeGraph graph;
  for (std::size_t i = 0; i < entity_count; ++i)
    graph.entities.intern(file.vocab[i]);
  for (std::size_t i = 0; i < relation_count; ++i)
    graph.relations.intern(file.vocab[entity_count + i]);
  graph.train = triples_from_tensor(file.require("train_triples"));
  graph.valid = triples_from_tensor(file.require("valid_triples"));
  graph.test = triples_from_tensor(file.require("test_triples"));

  graph.adjacency.resize(graph.entities.size());
  for (const auto& t : graph.train) {
    if (t.head == t.tail) continue;
    graph.adjacency[t.head].push_back(t.tail);
    graph.adjacency[t.tail].push_back(t.head);
  }
  for (auto& nbrs : graph.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return graph;
}

void save_word_vector_cache(const std::string& path,
                            const WordEmbeddings& emb) {
  TensorFile file;
  file.vocab.resize(emb.size());
  for (const auto& [word, row] : emb.vocabulary()) file.vocab[row] = word;
  file.tensors.push_back(tensor_from_rowmajor("vectors", emb.matrix()));
  file.save(path);
}

WordEmbeddings load_word_vector_cache(const std::string& path) {
  const TensorFile file = TensorFile::load(path);
  RowMatrixF matrix = rowmajor_from_tensor(file.require("vectors"));
  if (static_cast<std::size_t>(matrix.rows()) != file.vocab.size())
    throw IoError("word vector cache vocabulary does not match its matrix");
  std::unordered_map<std::string, std::int32_t> vocabulary;
  vocabulary.reserve(file.vocab.size());
  for (std::size_t i = 0; i < file.vocab.size(); ++i)
    vocabulary.emplace(file.vocab[i], static_cast<std::int32_t>(i));
  return WordEmbeddings(std::move(vocabulary), std::move(matrix), 0);
}

void save_embedding_cache(const std::string& path, const Vocabulary& entities,
                          const RowMatrixF& embeddings) {
  TensorFile file;
  file.vocab = entities.ids();
  file.tensors.push_back(tensor_from_rowmajor("embeddings", embeddings));
  file.save(path);
}

RowMatrixF load_embedding_cache(const std::string& path,
                                const KnowledgeGraph& graph) {
  const TensorFile file = TensorFile::load(path);
  RowMatrixF m = rowmajor_from_tensor(file.require("embeddings"));
  if (m.rows() != graph.entities.size())
    throw DimensionError(
        "structural cache has " + std::to_string(m.rows()) +
        " entities, dataset has " + std::to_string(graph.entities.size()));
  for (std::int32_t i = 0; i < graph.entities.size(); ++i)
    if (file.vocab[i] != graph.entities.id_of(i))
      throw DimensionError("structural cache entity order does not match "
                           "the dataset cache");
  return m;
}

}  // namespace rpest
