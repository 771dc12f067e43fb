#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rpest/common.hpp"

namespace rpest {

// One directed fact. Direction matters: (t, r, h) is a different fact
// than (h, r, t).
struct Triple {
  std::string head;
  std::string relation;
  std::string tail;

  bool operator==(const Triple&) const = default;
};

// Vocabulary-index form used everywhere past graph construction.
struct IndexedTriple {
  std::int32_t head = 0;
  std::int32_t relation = 0;
  std::int32_t tail = 0;

  bool operator==(const IndexedTriple&) const = default;
};

enum class Split { kTrain = 0, kValid = 1, kTest = 2 };

// Ordered id <-> index bijection, first-appearance order.
class Vocabulary {
 public:
  std::int32_t intern(const std::string& id);
  std::int32_t index_of(const std::string& id) const;  // -1 when absent
  const std::string& id_of(std::int32_t index) const { return ids_[index]; }
  std::int32_t size() const { return static_cast<std::int32_t>(ids_.size()); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::int32_t> index_;
};

// Dataset model: vocabularies over all splits, indexed triples per split,
// and undirected train-only adjacency (sorted, deduplicated neighbor
// lists). Immutable after build_graph; safe to share across threads.
struct KnowledgeGraph {
  Vocabulary entities;
  Vocabulary relations;
  std::vector<IndexedTriple> train;
  std::vector<IndexedTriple> valid;
  std::vector<IndexedTriple> test;
  std::vector<std::vector<std::int32_t>> adjacency;

  const std::vector<IndexedTriple>& split(Split s) const {
    switch (s) {
      case Split::kTrain: return train;
      case Split::kValid: return valid;
      default: return test;
    }
  }

  bool adjacent(std::int32_t u, std::int32_t v) const;
  std::int32_t degree(std::int32_t u) const {
    return static_cast<std::int32_t>(adjacency[u].size());
  }
};

// entity-id -> human-readable name; unmapped ids fall back to the raw id.
class NameMap {
 public:
  void insert(const std::string& id, std::string name);
  // Returns the mapped name, or `id` itself with mapped=false.
  const std::string& resolve(const std::string& id, bool& mapped) const;
  std::size_t size() const { return names_.size(); }
  std::size_t overwrite_count() const { return overwrites_; }

 private:
  std::unordered_map<std::string, std::string> names_;
  std::size_t overwrites_ = 0;
};

// (head, tail) -> sorted relation indices. Built from whichever splits
// the caller passes; evaluation uses all three, training targets use
// the train split only.
class PairRelationIndex {
 public:
  static PairRelationIndex build(
      std::span<const std::vector<IndexedTriple>* const> splits);
  static PairRelationIndex build_all(const KnowledgeGraph& graph);
  static PairRelationIndex build_train(const KnowledgeGraph& graph);

  std::span<const std::int32_t> relations_for(std::int32_t head,
                                              std::int32_t tail) const;
  bool contains(std::int32_t head, std::int32_t tail,
                std::int32_t relation) const;
  std::size_t pair_count() const { return index_.size(); }

  template <class Fn>  // Fn(head, tail, span<relations>)
  void for_each_pair(Fn&& fn) const {
    for (const auto& [key, rels] : index_)
      fn(static_cast<std::int32_t>(key >> 32),
         static_cast<std::int32_t>(key & 0xffffffffu),
         std::span<const std::int32_t>(rels));
  }

 private:
  static std::uint64_t key(std::int32_t head, std::int32_t tail) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(head))
            << 32) |
           static_cast<std::uint32_t>(tail);
  }
  std::unordered_map<std::uint64_t, std::vector<std::int32_t>> index_;
};

// Reads head<TAB>relation<TAB>tail lines (UTF-8, LF or CRLF). Blank
// lines are skipped; anything else malformed raises ParseError with the
// 1-based line number.
std::vector<Triple> parse_triples(std::istream& in);

// Inverse of parse_triples, used for round-trip checks and fixtures.
void write_triples(std::ostream& out, std::span<const Triple> triples);

// Vocabularies cover all splits in first-appearance order (train, then
// valid, then test; head before tail within a triple). Adjacency comes
// from train triples only.
KnowledgeGraph build_graph(std::span<const Triple> train,
                           std::span<const Triple> valid,
                           std::span<const Triple> test);

// Reads entity-id<TAB>name lines. Later duplicates overwrite earlier
// ones; the overwrite count is kept on the map.
NameMap load_names(std::istream& in);

}  // namespace rpest
