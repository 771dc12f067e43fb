#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "rpest/common.hpp"
#include "rpest/kg.hpp"

namespace rpest {

// Pre-trained word -> vector table. Immutable after load.
class WordEmbeddings {
 public:
  WordEmbeddings(std::unordered_map<std::string, std::int32_t> vocabulary,
                 RowMatrixF matrix, std::size_t duplicate_count)
      : vocabulary_(std::move(vocabulary)),
        matrix_(std::move(matrix)),
        duplicates_(duplicate_count) {}

  std::int32_t row_of(const std::string& word) const {
    auto it = vocabulary_.find(word);
    return it == vocabulary_.end() ? -1 : it->second;
  }
  Eigen::Map<const Eigen::RowVectorXf> row(std::int32_t r) const {
    return {matrix_.row(r).data(), matrix_.cols()};
  }
  std::int32_t dim() const { return static_cast<std::int32_t>(matrix_.cols()); }
  std::int32_t size() const { return static_cast<std::int32_t>(matrix_.rows()); }
  std::size_t duplicate_count() const { return duplicates_; }
  const RowMatrixF& matrix() const { return matrix_; }
  const std::unordered_map<std::string, std::int32_t>& vocabulary() const {
    return vocabulary_;
  }

 private:
  std::unordered_map<std::string, std::int32_t> vocabulary_;
  RowMatrixF matrix_;
  std::size_t duplicates_;
};

// Reads the standard text distribution: one token plus `dim`
// space-separated floats per line. First occurrence of a duplicated
// token wins; the duplicate count is kept on the table.
WordEmbeddings load_word_embeddings(std::istream& in, std::int32_t dim);

// How a word was mapped to a vector.
enum class Resolution : std::uint8_t {
  kDirect,         // exact vocabulary hit
  kLongestMatch,   // longest prefix (length >= 2) found in the vocabulary
  kLetterAverage,  // mean of the single-character vectors that exist
  kZero,           // no characters found either; zero vector
};

struct ResolvedWord {
  Eigen::RowVectorXf vector;
  Resolution kind = Resolution::kZero;
};

// Lowercases, splits on whitespace / underscores / hyphens, strips
// surrounding punctuation from each piece. May return an empty list.
std::vector<std::string> tokenize(const std::string& name);

// Total function: every non-empty normalized word gets a finite vector.
ResolvedWord resolve_word(const std::string& word, const WordEmbeddings& emb);

// First min(|tokens|, n) rows are the resolved vectors in token order;
// the rest are exactly zero.
RowMatrixF encode_text(const std::vector<std::string>& tokens,
                       const WordEmbeddings& emb, std::int32_t n);

enum class Role : std::uint8_t { kHead, kTail };

// (n+2) x d block for one node: [direction row; n word rows;
// structural row]. The direction row is +scale for heads, -scale for
// tails, replicated across all d columns.
struct NodeRepresentation {
  Matrix rows;
  Role role = Role::kHead;
};

NodeRepresentation assemble_node(const RowMatrixF& text_rows,
                                 Eigen::Ref<const Eigen::RowVectorXf> structural,
                                 Role role, double direction_scale = 1.0);

struct OovCounts {
  std::size_t direct = 0;
  std::size_t longest_match = 0;
  std::size_t letter_average = 0;
  std::size_t zero = 0;
  std::size_t unmapped_names = 0;  // entities that fell back to the raw id

  std::size_t total_words() const {
    return direct + longest_match + letter_average + zero;
  }
  // Fraction of word occurrences not resolved by an exact hit.
  double oov_rate() const {
    const std::size_t t = total_words();
    return t == 0 ? 0.0 : 1.0 - static_cast<double>(direct) / t;
  }
};

// Scans every entity name once and tallies resolution kinds.
OovCounts scan_names(const KnowledgeGraph& graph, const NameMap& names,
                     const WordEmbeddings& emb);

// Bundles everything needed to turn an entity index into its (n+2) x d
// block: names, word vectors, structural vectors, padding length, and
// the ablation switch that zeroes structural rows. Token vectors are
// resolved once per entity up front; encode() is then pure and
// thread-safe.
class NodeEncoder {
 public:
  NodeEncoder(const KnowledgeGraph& graph, const NameMap& names,
              const WordEmbeddings& words, const RowMatrixF& structural,
              std::int32_t padding, double direction_scale = 1.0,
              bool use_structural = true);

  Matrix encode(std::int32_t entity, Role role) const;
  std::int32_t padding() const { return padding_; }
  std::int32_t dim() const { return dim_; }
  std::int32_t rows_per_node() const { return padding_ + 2; }
  const OovCounts& oov_counts() const { return oov_; }

 private:
  const RowMatrixF* structural_;
  std::vector<std::vector<Eigen::RowVectorXf>> token_vectors_;
  std::int32_t padding_;
  std::int32_t dim_;
  double direction_scale_;
  bool use_structural_;
  OovCounts oov_;
};

}  // namespace rpest
