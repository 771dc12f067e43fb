#include "rpest/text_encoder.hpp"

#include <cctype>
#include <charconv>
#include <istream>

namespace rpest {
namespace {

bool is_separator(char c) {
  return c == ' ' || c == '\t' || c == '_' || c == '-';
}

bool is_strippable_punct(unsigned char c) {
  return c < 0x80 && std::ispunct(c) && c != '_' && c != '-';
}

// Byte length of the UTF-8 sequence starting at s[i].
std::size_t codepoint_len(const std::string& s, std::size_t i) {
  const unsigned char c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) return 1;
  if ((c & 0xe0) == 0xc0) return 2;
  if ((c & 0xf0) == 0xe0) return 3;
  if ((c & 0xf8) == 0xf0) return 4;
  return 1;  // stray continuation byte, treat as one unit
}

}  // namespace

WordEmbeddings load_word_embeddings(std::istream& in, std::int32_t dim) {
  std::unordered_map<std::string, std::int32_t> vocabulary;
  std::vector<float> values;
  std::size_t duplicates = 0;
  std::string line;
  std::size_t lineno = 0;
  std::int32_t rows = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const std::size_t token_end = line.find(' ');
    if (token_end == std::string::npos || token_end == 0)
      throw ParseError(lineno, "expected token followed by floats");
    std::string token = line.substr(0, token_end);

    const std::size_t mark = values.size();
    const char* p = line.data() + token_end;
    const char* end = line.data() + line.size();
    std::int32_t count = 0;
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      float v = 0.0f;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc())
        throw ParseError(lineno, "unparsable float in vector");
      values.push_back(v);
      ++count;
      p = next;
    }
    if (count != dim) {
      values.resize(mark);
      throw ParseError(lineno, "expected " + std::to_string(dim) +
                                   " floats, got " + std::to_string(count));
    }

    auto [it, inserted] = vocabulary.try_emplace(std::move(token), rows);
    if (!inserted) {
      ++duplicates;
      values.resize(mark);  // first occurrence wins
      continue;
    }
    ++rows;
  }

  RowMatrixF matrix(rows, dim);
  std::copy(values.begin(), values.end(), matrix.data());
  return WordEmbeddings(std::move(vocabulary), std::move(matrix), duplicates);
}

std::vector<std::string> tokenize(const std::string& name) {
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    // Strip surrounding punctuation, then lowercase.
    std::size_t begin = 0, end = current.size();
    while (begin < end &&
           is_strippable_punct(static_cast<unsigned char>(current[begin])))
      ++begin;
    while (end > begin &&
           is_strippable_punct(static_cast<unsigned char>(current[end - 1])))
      --end;
    if (end > begin) {
      std::string token = current.substr(begin, end - begin);
      for (char& c : token)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      tokens.push_back(std::move(token));
    }
    current.clear();
  };
  for (char c : name) {
    if (is_separator(c))
      flush();
    else
      current.push_back(c);
  }
  flush();
  return tokens;
}

ResolvedWord resolve_word(const std::string& word, const WordEmbeddings& emb) {
  ResolvedWord out;
  const std::int32_t d = emb.dim();

  if (std::int32_t r = emb.row_of(word); r >= 0) {
    out.vector = emb.row(r);
    out.kind = Resolution::kDirect;
    return out;
  }

  // Longest proper prefix of length >= 2 present in the vocabulary.
  if (word.size() > 2) {
    for (std::size_t len = word.size() - 1; len >= 2; --len) {
      if (std::int32_t r = emb.row_of(word.substr(0, len)); r >= 0) {
        out.vector = emb.row(r);
        out.kind = Resolution::kLongestMatch;
        return out;
      }
    }
  }

  // Mean of the single-character vectors that exist.
  Eigen::RowVectorXf sum = Eigen::RowVectorXf::Zero(d);
  std::int32_t found = 0;
  std::size_t i = 0;
  while (i < word.size()) {
    const std::size_t len = codepoint_len(word, i);
    if (std::int32_t r = emb.row_of(word.substr(i, len)); r >= 0) {
      sum += emb.row(r);
      ++found;
    }
    i += len;
  }
  if (found > 0) {
    out.vector = sum / static_cast<float>(found);
    out.kind = Resolution::kLetterAverage;
  } else {
    out.vector = Eigen::RowVectorXf::Zero(d);
    out.kind = Resolution::kZero;
  }
  return out;
}

RowMatrixF encode_text(const std::vector<std::string>& tokens,
                       const WordEmbeddings& emb, std::int32_t n) {
  RowMatrixF rows = RowMatrixF::Zero(n, emb.dim());
  const std::int32_t used =
      std::min<std::int32_t>(static_cast<std::int32_t>(tokens.size()), n);
  for (std::int32_t i = 0; i < used; ++i)
    rows.row(i) = resolve_word(tokens[i], emb).vector;
  return rows;
}

NodeRepresentation assemble_node(
    const RowMatrixF& text_rows,
    Eigen::Ref<const Eigen::RowVectorXf> structural, Role role,
    double direction_scale) {
  if (text_rows.cols() != structural.cols())
    throw DimensionError(
        "text row width " + std::to_string(text_rows.cols()) +
        " != structural width " + std::to_string(structural.cols()));

  const std::int32_t n = static_cast<std::int32_t>(text_rows.rows());
  const std::int32_t d = static_cast<std::int32_t>(text_rows.cols());
  NodeRepresentation rep;
  rep.role = role;
  rep.rows.resize(n + 2, d);
  const double c = role == Role::kHead ? direction_scale : -direction_scale;
  rep.rows.row(0).setConstant(c);
  rep.rows.block(1, 0, n, d) = text_rows.cast<double>();
  rep.rows.row(n + 1) = structural.cast<double>();
  return rep;
}

OovCounts scan_names(const KnowledgeGraph& graph, const NameMap& names,
                     const WordEmbeddings& emb) {
  OovCounts counts;
  for (const auto& id : graph.entities.ids()) {
    bool mapped = false;
    const std::string& name = names.resolve(id, mapped);
    if (!mapped) ++counts.unmapped_names;
    for (const auto& token : tokenize(name)) {
      switch (resolve_word(token, emb).kind) {
        case Resolution::kDirect: ++counts.direct; break;
        case Resolution::kLongestMatch: ++counts.longest_match; break;
        case Resolution::kLetterAverage: ++counts.letter_average; break;
        case Resolution::kZero: ++counts.zero; break;
      }
    }
  }
  return counts;
}

NodeEncoder::NodeEncoder(const KnowledgeGraph& graph, const NameMap& names,
                         const WordEmbeddings& words,
                         const RowMatrixF& structural, std::int32_t padding,
                         double direction_scale, bool use_structural)
    : structural_(&structural),
      padding_(padding),
      dim_(words.dim()),
      direction_scale_(direction_scale),
      use_structural_(use_structural) {
  if (use_structural_) {
    if (structural.rows() != graph.entities.size())
      throw DimensionError("structural table has " +
                           std::to_string(structural.rows()) +
                           " rows for " +
                           std::to_string(graph.entities.size()) + " entities");
    if (structural.cols() != dim_)
      throw DimensionError("structural width " +
                           std::to_string(structural.cols()) +
                           " != word vector width " + std::to_string(dim_));
  }

  token_vectors_.resize(graph.entities.size());
  for (std::int32_t e = 0; e < graph.entities.size(); ++e) {
    bool mapped = false;
    const std::string& name = names.resolve(graph.entities.id_of(e), mapped);
    if (!mapped) ++oov_.unmapped_names;
    const auto tokens = tokenize(name);
    auto& vecs = token_vectors_[e];
    vecs.reserve(std::min<std::size_t>(tokens.size(), padding_));
    for (const auto& token : tokens) {
      auto resolved = resolve_word(token, words);
      switch (resolved.kind) {
        case Resolution::kDirect: ++oov_.direct; break;
        case Resolution::kLongestMatch: ++oov_.longest_match; break;
        case Resolution::kLetterAverage: ++oov_.letter_average; break;
        case Resolution::kZero: ++oov_.zero; break;
      }
      if (static_cast<std::int32_t>(vecs.size()) < padding_)
        vecs.push_back(std::move(resolved.vector));
    }
  }
}

Matrix NodeEncoder::encode(std::int32_t entity, Role role) const {
  Matrix rows = Matrix::Zero(padding_ + 2, dim_);
  rows.row(0).setConstant(role == Role::kHead ? direction_scale_
                                              : -direction_scale_);
  const auto& vecs = token_vectors_[entity];
  for (std::size_t i = 0; i < vecs.size(); ++i)
    rows.row(1 + static_cast<Eigen::Index>(i)) = vecs[i].cast<double>();
  if (use_structural_)
    rows.row(padding_ + 1) = structural_->row(entity).cast<double>();
  return rows;
}

}  // namespace rpest
