#include "rpest/kg.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace rpest {
namespace {

// Validates UTF-8 byte sequences (RFC 3629: no overlongs, no surrogates,
// max U+10FFFF).
bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  const auto cont = [&](std::size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xc0) == 0x80;
  };
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      i += 1;
    } else if ((c & 0xe0) == 0xc0) {
      if (c < 0xc2 || !cont(1)) return false;
      i += 2;
    } else if ((c & 0xf0) == 0xe0) {
      if (!cont(1) || !cont(2)) return false;
      const unsigned char c1 = static_cast<unsigned char>(s[i + 1]);
      if (c == 0xe0 && c1 < 0xa0) return false;
      if (c == 0xed && c1 >= 0xa0) return false;
      i += 3;
    } else if ((c & 0xf8) == 0xf0) {
      if (c > 0xf4 || !cont(1) || !cont(2) || !cont(3)) return false;
      const unsigned char c1 = static_cast<unsigned char>(s[i + 1]);
      if (c == 0xf0 && c1 < 0x90) return false;
      if (c == 0xf4 && c1 >= 0x90) return false;
      i += 4;
    } else {
      return false;
    }
  }
  return true;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::int32_t Vocabulary::intern(const std::string& id) {
  auto [it, inserted] =
      index_.try_emplace(id, static_cast<std::int32_t>(ids_.size()));
  if (inserted) ids_.push_back(id);
  return it->second;
}

std::int32_t Vocabulary::index_of(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

bool KnowledgeGraph::adjacent(std::int32_t u, std::int32_t v) const {
  const auto& nbrs = adjacency[u];
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

void NameMap::insert(const std::string& id, std::string name) {
  auto [it, inserted] = names_.try_emplace(id, std::move(name));
  if (!inserted) {
    it->second = std::move(name);
    ++overwrites_;
  }
}

const std::string& NameMap::resolve(const std::string& id,
                                    bool& mapped) const {
  auto it = names_.find(id);
  mapped = it != names_.end();
  return mapped ? it->second : id;
}

std::vector<Triple> parse_triples(std::istream& in) {
  std::vector<Triple> triples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    if (!valid_utf8(line)) throw ParseError(lineno, "invalid UTF-8");
    auto fields = split_tabs(line);
    if (fields.size() != 3)
      throw ParseError(lineno, "expected 3 tab-separated fields, got " +
                                   std::to_string(fields.size()));
    for (const auto& f : fields)
      if (f.empty()) throw ParseError(lineno, "empty field in triple");
    triples.push_back({std::move(fields[0]), std::move(fields[1]),
                       std::move(fields[2])});
  }
  return triples;
}

void write_triples(std::ostream& out, std::span<const Triple> triples) {
  for (const auto& t : triples)
    out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

KnowledgeGraph build_graph(std::span<const Triple> train,
                           std::span<const Triple> valid,
                           std::span<const Triple> test) {
  KnowledgeGraph g;
  const auto index_split = [&g](std::span<const Triple> triples,
                                std::vector<IndexedTriple>& out) {
    out.reserve(triples.size());
    for (const auto& t : triples)
      out.push_back({g.entities.intern(t.head), g.relations.intern(t.relation),
                     g.entities.intern(t.tail)});
  };
  index_split(train, g.train);
  index_split(valid, g.valid);
  index_split(test, g.test);

  g.adjacency.resize(g.entities.size());
  for (const auto& t : g.train) {
    if (t.head == t.tail) continue;  // self-loops add nothing to walks
    g.adjacency[t.head].push_back(t.tail);
    g.adjacency[t.tail].push_back(t.head);
  }
  for (auto& nbrs : g.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return g;
}

NameMap load_names(std::istream& in) {
  NameMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    if (!valid_utf8(line)) throw ParseError(lineno, "invalid UTF-8");
    auto fields = split_tabs(line);
    if (fields.size() != 2)
      throw ParseError(lineno, "expected 2 tab-separated fields, got " +
                                   std::to_string(fields.size()));
    if (fields[0].empty()) throw ParseError(lineno, "empty entity id");
    map.insert(fields[0], std::move(fields[1]));
  }
  return map;
}

PairRelationIndex PairRelationIndex::build(
    std::span<const std::vector<IndexedTriple>* const> splits) {
  PairRelationIndex idx;
  for (const auto* split : splits)
    for (const auto& t : *split) idx.index_[key(t.head, t.tail)].push_back(t.relation);
  for (auto& [_, rels] : idx.index_) {
    std::sort(rels.begin(), rels.end());
    rels.erase(std::unique(rels.begin(), rels.end()), rels.end());
  }
  return idx;
}

PairRelationIndex PairRelationIndex::build_all(const KnowledgeGraph& graph) {
  const std::vector<IndexedTriple>* splits[] = {&graph.train, &graph.valid,
                                                &graph.test};
  return build(splits);
}

PairRelationIndex PairRelationIndex::build_train(const KnowledgeGraph& graph) {
  const std::vector<IndexedTriple>* splits[] = {&graph.train};
  return build(splits);
}

std::span<const std::int32_t> PairRelationIndex::relations_for(
    std::int32_t head, std::int32_t tail) const {
  auto it = index_.find(key(head, tail));
  if (it == index_.end()) return {};
  return it->second;
}

bool PairRelationIndex::contains(std::int32_t head, std::int32_t tail,
                                 std::int32_t relation) const {
  auto rels = relations_for(head, tail);
  return std::binary_search(rels.begin(), rels.end(), relation);
}

}  // namespace rpest
