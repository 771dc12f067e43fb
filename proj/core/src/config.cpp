#include "rpest/config.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

namespace rpest {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& value, const std::string& key,
               std::size_t lineno) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto [next, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || next != end)
    throw ParseError(lineno, "bad value '" + value + "' for key " + key);
  return out;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value,
                    std::size_t lineno) {
  if (key == "train") train_path = value;
  else if (key == "valid") valid_path = value;
  else if (key == "test") test_path = value;
  else if (key == "names") names_path = value;
  else if (key == "word_vectors") word_vectors_path = value;
  else if (key == "work_dir") work_dir = value;
  else if (key == "walk_dump") walk_dump_path = value;
  else if (key == "dim") dim = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "padding")
    padding = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "direction_scale")
    direction_scale = parse_number<double>(value, key, lineno);
  else if (key == "walk_length")
    walks.walk_length = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "walks_per_node")
    walks.walks_per_node = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "p") walks.p = parse_number<double>(value, key, lineno);
  else if (key == "q") walks.q = parse_number<double>(value, key, lineno);
  else if (key == "sgns_window")
    sgns.window = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "sgns_negatives")
    sgns.negatives = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "sgns_epochs")
    sgns.epochs = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "sgns_lr")
    sgns.initial_lr = parse_number<double>(value, key, lineno);
  else if (key == "hidden")
    hidden = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "attention")
    attention_dim = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "lstm_layers")
    lstm_layers = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "epochs")
    training.epochs = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "patience")
    training.patience = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "batch_size")
    training.batch_size = parse_number<std::int32_t>(value, key, lineno);
  else if (key == "lr") training.lr = parse_number<double>(value, key, lineno);
  else if (key == "lr_decay")
    training.lr_decay_factor = parse_number<double>(value, key, lineno);
  else if (key == "dropout")
    training.dropout_p = parse_number<double>(value, key, lineno);
  else if (key == "seed")
    seed = parse_number<std::uint64_t>(value, key, lineno);
  else if (key == "threads")
    threads = parse_number<int>(value, key, lineno);
  else if (key == "ablation") {
    if (value == "text-only") text_only = true;
    else if (value == "full") text_only = false;
    else throw ParseError(lineno, "ablation must be 'full' or 'text-only'");
  } else {
    throw ParseError(lineno, "unknown config key '" + key + "'");
  }
}

void RunConfig::finalize() {
  walks.seed = derive_seed(seed, 1);
  sgns.seed = derive_seed(seed, 2);
  sgns.dim = dim;
  training.seed = derive_seed(seed, 3);
  training.threads = threads;
}

void RunConfig::echo(std::ostream& out) const {
  out << "config.train=" << train_path << '\n'
      << "config.valid=" << valid_path << '\n'
      << "config.test=" << test_path << '\n'
      << "config.names=" << names_path << '\n'
      << "config.word_vectors=" << word_vectors_path << '\n'
      << "config.work_dir=" << work_dir << '\n'
      << "config.walk_dump=" << walk_dump_path << '\n'
      << "config.dim=" << dim << '\n'
      << "config.padding=" << padding << '\n'
      << "config.direction_scale=" << direction_scale << '\n'
      << "config.walk_length=" << walks.walk_length << '\n'
      << "config.walks_per_node=" << walks.walks_per_node << '\n'
      << "config.p=" << walks.p << '\n'
      << "config.q=" << walks.q << '\n'
      << "config.sgns_window=" << sgns.window << '\n'
      << "config.sgns_negatives=" << sgns.negatives << '\n'
      << "config.sgns_epochs=" << sgns.epochs << '\n'
      << "config.sgns_lr=" << sgns.initial_lr << '\n'
      << "config.hidden=" << hidden << '\n'
      << "config.attention=" << attention_dim << '\n'
      << "config.lstm_layers=" << lstm_layers << '\n'
      << "config.epochs=" << training.epochs << '\n'
      << "config.patience=" << training.patience << '\n'
      << "config.batch_size=" << training.batch_size << '\n'
      << "config.lr=" << training.lr << '\n'
      << "config.lr_decay=" << training.lr_decay_factor << '\n'
      << "config.dropout=" << training.dropout_p << '\n'
      << "config.seed=" << seed << '\n'
      << "config.threads=" << threads << '\n'
      << "config.ablation=" << (text_only ? "text-only" : "full") << '\n';
}

std::string RunConfig::dataset_cache() const {
  return work_dir + "/dataset.rpst";
}
std::string RunConfig::word_vector_cache() const {
  return work_dir + "/word_vectors.rpst";
}
std::string RunConfig::embedding_cache() const {
  return work_dir + "/node_embeddings.rpst";
}
std::string RunConfig::embedding_text() const {
  return work_dir + "/node_embeddings.txt";
}
std::string RunConfig::checkpoint_path() const {
  return work_dir + "/model.rpst";
}
std::string RunConfig::training_log_path() const {
  return work_dir + "/training_log.txt";
}

void apply_config_stream(std::istream& in, RunConfig& config) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError(lineno, "expected key=value");
    config.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)),
               lineno);
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  RunConfig config;
  apply_config_stream(in, config);
  return config;
}

}  // namespace rpest
