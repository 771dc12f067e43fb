#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "rpest/common.hpp"
#include "rpest/kg.hpp"
#include "rpest/text_encoder.hpp"

namespace rpest {

struct ModelConfig {
  std::int32_t input_dim = 300;      // row width of the pair sequence
  std::int32_t hidden = 400;         // LSTM units per direction
  std::int32_t attention_dim = 256;  // attention projection width
  std::int32_t relations = 0;        // output count, set from the graph
  std::int32_t layers = 2;           // stacked BiLSTM layers

  void validate() const;
};

// Head representation stacked above the tail representation:
// 2(n+2) x d, direction rows at 0 and n+2.
struct PairSequence {
  Matrix rows;
};

PairSequence assemble_pair(const NodeRepresentation& head,
                           const NodeRepresentation& tail);

struct LstmDirectionParams {
  Matrix w_input;  // 4H x in, gate order i, f, g, o
  Matrix w_recur;  // 4H x H
  Vector bias;     // 4H
};

struct LstmLayerParams {
  LstmDirectionParams fwd, bwd;
};

struct AttentionParams {
  Matrix proj;   // A x 2H
  Vector bias;   // A
  Vector score;  // A
};

struct OutputParams {
  Matrix weight;  // k x 2H
  Vector bias;    // k
};

struct ModelParams {
  ModelConfig config;
  std::vector<LstmLayerParams> lstm;
  AttentionParams attention;
  OutputParams output;

  static ModelParams zeros(const ModelConfig& config);
  // Weights uniform in +-1/sqrt(fan-in), forget-gate bias +1, attention
  // score vector uniform in +-0.1.
  static ModelParams initialized(const ModelConfig& config,
                                 std::uint64_t seed);

  // Visits every tensor in a fixed order; fn(name, tensor&) where
  // tensor is Matrix or Vector. Serialization, the optimizer, and the
  // gradient checks all rely on this order being stable.
  template <class Fn>
  void for_each_tensor(Fn&& fn) {
    for (std::size_t l = 0; l < lstm.size(); ++l) {
      const std::string base = "lstm" + std::to_string(l);
      fn(base + ".fwd.w_input", lstm[l].fwd.w_input);
      fn(base + ".fwd.w_recur", lstm[l].fwd.w_recur);
      fn(base + ".fwd.bias", lstm[l].fwd.bias);
      fn(base + ".bwd.w_input", lstm[l].bwd.w_input);
      fn(base + ".bwd.w_recur", lstm[l].bwd.w_recur);
      fn(base + ".bwd.bias", lstm[l].bwd.bias);
    }
    fn("attention.proj", attention.proj);
    fn("attention.bias", attention.bias);
    fn("attention.score", attention.score);
    fn("output.weight", output.weight);
    fn("output.bias", output.bias);
  }
  template <class Fn>
  void for_each_tensor(Fn&& fn) const {
    const_cast<ModelParams*>(this)->for_each_tensor(
        [&fn](const std::string& name, auto& tensor) {
          fn(name, std::as_const(tensor));
        });
  }

  bool all_finite() const;
};

enum class RunMode : std::uint8_t { kTrain, kEval };

struct LstmDirectionCache {
  Matrix gate_i, gate_f, gate_g, gate_o;  // T x H activations
  Matrix cell, tanh_cell, hidden;         // T x H
};

struct LstmLayerCache {
  LstmDirectionCache fwd, bwd;
  Matrix output;  // T x 2H
};

struct ForwardCache {
  std::vector<LstmLayerCache> layers;
  Matrix attn_units;     // tanh(proj h + bias), T x A
  Vector attn_weights;   // softmax scores, length T
  Vector context;        // 2H, before dropout
  Vector dropout_scale;  // per-unit 0 or 1/(1-p); empty when unused
  Vector context_out;    // context after dropout
  Vector probs;          // k
  bool train_mode = false;
};

// BiLSTM stack -> additive attention pooling -> dropout (train only,
// inverted) -> linear -> elementwise sigmoid. rng is consumed only for
// the dropout mask and may be null in eval mode or when dropout_p == 0.
Vector forward(const PairSequence& seq, const ModelParams& params,
               RunMode mode, double dropout_p, std::mt19937_64* rng,
               ForwardCache* cache = nullptr);

// Mean over k of binary cross-entropy with probabilities clamped to
// [1e-7, 1 - 1e-7].
double bce_loss(const Vector& probs, const Vector& target);

// Exact gradient of bce_loss(forward(seq), target) with respect to
// every parameter tensor. Requires a cache from a train-mode forward.
ModelParams backward(const PairSequence& seq, const ModelParams& params,
                     const ForwardCache& cache, const Vector& target);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(ModelParams& shape, double beta1 = 0.9,
                         double beta2 = 0.999, double epsilon = 1e-8);
  void step(ModelParams& params, ModelParams& grads, double lr);

 private:
  std::vector<Eigen::ArrayXd> first_;
  std::vector<Eigen::ArrayXd> second_;
  double beta1_, beta2_, epsilon_;
  std::int64_t t_ = 0;
};

struct TrainConfig {
  std::int32_t epochs = 50;
  std::int32_t patience = 5;
  std::int32_t batch_size = 32;
  double lr = 0.0008;
  double lr_decay_factor = 0.35;  // lr *= (1 - factor) on plateau
  double dropout_p = 0.15;
  std::uint64_t seed = 42;
  int threads = 1;  // sequence assembly and validation scoring only

  void validate() const;
};

struct EpochLog {
  std::int32_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;  // best validation epoch
  std::vector<EpochLog> log;
  std::int32_t best_epoch = 0;
  bool diverged = false;
};

// One (head, tail) training example with its multi-label target.
struct LabeledPair {
  std::int32_t head = 0;
  std::int32_t tail = 0;
  std::vector<std::int32_t> relations;
};

std::vector<LabeledPair> labeled_pairs(
    const std::vector<IndexedTriple>& split);

// Adam over shuffled unique train pairs, batch-mean loss, one step per
// batch. Validation loss is monitored each epoch: on no improvement the
// learning rate decays, and `patience` consecutive flat epochs stop
// training. Gradients and updates run on one thread; with a fixed seed
// two runs produce identical logs.
TrainResult train(const KnowledgeGraph& graph, const NodeEncoder& encoder,
                  const ModelConfig& mconfig, const TrainConfig& tconfig,
                  std::ostream* log_stream = nullptr);

// Eval-mode probabilities for all k relations of one entity pair.
Vector score_pair(std::int32_t head, std::int32_t tail,
                  const ModelParams& params, const NodeEncoder& encoder);

struct RankedRelation {
  std::int32_t relation = 0;
  double probability = 0.0;
};

// Full descending ranking; ties keep ascending relation order.
std::vector<RankedRelation> predict(const std::string& head_id,
                                    const std::string& tail_id,
                                    const ModelParams& params,
                                    const NodeEncoder& encoder,
                                    const KnowledgeGraph& graph);

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const Vocabulary& relations);
ModelParams load_checkpoint(const std::string& path,
                            std::vector<std::string>* relation_ids = nullptr);

}  // namespace rpest
