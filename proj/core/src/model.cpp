#include "rpest/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <thread>

#include "rpest/tensor_file.hpp"

namespace rpest {
namespace {

constexpr double kProbEps = 1e-7;

inline Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) {
  return 1.0 / (1.0 + (-x).exp());
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound,
                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  return m;
}

LstmDirectionParams zero_direction(std::int32_t in, std::int32_t hidden) {
  return {Matrix::Zero(4 * hidden, in), Matrix::Zero(4 * hidden, hidden),
          Vector::Zero(4 * hidden)};
}

LstmDirectionParams init_direction(std::int32_t in, std::int32_t hidden,
                                   std::mt19937_64& rng) {
  LstmDirectionParams p;
  p.w_input = uniform_matrix(4 * hidden, in, 1.0 / std::sqrt(in), rng);
  p.w_recur = uniform_matrix(4 * hidden, hidden, 1.0 / std::sqrt(hidden), rng);
  p.bias = Vector::Zero(4 * hidden);
  p.bias.segment(hidden, hidden).setOnes();  // forget gate starts open
  return p;
}

// Runs one LSTM direction over the whole sequence. `reversed` scans the
// rows back to front; caches are indexed by absolute timestep.
void run_direction(const Matrix& input, const LstmDirectionParams& p,
                   bool reversed, LstmDirectionCache& cache) {
  const Eigen::Index steps = input.rows();
  const Eigen::Index hidden = p.w_recur.cols();

  cache.gate_i.resize(steps, hidden);
  cache.gate_f.resize(steps, hidden);
  cache.gate_g.resize(steps, hidden);
  cache.gate_o.resize(steps, hidden);
  cache.cell.resize(steps, hidden);
  cache.tanh_cell.resize(steps, hidden);
  cache.hidden.resize(steps, hidden);

  // Input contributions for all steps at once.
  Matrix pre = input * p.w_input.transpose();
  pre.rowwise() += p.bias.transpose();

  Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(hidden);
  Eigen::RowVectorXd c_prev = Eigen::RowVectorXd::Zero(hidden);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = reversed ? steps - 1 - s : s;
    Eigen::RowVectorXd a = pre.row(t);
    if (s > 0) a.noalias() += h_prev * p.w_recur.transpose();

    auto seg = [&](Eigen::Index g) { return a.segment(g * hidden, hidden); };
    const Eigen::ArrayXd gi = sigmoid(seg(0).transpose().array());
    const Eigen::ArrayXd gf = sigmoid(seg(1).transpose().array());
    const Eigen::ArrayXd gg = seg(2).transpose().array().tanh();
    const Eigen::ArrayXd go = sigmoid(seg(3).transpose().array());

    const Eigen::ArrayXd c = gi * gg + gf * c_prev.transpose().array();
    const Eigen::ArrayXd tc = c.tanh();
    const Eigen::ArrayXd h = go * tc;

    cache.gate_i.row(t) = gi.transpose();
    cache.gate_f.row(t) = gf.transpose();
    cache.gate_g.row(t) = gg.transpose();
    cache.gate_o.row(t) = go.transpose();
    cache.cell.row(t) = c.transpose();
    cache.tanh_cell.row(t) = tc.transpose();
    cache.hidden.row(t) = h.transpose();

    h_prev = h.transpose().matrix();
    c_prev = c.transpose().matrix();
  }
}

// Backpropagates one direction. d_hidden holds dL/dh_t for every
// absolute timestep; d_input collects dL/dx_t.
void backprop_direction(const Matrix& input, const LstmDirectionParams& p,
                        bool reversed, const LstmDirectionCache& cache,
                        const Matrix& d_hidden, LstmDirectionParams& grad,
                        Matrix& d_input) {
  const Eigen::Index steps = input.rows();
  const Eigen::Index hidden = p.w_recur.cols();

  Matrix d_gates(steps, 4 * hidden);  // pre-activation gradients
  Matrix h_before(steps, hidden);     // h_{t-1} in scan order, per row

  Eigen::ArrayXd dh_carry = Eigen::ArrayXd::Zero(hidden);
  Eigen::ArrayXd dc_carry = Eigen::ArrayXd::Zero(hidden);
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    const Eigen::Index t = reversed ? steps - 1 - s : s;
    const Eigen::Index t_prev = reversed ? t + 1 : t - 1;

    const Eigen::ArrayXd gi = cache.gate_i.row(t).transpose();
    const Eigen::ArrayXd gf = cache.gate_f.row(t).transpose();
    const Eigen::ArrayXd gg = cache.gate_g.row(t).transpose();
    const Eigen::ArrayXd go = cache.gate_o.row(t).transpose();
    const Eigen::ArrayXd tc = cache.tanh_cell.row(t).transpose();

    const Eigen::ArrayXd dh =
        d_hidden.row(t).transpose().array() + dh_carry;
    const Eigen::ArrayXd da_o = dh * tc * go * (1.0 - go);
    const Eigen::ArrayXd dc = dh * go * (1.0 - tc.square()) + dc_carry;
    const Eigen::ArrayXd da_i = dc * gg * gi * (1.0 - gi);
    const Eigen::ArrayXd da_g = dc * gi * (1.0 - gg.square());

    Eigen::ArrayXd c_prev = Eigen::ArrayXd::Zero(hidden);
    if (s > 0) {
      c_prev = cache.cell.row(t_prev).transpose();
      h_before.row(t) = cache.hidden.row(t_prev);
    } else {
      h_before.row(t).setZero();
    }
    const Eigen::ArrayXd da_f = dc * c_prev * gf * (1.0 - gf);

    d_gates.row(t).segment(0, hidden) = da_i.transpose();
    d_gates.row(t).segment(hidden, hidden) = da_f.transpose();
    d_gates.row(t).segment(2 * hidden, hidden) = da_g.transpose();
    d_gates.row(t).segment(3 * hidden, hidden) = da_o.transpose();

    dh_carry = (d_gates.row(t) * p.w_recur).transpose().array();
    dc_carry = dc * gf;
  }

  grad.w_input.noalias() += d_gates.transpose() * input;
  grad.w_recur.noalias() += d_gates.transpose() * h_before;
  grad.bias.noalias() += d_gates.colwise().sum().transpose();
  d_input.noalias() += d_gates * p.w_input;
}

Vector softmax(const Vector& scores) {
  const double peak = scores.maxCoeff();
  Vector exps = (scores.array() - peak).exp();
  return exps / exps.sum();
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim < 1 || hidden < 1 || attention_dim < 1 || layers < 1)
    throw DimensionError("model dimensions must be positive");
  if (relations < 1) throw DimensionError("model needs at least one relation");
}

void TrainConfig::validate() const {
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw DimensionError("dropout probability must be in [0, 1)");
  if (patience < 1) throw DimensionError("patience must be >= 1");
  if (batch_size < 1) throw DimensionError("batch size must be >= 1");
  if (epochs < 1) throw DimensionError("epochs must be >= 1");
}

PairSequence assemble_pair(const NodeRepresentation& head,
                           const NodeRepresentation& tail) {
  if (head.rows.rows() != tail.rows.rows() ||
      head.rows.cols() != tail.rows.cols())
    throw DimensionError("head and tail representations disagree in shape");
  PairSequence seq;
  seq.rows.resize(head.rows.rows() + tail.rows.rows(), head.rows.cols());
  seq.rows.topRows(head.rows.rows()) = head.rows;
  seq.rows.bottomRows(tail.rows.rows()) = tail.rows;
  return seq;
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  std::int32_t in = config.input_dim;
  for (std::int32_t l = 0; l < config.layers; ++l) {
    p.lstm.push_back(
        {zero_direction(in, config.hidden), zero_direction(in, config.hidden)});
    in = 2 * config.hidden;
  }
  p.attention = {Matrix::Zero(config.attention_dim, 2 * config.hidden),
                 Vector::Zero(config.attention_dim),
                 Vector::Zero(config.attention_dim)};
  p.output = {Matrix::Zero(config.relations, 2 * config.hidden),
              Vector::Zero(config.relations)};
  return p;
}

ModelParams ModelParams::initialized(const ModelConfig& config,
                                     std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(derive_seed(seed, 0x902d));
  ModelParams p;
  p.config = config;
  std::int32_t in = config.input_dim;
  for (std::int32_t l = 0; l < config.layers; ++l) {
    p.lstm.push_back({init_direction(in, config.hidden, rng),
                      init_direction(in, config.hidden, rng)});
    in = 2 * config.hidden;
  }
  const double attn_bound = 1.0 / std::sqrt(2.0 * config.hidden);
  p.attention.proj = uniform_matrix(config.attention_dim, 2 * config.hidden,
                                    attn_bound, rng);
  p.attention.bias = Vector::Zero(config.attention_dim);
  p.attention.score =
      uniform_matrix(config.attention_dim, 1, 0.1, rng).col(0);
  p.output.weight =
      uniform_matrix(config.relations, 2 * config.hidden, attn_bound, rng);
  p.output.bias = Vector::Zero(config.relations);
  return p;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each_tensor([&ok](const std::string&, const auto& t) {
    ok = ok && t.allFinite();
  });
  return ok;
}

Vector forward(const PairSequence& seq, const ModelParams& params,
               RunMode mode, double dropout_p, std::mt19937_64* rng,
               ForwardCache* cache) {
  const ModelConfig& cfg = params.config;
  if (seq.rows.cols() != cfg.input_dim)
    throw DimensionError("sequence width " + std::to_string(seq.rows.cols()) +
                         " != model input width " +
                         std::to_string(cfg.input_dim));

  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  cc.train_mode = mode == RunMode::kTrain;
  cc.layers.assign(params.lstm.size(), {});

  const Matrix* layer_in = &seq.rows;
  for (std::size_t l = 0; l < params.lstm.size(); ++l) {
    auto& lc = cc.layers[l];
    run_direction(*layer_in, params.lstm[l].fwd, false, lc.fwd);
    run_direction(*layer_in, params.lstm[l].bwd, true, lc.bwd);
    lc.output.resize(layer_in->rows(), 2 * cfg.hidden);
    lc.output.leftCols(cfg.hidden) = lc.fwd.hidden;
    lc.output.rightCols(cfg.hidden) = lc.bwd.hidden;
    layer_in = &lc.output;
  }
  const Matrix& encoded = *layer_in;

  // Additive attention pooling over timesteps.
  Matrix pre = encoded * params.attention.proj.transpose();
  pre.rowwise() += params.attention.bias.transpose();
  cc.attn_units = pre.array().tanh();
  const Vector scores = cc.attn_units * params.attention.score;
  cc.attn_weights = softmax(scores);
  cc.context = encoded.transpose() * cc.attn_weights;

  if (cc.train_mode && dropout_p > 0.0) {
    if (!rng)
      throw NumericError("train-mode forward with dropout needs an rng");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    cc.dropout_scale.resize(cc.context.size());
    const double keep = 1.0 - dropout_p;
    for (Eigen::Index i = 0; i < cc.context.size(); ++i)
      cc.dropout_scale(i) = unit(*rng) < dropout_p ? 0.0 : 1.0 / keep;
    cc.context_out = cc.context.cwiseProduct(cc.dropout_scale);
  } else {
    cc.dropout_scale.resize(0);
    cc.context_out = cc.context;
  }

  const Vector logits =
      params.output.weight * cc.context_out + params.output.bias;
  cc.probs = sigmoid(logits.array());
  return cc.probs;
}

double bce_loss(const Vector& probs, const Vector& target) {
  if (probs.size() != target.size())
    throw DimensionError("probability/target length mismatch");
  const Eigen::ArrayXd p =
      probs.array().min(1.0 - kProbEps).max(kProbEps);
  const Eigen::ArrayXd y = target.array();
  return -(y * p.log() + (1.0 - y) * (1.0 - p).log()).mean();
}

ModelParams backward(const PairSequence& seq, const ModelParams& params,
                     const ForwardCache& cache, const Vector& target) {
  if (!cache.train_mode || cache.layers.empty())
    throw NumericError("backward requires a cache from a train-mode forward");
  const ModelConfig& cfg = params.config;
  const Eigen::Index k = cfg.relations;
  if (target.size() != k) throw DimensionError("target length != relations");

  ModelParams grad = ModelParams::zeros(cfg);

  // Loss and sigmoid, with the clamp's dead zones handled exactly.
  const Eigen::ArrayXd p = cache.probs.array();
  const Eigen::ArrayXd clamped = p.min(1.0 - kProbEps).max(kProbEps);
  const Eigen::ArrayXd inside =
      ((p > kProbEps) && (p < 1.0 - kProbEps)).cast<double>();
  const Eigen::ArrayXd dloss_dp =
      (clamped - target.array()) / (clamped * (1.0 - clamped)) /
      static_cast<double>(k);
  const Vector d_logits = (dloss_dp * inside * p * (1.0 - p)).matrix();

  grad.output.weight.noalias() = d_logits * cache.context_out.transpose();
  grad.output.bias = d_logits;
  Vector d_context = params.output.weight.transpose() * d_logits;
  if (cache.dropout_scale.size() > 0)
    d_context = d_context.cwiseProduct(cache.dropout_scale);

  // Attention backward.
  const Matrix& encoded = cache.layers.back().output;
  Matrix d_encoded = cache.attn_weights * d_context.transpose();
  const Vector d_alpha = encoded * d_context;
  const double mixed = cache.attn_weights.dot(d_alpha);
  const Vector d_scores =
      (cache.attn_weights.array() * (d_alpha.array() - mixed)).matrix();
  grad.attention.score.noalias() = cache.attn_units.transpose() * d_scores;
  const Matrix d_units =
      (d_scores * params.attention.score.transpose()).array() *
      (1.0 - cache.attn_units.array().square());
  grad.attention.proj.noalias() = d_units.transpose() * encoded;
  grad.attention.bias = d_units.colwise().sum().transpose();
  d_encoded.noalias() += d_units * params.attention.proj;

  // BiLSTM stack backward, top to bottom.
  for (std::size_t l = params.lstm.size(); l-- > 0;) {
    const Matrix& layer_in = l == 0 ? seq.rows : cache.layers[l - 1].output;
    Matrix d_input = Matrix::Zero(layer_in.rows(), layer_in.cols());
    backprop_direction(layer_in, params.lstm[l].fwd, false,
                       cache.layers[l].fwd, d_encoded.leftCols(cfg.hidden),
                       grad.lstm[l].fwd, d_input);
    backprop_direction(layer_in, params.lstm[l].bwd, true, cache.layers[l].bwd,
                       d_encoded.rightCols(cfg.hidden), grad.lstm[l].bwd,
                       d_input);
    d_encoded = std::move(d_input);
  }
  return grad;
}

AdamOptimizer::AdamOptimizer(ModelParams& shape, double beta1, double beta2,
                             double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  shape.for_each_tensor([this](const std::string&, auto& t) {
    first_.emplace_back(Eigen::ArrayXd::Zero(t.size()));
    second_.emplace_back(Eigen::ArrayXd::Zero(t.size()));
  });
}

void AdamOptimizer::step(ModelParams& params, ModelParams& grads, double lr) {
  ++t_;
  const double correction1 = 1.0 - std::pow(beta1_, t_);
  const double correction2 = 1.0 - std::pow(beta2_, t_);
  std::size_t i = 0;
  std::vector<Eigen::Map<Eigen::ArrayXd>> gviews;
  grads.for_each_tensor([&gviews](const std::string&, auto& t) {
    gviews.emplace_back(t.data(), t.size());
  });
  params.for_each_tensor([&](const std::string&, auto& t) {
    Eigen::Map<Eigen::ArrayXd> theta(t.data(), t.size());
    const auto& g = gviews[i];
    first_[i] = beta1_ * first_[i] + (1.0 - beta1_) * g;
    second_[i] = beta2_ * second_[i] + (1.0 - beta2_) * g.square();
    theta -= lr * (first_[i] / correction1) /
             ((second_[i] / correction2).sqrt() + epsilon_);
    ++i;
  });
}

std::vector<LabeledPair> labeled_pairs(
    const std::vector<IndexedTriple>& split) {
  const std::vector<IndexedTriple>* splits[] = {&split};
  const PairRelationIndex index = PairRelationIndex::build(splits);

  std::vector<LabeledPair> pairs;
  pairs.reserve(index.pair_count());
  index.for_each_pair([&pairs](std::int32_t h, std::int32_t t,
                               std::span<const std::int32_t> rels) {
    pairs.push_back({h, t, {rels.begin(), rels.end()}});
  });
  // Hash-map iteration order is not deterministic; restore one.
  std::sort(pairs.begin(), pairs.end(),
            [](const LabeledPair& a, const LabeledPair& b) {
              return std::tie(a.head, a.tail) < std::tie(b.head, b.tail);
            });
  return pairs;
}

namespace {

Vector target_vector(const LabeledPair& pair, std::int32_t k) {
  Vector y = Vector::Zero(k);
  for (std::int32_t r : pair.relations) y(r) = 1.0;
  return y;
}

// Sequence assembly for a contiguous range of pairs, optionally fanned
// out over threads. Pure per slot, so threading keeps results
// bit-identical.
void assemble_range(const NodeEncoder& encoder,
                    std::span<const LabeledPair> pairs,
                    std::vector<PairSequence>& out, int threads) {
  out.resize(pairs.size());
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      out[i] = assemble_pair(
          {encoder.encode(pairs[i].head, Role::kHead), Role::kHead},
          {encoder.encode(pairs[i].tail, Role::kTail), Role::kTail});
  };
  if (threads <= 1 || pairs.size() < 2) {
    work(0, pairs.size());
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t per = (pairs.size() + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t b = std::min(pairs.size(), t * per);
    const std::size_t e = std::min(pairs.size(), b + per);
    if (b < e) pool.emplace_back(work, b, e);
  }
  for (auto& th : pool) th.join();
}

void accumulate(ModelParams& into, const ModelParams& grad) {
  std::vector<const double*> src;
  std::vector<Eigen::Index> sizes;
  grad.for_each_tensor([&](const std::string&, const auto& t) {
    src.push_back(t.data());
    sizes.push_back(t.size());
  });
  std::size_t i = 0;
  into.for_each_tensor([&](const std::string&, auto& t) {
    Eigen::Map<Eigen::ArrayXd>(t.data(), t.size()) +=
        Eigen::Map<const Eigen::ArrayXd>(src[i], sizes[i]);
    ++i;
  });
}

void scale_params(ModelParams& p, double s) {
  p.for_each_tensor([s](const std::string&, auto& t) { t *= s; });
}

double mean_eval_loss(const std::vector<LabeledPair>& pairs,
                      const NodeEncoder& encoder, const ModelParams& params,
                      int threads) {
  const std::int32_t k = params.config.relations;
  std::vector<double> losses(pairs.size());
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const PairSequence seq = assemble_pair(
          {encoder.encode(pairs[i].head, Role::kHead), Role::kHead},
          {encoder.encode(pairs[i].tail, Role::kTail), Role::kTail});
      const Vector probs =
          forward(seq, params, RunMode::kEval, 0.0, nullptr);
      losses[i] = bce_loss(probs, target_vector(pairs[i], k));
    }
  };
  if (threads <= 1) {
    work(0, pairs.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t per = (pairs.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t b = std::min(pairs.size(), t * per);
      const std::size_t e = std::min(pairs.size(), b + per);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  // Fixed summation order regardless of thread count.
  double sum = 0.0;
  for (double v : losses) sum += v;
  return pairs.empty() ? 0.0 : sum / static_cast<double>(pairs.size());
}

void print_epoch(std::ostream* out, const EpochLog& e) {
  if (!out) return;
  char line[160];
  std::snprintf(line, sizeof(line),
                "epoch=%d train_loss=%.6f valid_loss=%.6f lr=%.8g seconds=%.2f",
                e.epoch, e.train_loss, e.valid_loss, e.lr, e.seconds);
  *out << line << std::endl;
}

}  // namespace

TrainResult train(const KnowledgeGraph& graph, const NodeEncoder& encoder,
                  const ModelConfig& mconfig, const TrainConfig& tconfig,
                  std::ostream* log_stream) {
  mconfig.validate();
  tconfig.validate();
  std::vector<LabeledPair> train_pairs = labeled_pairs(graph.train);
  const std::vector<LabeledPair> valid_pairs = labeled_pairs(graph.valid);
  if (train_pairs.empty()) throw DimensionError("training split is empty");
  if (valid_pairs.empty()) throw DimensionError("validation split is empty");

  const std::int32_t k = mconfig.relations;
  TrainResult result;
  ModelParams params = ModelParams::initialized(mconfig, tconfig.seed);
  result.params = params;  // placeholder until the first epoch completes
  AdamOptimizer adam(params);

  std::mt19937_64 shuffle_rng(derive_seed(tconfig.seed, 0x50a1));
  std::mt19937_64 dropout_rng(derive_seed(tconfig.seed, 0xd309));

  double lr = tconfig.lr;
  double best_valid = std::numeric_limits<double>::infinity();
  std::int32_t flat_epochs = 0;

  std::vector<PairSequence> batch_seqs;
  for (std::int32_t epoch = 1; epoch <= tconfig.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(train_pairs.begin(), train_pairs.end(), shuffle_rng);

    double train_loss_sum = 0.0;
    std::size_t seen = 0;
    bool diverged = false;
    for (std::size_t offset = 0; offset < train_pairs.size();
         offset += tconfig.batch_size) {
      const std::size_t count =
          std::min<std::size_t>(tconfig.batch_size,
                                train_pairs.size() - offset);
      const std::span<const LabeledPair> batch(&train_pairs[offset], count);
      assemble_range(encoder, batch, batch_seqs, tconfig.threads);

      ModelParams grads = ModelParams::zeros(mconfig);
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        ForwardCache cache;
        const Vector probs =
            forward(batch_seqs[i], params, RunMode::kTrain, tconfig.dropout_p,
                    &dropout_rng, &cache);
        const Vector y = target_vector(batch[i], k);
        batch_loss += bce_loss(probs, y);
        accumulate(grads, backward(batch_seqs[i], params, cache, y));
      }
      batch_loss /= static_cast<double>(count);
      if (!std::isfinite(batch_loss)) {
        diverged = true;
        break;
      }
      scale_params(grads, 1.0 / static_cast<double>(count));
      adam.step(params, grads, lr);
      train_loss_sum += batch_loss * static_cast<double>(count);
      seen += count;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = seen ? train_loss_sum / static_cast<double>(seen) : 0.0;
    entry.lr = lr;
    entry.valid_loss =
        diverged ? std::numeric_limits<double>::quiet_NaN()
                 : mean_eval_loss(valid_pairs, encoder, params,
                                  tconfig.threads);
    entry.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - started)
                        .count();
    result.log.push_back(entry);
    print_epoch(log_stream, entry);

    if (diverged || !std::isfinite(entry.valid_loss)) {
      result.diverged = true;
      break;  // best parameters so far stay checkpointed
    }

    if (entry.valid_loss < best_valid) {
      best_valid = entry.valid_loss;
      result.params = params;
      result.best_epoch = epoch;
      flat_epochs = 0;
    } else {
      ++flat_epochs;
      lr *= 1.0 - tconfig.lr_decay_factor;
      if (flat_epochs >= tconfig.patience) break;
    }
  }
  return result;
}

Vector score_pair(std::int32_t head, std::int32_t tail,
                  const ModelParams& params, const NodeEncoder& encoder) {
  const PairSequence seq =
      assemble_pair({encoder.encode(head, Role::kHead), Role::kHead},
                    {encoder.encode(tail, Role::kTail), Role::kTail});
  return forward(seq, params, RunMode::kEval, 0.0, nullptr);
}

std::vector<RankedRelation> predict(const std::string& head_id,
                                    const std::string& tail_id,
                                    const ModelParams& params,
                                    const NodeEncoder& encoder,
                                    const KnowledgeGraph& graph) {
  const std::int32_t head = graph.entities.index_of(head_id);
  if (head < 0) throw UnknownEntityError(head_id);
  const std::int32_t tail = graph.entities.index_of(tail_id);
  if (tail < 0) throw UnknownEntityError(tail_id);

  const Vector probs = score_pair(head, tail, params, encoder);
  std::vector<RankedRelation> ranked(probs.size());
  for (Eigen::Index r = 0; r < probs.size(); ++r)
    ranked[r] = {static_cast<std::int32_t>(r), probs(r)};
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedRelation& a, const RankedRelation& b) {
                     return a.probability > b.probability;
                   });
  return ranked;
}

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const Vocabulary& relations) {
  TensorFile file;
  file.vocab = relations.ids();
  params.for_each_tensor([&file](const std::string& name, const auto& t) {
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Vector>)
      file.tensors.push_back(tensor_from_vector(name, t));
    else
      file.tensors.push_back(tensor_from_matrix(name, t));
  });
  file.save(path);
}

ModelParams load_checkpoint(const std::string& path,
                            std::vector<std::string>* relation_ids) {
  const TensorFile file = TensorFile::load(path);
  if (relation_ids) *relation_ids = file.vocab;

  // Recover dimensions from tensor shapes.
  const NamedTensor& first_in = file.require("lstm0.fwd.w_input");
  const NamedTensor& attn = file.require("attention.proj");
  const NamedTensor& out_w = file.require("output.weight");
  if (first_in.dims.size() != 2 || attn.dims.size() != 2 ||
      out_w.dims.size() != 2)
    throw IoError("checkpoint tensors have unexpected ranks");

  ModelConfig cfg;
  cfg.hidden = static_cast<std::int32_t>(first_in.dims[0]) / 4;
  cfg.input_dim = static_cast<std::int32_t>(first_in.dims[1]);
  cfg.attention_dim = static_cast<std::int32_t>(attn.dims[0]);
  cfg.relations = static_cast<std::int32_t>(out_w.dims[0]);
  cfg.layers = 0;
  for (const auto& t : file.tensors)
    if (t.name.ends_with(".fwd.w_input")) ++cfg.layers;

  if (cfg.relations != static_cast<std::int32_t>(file.vocab.size()))
    throw DimensionError(
        "checkpoint lists " + std::to_string(file.vocab.size()) +
        " relations but its output layer has " +
        std::to_string(cfg.relations));

  ModelParams params = ModelParams::zeros(cfg);
  params.for_each_tensor([&file](const std::string& name, auto& t) {
    const NamedTensor& stored = file.require(name);
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Vector>) {
      Vector loaded = vector_from_tensor(stored);
      if (loaded.size() != t.size())
        throw DimensionError("checkpoint tensor '" + name +
                             "' has inconsistent size");
      t = std::move(loaded);
    } else {
      Matrix loaded = matrix_from_tensor(stored);
      if (loaded.rows() != t.rows() || loaded.cols() != t.cols())
        throw DimensionError("checkpoint tensor '" + name +
                             "' has inconsistent shape");
      t = std::move(loaded);
    }
  });
  if (!params.all_finite())
    throw NumericError("checkpoint contains non-finite values");
  return params;
}

}  // namespace rpest
