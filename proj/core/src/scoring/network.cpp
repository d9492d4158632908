#include "chorus/scoring/network.hpp"

#include <cmath>
#include <map>

#include "chorus/model/types.hpp"

namespace chorus::scoring {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd logistic(const MatrixXd& z) {
  return z.unaryExpr([](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); });
}

MatrixXd activate(Activation act, const MatrixXd& z, double alpha) {
  switch (act) {
    case Activation::kSigmoid:
      return logistic(z);
    case Activation::kRelu:
      return z.cwiseMax(0.0);
    case Activation::kPrelu:
      return z.unaryExpr([alpha](double v) { return v > 0 ? v : alpha * v; });
  }
  return z;
}

MatrixXd activation_slope(Activation act, const MatrixXd& z, double alpha) {
  switch (act) {
    case Activation::kSigmoid: {
      const MatrixXd s = logistic(z);
      return s.array() * (1.0 - s.array());
    }
    case Activation::kRelu:
      return z.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
    case Activation::kPrelu:
      return z.unaryExpr([alpha](double v) { return v > 0 ? 1.0 : alpha; });
  }
  return MatrixXd::Ones(z.rows(), z.cols());
}

void fill_weights(Eigen::Map<MatrixXd> w, InitScheme init, std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(w.cols());
  const double fan_out = static_cast<double>(w.rows());
  if (init == InitScheme::kHe) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  } else {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  }
}

MatrixXd stack_tokens(const TokenVectors& tokens, int dim, int max_tokens) {
  const auto n = std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(max_tokens));
  MatrixXd x(dim, static_cast<Index>(n));
  for (std::size_t t = 0; t < n; ++t) {
    if (tokens[t] == nullptr || tokens[t]->size() != dim) {
      throw ValidationError("token vector dimension does not match the network input");
    }
    x.col(static_cast<Index>(t)) = *tokens[t];
  }
  return x;
}

}  // namespace

// ---------------------------------------------------------------- layout

std::size_t ParamLayout::add(std::string name, Index rows, Index cols) {
  tensors_.push_back({std::move(name), rows, cols, total_});
  total_ += rows * cols;
  return tensors_.size() - 1;
}

Eigen::Map<MatrixXd> ParamLayout::view(VectorXd& theta, std::size_t i) const {
  const auto& t = tensors_.at(i);
  return {theta.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<const MatrixXd> ParamLayout::view(const VectorXd& theta, std::size_t i) const {
  const auto& t = tensors_.at(i);
  return {theta.data() + t.offset, t.rows, t.cols};
}

// ---------------------------------------------------------------- spec

void NetworkSpec::validate() const {
  if (input_dim < 1) throw ValidationError("network input_dim must be positive");
  for (int h : hidden) {
    if (h < 1) throw ValidationError("hidden layer sizes must be positive");
  }
  for (int h : head_hidden) {
    if (h < 1) throw ValidationError("head layer sizes must be positive");
  }
  if (recurrent_hidden < 1) throw ValidationError("recurrent_hidden must be positive");
  if (max_context_messages < 1 || max_tokens < 1) throw ValidationError("truncation bounds must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout must be in [0, 1)");
}

nlohmann::json NetworkSpec::to_json() const {
  return {{"arch", to_string(arch)},
          {"objective", to_string(objective)},
          {"input_dim", input_dim},
          {"hidden", hidden},
          {"recurrent_hidden", recurrent_hidden},
          {"head_hidden", head_hidden},
          {"max_context_messages", max_context_messages},
          {"max_tokens", max_tokens},
          {"activation", to_string(activation)},
          {"init", to_string(init)},
          {"dropout", dropout},
          {"zero_init_output", zero_init_output}};
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
  NetworkSpec s;
  s.arch = architecture_from_string(j.at("arch").get<std::string>());
  s.objective = objective_from_string(j.at("objective").get<std::string>());
  s.input_dim = j.at("input_dim").get<int>();
  s.hidden = j.value("hidden", s.hidden);
  s.recurrent_hidden = j.value("recurrent_hidden", s.recurrent_hidden);
  s.head_hidden = j.value("head_hidden", s.head_hidden);
  s.max_context_messages = j.value("max_context_messages", s.max_context_messages);
  s.max_tokens = j.value("max_tokens", s.max_tokens);
  if (j.contains("activation")) s.activation = activation_from_string(j.at("activation").get<std::string>());
  if (j.contains("init")) s.init = init_from_string(j.at("init").get<std::string>());
  s.dropout = j.value("dropout", s.dropout);
  s.zero_init_output = j.value("zero_init_output", s.zero_init_output);
  s.validate();
  return s;
}

NetworkSpec make_spec(Architecture arch, Objective objective, int input_dim, const TrainConfig& cfg) {
  NetworkSpec s;
  s.arch = arch;
  s.objective = objective;
  s.input_dim = input_dim;
  s.activation = cfg.activation;
  s.init = cfg.init;
  s.dropout = cfg.dropout;
  return s;
}

// ---------------------------------------------------------------- network

std::unique_ptr<Network> Network::create(const NetworkSpec& spec) {
  spec.validate();
  if (spec.arch == Architecture::kSmall) return std::make_unique<SmallNet>(spec);
  return std::make_unique<DeepNet>(spec);
}

VectorXd Network::initial_parameters(std::uint64_t seed) const {
  VectorXd theta = VectorXd::Zero(layout_.total());
  std::mt19937_64 rng(seed);
  initialize(theta, rng);
  return theta;
}

// ---------------------------------------------------------------- mlp

Mlp::Mlp(ParamLayout& layout, const std::string& prefix, int input, std::vector<int> hidden, int output,
         Activation activation, double dropout)
    : activation_(activation), dropout_(dropout), layout_(&layout) {
  sizes_.push_back(input);
  sizes_.insert(sizes_.end(), hidden.begin(), hidden.end());
  sizes_.push_back(output);
  const std::size_t n = sizes_.size() - 1;
  for (std::size_t l = 0; l < n; ++l) {
    const bool last = l + 1 == n;
    const std::string name = prefix + (last ? "out" : "fc" + std::to_string(l + 1));
    Layer layer{};
    layer.weight = layout.add(name + ".weight", sizes_[l + 1], sizes_[l]);
    layer.bias = layout.add(name + ".bias", sizes_[l + 1], 1);
    layer.alpha = (!last && activation == Activation::kPrelu) ? layout.add(name + ".prelu", 1, 1) : SIZE_MAX;
    layers_.push_back(layer);
  }
}

void Mlp::initialize(VectorXd& theta, InitScheme init, bool zero_output, std::mt19937_64& rng) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const bool last = l + 1 == layers_.size();
    auto w = layout_->view(theta, layers_[l].weight);
    if (last && zero_output) {
      w.setZero();
    } else {
      fill_weights(w, init, rng);
    }
    layout_->view(theta, layers_[l].bias).setZero();
    if (layers_[l].alpha != SIZE_MAX) layout_->view(theta, layers_[l].alpha)(0, 0) = 0.25;
  }
}

MatrixXd Mlp::forward(const VectorXd& theta, const MatrixXd& x, const ForwardOptions& options, Cache* cache) const {
  if (x.rows() != sizes_.front()) throw ValidationError("input size does not match the network");
  if (cache) *cache = Cache{};
  MatrixXd a = x;
  const std::size_t n = layers_.size();
  for (std::size_t l = 0; l < n; ++l) {
    const auto w = layout_->view(theta, layers_[l].weight);
    const auto b = layout_->view(theta, layers_[l].bias);
    MatrixXd z = w * a;
    z.colwise() += b.col(0);
    if (cache) cache->inputs.push_back(std::move(a));
    if (l + 1 == n) return z;
    const double alpha = layers_[l].alpha != SIZE_MAX ? layout_->view(theta, layers_[l].alpha)(0, 0) : 0.0;
    a = activate(activation_, z, alpha);
    if (cache) cache->pre.push_back(std::move(z));
    if (l + 2 == n && options.train && dropout_ > 0.0) {
      if (options.rng == nullptr) throw ProtocolError("dropout in training mode needs an rng");
      const double keep = 1.0 - dropout_;
      std::bernoulli_distribution coin(keep);
      MatrixXd mask(a.rows(), a.cols());
      for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = coin(*options.rng) ? 1.0 / keep : 0.0;
      a = a.cwiseProduct(mask);
      if (cache) cache->mask = std::move(mask);
    }
  }
  return a;
}

MatrixXd Mlp::backward(const VectorXd& theta, const Cache& cache, const MatrixXd& dy, VectorXd& grad) const {
  MatrixXd dz = dy;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto w = layout_->view(theta, layers_[l].weight);
    layout_->view(grad, layers_[l].weight) += dz * cache.inputs[l].transpose();
    layout_->view(grad, layers_[l].bias) += dz.rowwise().sum();
    MatrixXd da = w.transpose() * dz;
    if (l == 0) return da;
    // Back through the activation of hidden layer l - 1.
    const std::size_t h = l - 1;
    if (h + 2 == layers_.size() && cache.mask.size() > 0) da = da.cwiseProduct(cache.mask);
    const MatrixXd& pre = cache.pre[h];
    double alpha = 0.0;
    if (layers_[h].alpha != SIZE_MAX) {
      alpha = layout_->view(theta, layers_[h].alpha)(0, 0);
      layout_->view(grad, layers_[h].alpha)(0, 0) += (da.array() * pre.array().min(0.0)).sum();
    }
    dz = da.cwiseProduct(activation_slope(activation_, pre, alpha));
  }
  return dz;
}

// ---------------------------------------------------------------- gru

Gru::Gru(ParamLayout& layout, const std::string& prefix, int input, int hidden)
    : input_(input), hidden_(hidden), layout_(&layout) {
  w_input_ = layout.add(prefix + ".weight_input", 3 * hidden, input);
  w_hidden_ = layout.add(prefix + ".weight_hidden", 3 * hidden, hidden);
  b_input_ = layout.add(prefix + ".bias_input", 3 * hidden, 1);
  b_hidden_ = layout.add(prefix + ".bias_hidden", 3 * hidden, 1);
}

void Gru::initialize(VectorXd& theta, InitScheme init, std::mt19937_64& rng) const {
  // Each gate block is initialized as its own (hidden x fan_in) matrix.
  for (std::size_t idx : {w_input_, w_hidden_}) {
    auto w = layout_->view(theta, idx);
    for (int g = 0; g < 3; ++g) {
      MatrixXd block(hidden_, w.cols());
      Eigen::Map<MatrixXd> view(block.data(), block.rows(), block.cols());
      fill_weights(view, init, rng);
      w.middleRows(g * hidden_, hidden_) = block;
    }
  }
  layout_->view(theta, b_input_).setZero();
  layout_->view(theta, b_hidden_).setZero();
}

VectorXd Gru::forward(const VectorXd& theta, const MatrixXd& x, Cache* cache) const {
  const Index H = hidden_;
  const Index T = x.cols();
  if (T > 0 && x.rows() != input_) throw ValidationError("GRU input size mismatch");
  const auto wi = layout_->view(theta, w_input_);
  const auto wh = layout_->view(theta, w_hidden_);
  const auto bi = layout_->view(theta, b_input_);
  const auto bh = layout_->view(theta, b_hidden_);
  MatrixXd gi = wi * x;
  gi.colwise() += bi.col(0);
  MatrixXd h = MatrixXd::Zero(H, T + 1);
  MatrixXd r(H, T), z(H, T), n(H, T), hn(H, T);
  for (Index t = 0; t < T; ++t) {
    VectorXd gh = wh * h.col(t) + bh.col(0);
    r.col(t) = logistic(gi.col(t).head(H) + gh.head(H));
    z.col(t) = logistic(gi.col(t).segment(H, H) + gh.segment(H, H));
    hn.col(t) = gh.tail(H);
    n.col(t) = (gi.col(t).tail(H).array() + r.col(t).array() * hn.col(t).array()).tanh();
    h.col(t + 1) = (1.0 - z.col(t).array()) * n.col(t).array() + z.col(t).array() * h.col(t).array();
  }
  VectorXd out = h.col(T);
  if (cache) {
    cache->x = x;
    cache->h = std::move(h);
    cache->r = std::move(r);
    cache->z = std::move(z);
    cache->n = std::move(n);
    cache->hn = std::move(hn);
  }
  return out;
}

MatrixXd Gru::backward(const VectorXd& theta, const Cache& cache, const VectorXd& dh_out, VectorXd& grad) const {
  const Index H = hidden_;
  const Index T = cache.x.cols();
  if (T == 0) return MatrixXd(input_, 0);
  const auto wi = layout_->view(theta, w_input_);
  const auto wh = layout_->view(theta, w_hidden_);
  MatrixXd dgi(3 * H, T);
  MatrixXd dgh(3 * H, T);
  VectorXd dh = dh_out;
  for (Index t = T - 1; t >= 0; --t) {
    const auto r = cache.r.col(t).array();
    const auto z = cache.z.col(t).array();
    const auto n = cache.n.col(t).array();
    const auto hprev = cache.h.col(t).array();
    const Eigen::ArrayXd dn_pre = dh.array() * (1.0 - z) * (1.0 - n * n);
    const Eigen::ArrayXd dz_pre = dh.array() * (hprev - n) * z * (1.0 - z);
    const Eigen::ArrayXd dr_pre = dn_pre * cache.hn.col(t).array() * r * (1.0 - r);
    dgi.col(t) << dr_pre.matrix(), dz_pre.matrix(), dn_pre.matrix();
    dgh.col(t) << dr_pre.matrix(), dz_pre.matrix(), (dn_pre * r).matrix();
    dh = (dh.array() * z).matrix() + wh.transpose() * dgh.col(t);
  }
  layout_->view(grad, w_input_) += dgi * cache.x.transpose();
  layout_->view(grad, b_input_) += dgi.rowwise().sum();
  layout_->view(grad, w_hidden_) += dgh * cache.h.leftCols(T).transpose();
  layout_->view(grad, b_hidden_) += dgh.rowwise().sum();
  return wi.transpose() * dgi;
}

// ---------------------------------------------------------------- small

namespace {

struct SmallCache : ForwardCache {
  Mlp::Cache mlp;
};

struct DialogueCache {
  std::vector<Gru::Cache> words;
  Gru::Cache top;
};

// Distinct articles and contexts are encoded once per batch and shared by every
// candidate that refers to them; their gradients are summed before backprop.
struct DeepCache : ForwardCache {
  std::vector<DialogueCache> articles;
  std::vector<DialogueCache> contexts;
  std::vector<Gru::Cache> candidates;
  std::vector<std::size_t> article_of;
  std::vector<std::size_t> context_of;
  Mlp::Cache value;
  Mlp::Cache advantage;
};

VectorXd head_output(Objective objective, const MatrixXd& logits) {
  if (objective == Objective::kReward) return logits.row(1).transpose() - logits.row(0).transpose();
  return logits.row(0).transpose();
}

MatrixXd head_gradient(Objective objective, const VectorXd& dout) {
  if (objective == Objective::kReward) {
    MatrixXd d(2, dout.size());
    d.row(0) = -dout.transpose();
    d.row(1) = dout.transpose();
    return d;
  }
  return dout.transpose();
}

}  // namespace

SmallNet::SmallNet(NetworkSpec spec) : Network(std::move(spec)) {
  mlp_ = std::make_unique<Mlp>(layout_, "", spec_.input_dim, spec_.hidden, spec_.output_units(), spec_.activation,
                               spec_.dropout);
}

void SmallNet::initialize(VectorXd& theta, std::mt19937_64& rng) const {
  mlp_->initialize(theta, spec_.init, spec_.zero_init_output, rng);
}

VectorXd SmallNet::forward(const VectorXd& theta, std::span<const ScoringInput* const> batch,
                           const ForwardOptions& options, std::unique_ptr<ForwardCache>* cache) const {
  MatrixXd x(spec_.input_dim, static_cast<Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i]->features.size() != spec_.input_dim) {
      throw ValidationError("feature vector has " + std::to_string(batch[i]->features.size()) +
                            " values, network expects " + std::to_string(spec_.input_dim));
    }
    x.col(static_cast<Index>(i)) = batch[i]->features;
  }
  auto c = cache ? std::make_unique<SmallCache>() : nullptr;
  const MatrixXd logits = mlp_->forward(theta, x, options, c ? &c->mlp : nullptr);
  if (cache) *cache = std::move(c);
  return head_output(spec_.objective, logits);
}

void SmallNet::backward(const VectorXd& theta, const ForwardCache& cache, const VectorXd& dout, VectorXd& grad) const {
  const auto& c = dynamic_cast<const SmallCache&>(cache);
  mlp_->backward(theta, c.mlp, head_gradient(spec_.objective, dout), grad);
}

// ---------------------------------------------------------------- deep

DeepNet::DeepNet(NetworkSpec spec) : Network(std::move(spec)) {
  const int h = spec_.recurrent_hidden;
  word_gru_ = std::make_unique<Gru>(layout_, "word_gru", spec_.input_dim, h);
  utterance_gru_ = std::make_unique<Gru>(layout_, "utterance_gru", h, h);
  value_head_ = std::make_unique<Mlp>(layout_, "value.", 2 * h, spec_.head_hidden, spec_.output_units(),
                                      spec_.activation, spec_.dropout);
  advantage_head_ = std::make_unique<Mlp>(layout_, "advantage.", 3 * h, spec_.head_hidden, spec_.output_units(),
                                          spec_.activation, spec_.dropout);
}

void DeepNet::initialize(VectorXd& theta, std::mt19937_64& rng) const {
  word_gru_->initialize(theta, spec_.init, rng);
  utterance_gru_->initialize(theta, spec_.init, rng);
  value_head_->initialize(theta, spec_.init, spec_.zero_init_output, rng);
  advantage_head_->initialize(theta, spec_.init, spec_.zero_init_output, rng);
}

VectorXd DeepNet::forward(const VectorXd& theta, std::span<const ScoringInput* const> batch,
                          const ForwardOptions& options, std::unique_ptr<ForwardCache>* cache) const {
  const Index H = spec_.recurrent_hidden;
  const Index B = static_cast<Index>(batch.size());
  const bool keep = cache != nullptr;
  DeepCache c;
  c.article_of.resize(batch.size());
  c.context_of.resize(batch.size());
  if (keep) c.candidates.resize(batch.size());

  // Word GRU per utterance, then the utterance GRU over the results.
  auto encode_dialogue = [&](const std::vector<TokenVectors>& utterances, std::size_t first, DialogueCache* dc) {
    const std::size_t count = utterances.size() - first;
    MatrixXd vectors(H, static_cast<Index>(count));
    if (dc) dc->words.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      const MatrixXd x = stack_tokens(utterances[first + k], spec_.input_dim, spec_.max_tokens);
      vectors.col(static_cast<Index>(k)) = word_gru_->forward(theta, x, dc ? &dc->words[k] : nullptr);
    }
    return utterance_gru_->forward(theta, vectors, dc ? &dc->top : nullptr);
  };

  std::map<const void*, std::size_t> article_ids;
  std::map<std::vector<const void*>, std::size_t> context_ids;
  std::vector<VectorXd> article_vecs;
  std::vector<VectorXd> context_vecs;
  static const char kUtteranceEnd = 0;
  MatrixXd state(2 * H, B);
  MatrixXd action(3 * H, B);
  for (Index i = 0; i < B; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    const ScoringInput& in = *batch[si];
    if (!in.article || in.article->empty()) throw ValidationError("deep scorer input needs article sentences");

    auto [ait, new_article] = article_ids.emplace(in.article.get(), article_vecs.size());
    if (new_article) {
      if (keep) c.articles.emplace_back();
      article_vecs.push_back(encode_dialogue(*in.article, 0, keep ? &c.articles.back() : nullptr));
    }
    c.article_of[si] = ait->second;

    const std::size_t limit = static_cast<std::size_t>(spec_.max_context_messages);
    const std::size_t first = in.context.size() > limit ? in.context.size() - limit : 0;
    std::vector<const void*> key;
    for (std::size_t k = first; k < in.context.size(); ++k) {
      key.insert(key.end(), in.context[k].begin(), in.context[k].end());
      key.push_back(&kUtteranceEnd);
    }
    auto [cit, new_context] = context_ids.emplace(std::move(key), context_vecs.size());
    if (new_context) {
      if (keep) c.contexts.emplace_back();
      context_vecs.push_back(encode_dialogue(in.context, first, keep ? &c.contexts.back() : nullptr));
    }
    c.context_of[si] = cit->second;

    const VectorXd u = word_gru_->forward(theta, stack_tokens(in.candidate, spec_.input_dim, spec_.max_tokens),
                                          keep ? &c.candidates[si] : nullptr);
    const VectorXd& a = article_vecs[ait->second];
    const VectorXd& ctx = context_vecs[cit->second];
    state.col(i) << a, ctx;
    action.col(i) << a, ctx, u;
  }
  const MatrixXd v = value_head_->forward(theta, state, options, keep ? &c.value : nullptr);
  const MatrixXd adv = advantage_head_->forward(theta, action, options, keep ? &c.advantage : nullptr);
  if (keep) *cache = std::make_unique<DeepCache>(std::move(c));
  return head_output(spec_.objective, v + adv);
}

void DeepNet::backward(const VectorXd& theta, const ForwardCache& cache, const VectorXd& dout, VectorXd& grad) const {
  const auto& c = dynamic_cast<const DeepCache&>(cache);
  const Index H = spec_.recurrent_hidden;
  const MatrixXd dlogits = head_gradient(spec_.objective, dout);
  const MatrixXd dstate = value_head_->backward(theta, c.value, dlogits, grad);
  const MatrixXd daction = advantage_head_->backward(theta, c.advantage, dlogits, grad);

  MatrixXd darticle = MatrixXd::Zero(H, static_cast<Index>(c.articles.size()));
  MatrixXd dcontext = MatrixXd::Zero(H, static_cast<Index>(c.contexts.size()));
  for (std::size_t i = 0; i < c.candidates.size(); ++i) {
    const Index col = static_cast<Index>(i);
    darticle.col(static_cast<Index>(c.article_of[i])) += dstate.col(col).head(H) + daction.col(col).head(H);
    dcontext.col(static_cast<Index>(c.context_of[i])) += dstate.col(col).segment(H, H) + daction.col(col).segment(H, H);
    word_gru_->backward(theta, c.candidates[i], daction.col(col).tail(H), grad);
  }

  auto back_dialogue = [&](const DialogueCache& dc, const VectorXd& d) {
    const MatrixXd dvectors = utterance_gru_->backward(theta, dc.top, d, grad);
    for (std::size_t k = 0; k < dc.words.size(); ++k) {
      word_gru_->backward(theta, dc.words[k], dvectors.col(static_cast<Index>(k)), grad);
    }
  };
  for (std::size_t k = 0; k < c.articles.size(); ++k) back_dialogue(c.articles[k], darticle.col(static_cast<Index>(k)));
  for (std::size_t k = 0; k < c.contexts.size(); ++k) back_dialogue(c.contexts[k], dcontext.col(static_cast<Index>(k)));
}

}  // namespace chorus::scoring
