#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chorus/scoring/config.hpp"

namespace chorus::scoring {

/// Named matrix slices of one flat parameter vector.
class ParamLayout {
 public:
  struct Tensor {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index offset = 0;
    Eigen::Index size() const { return rows * cols; }
  };

  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);
  Eigen::Index total() const { return total_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  const Tensor& tensor(std::size_t i) const { return tensors_.at(i); }

  Eigen::Map<Eigen::MatrixXd> view(Eigen::VectorXd& theta, std::size_t i) const;
  Eigen::Map<const Eigen::MatrixXd> view(const Eigen::VectorXd& theta, std::size_t i) const;

 private:
  std::vector<Tensor> tensors_;
  Eigen::Index total_ = 0;
};

/// Shape of a scoring network. Sizes default to the published configuration.
struct NetworkSpec {
  Architecture arch = Architecture::kSmall;
  Objective objective = Objective::kReward;
  /// Feature count (small) or word-vector dimension (deep).
  int input_dim = 0;
  /// Small trunk hidden sizes.
  std::vector<int> hidden{789, 789, 394};
  /// Deep: recurrent state size and the hidden sizes of each dueling head.
  int recurrent_hidden = 300;
  std::vector<int> head_hidden{300, 150};
  int max_context_messages = 11;
  int max_tokens = 40;
  Activation activation = Activation::kPrelu;
  InitScheme init = InitScheme::kHe;
  double dropout = 0.0;  // drop probability on the last hidden layer of each stack
  bool zero_init_output = true;

  int output_units() const { return objective == Objective::kReward ? 2 : 1; }
  void validate() const;
  nlohmann::json to_json() const;
  static NetworkSpec from_json(const nlohmann::json& j);
  bool operator==(const NetworkSpec&) const = default;
};

/// Network spec for `arch`/`objective` whose activation, init and dropout come from `cfg`.
NetworkSpec make_spec(Architecture arch, Objective objective, int input_dim, const TrainConfig& cfg);

/// Word vectors of one utterance. Pointers refer into an EmbeddingStore that outlives the input.
using TokenVectors = std::vector<const Eigen::VectorXd*>;

/// Encoded (state, action) pair. The small network reads `features`;
/// the deep network reads the three token-vector fields.
struct ScoringInput {
  Eigen::VectorXd features;
  std::shared_ptr<const std::vector<TokenVectors>> article;
  std::vector<TokenVectors> context;
  TokenVectors candidate;
};

struct ForwardOptions {
  bool train = false;  // enables dropout
  std::mt19937_64* rng = nullptr;  // required when train is set and dropout > 0
};

/// Per-call intermediate values needed by backward().
class ForwardCache {
 public:
  virtual ~ForwardCache() = default;
};

/// A differentiable scorer over a flat parameter vector. Instances hold only
/// the architecture and are safe to share between threads.
///
/// forward() returns one value per input: the logit difference l1 - l0 for
/// reward networks (P(upvote) = sigmoid of it) and Q itself for Q networks.
class Network {
 public:
  virtual ~Network() = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  static std::unique_ptr<Network> create(const NetworkSpec& spec);

  const NetworkSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  Eigen::Index parameter_count() const { return layout_.total(); }

  /// Fresh parameters drawn with the spec's init scheme.
  Eigen::VectorXd initial_parameters(std::uint64_t seed) const;

  virtual Eigen::VectorXd forward(const Eigen::VectorXd& theta, std::span<const ScoringInput* const> batch,
                                  const ForwardOptions& options, std::unique_ptr<ForwardCache>* cache) const = 0;
  /// Accumulates d(sum_i dout_i * out_i)/dtheta into `grad`.
  virtual void backward(const Eigen::VectorXd& theta, const ForwardCache& cache, const Eigen::VectorXd& dout,
                        Eigen::VectorXd& grad) const = 0;

 protected:
  explicit Network(NetworkSpec spec) : spec_(std::move(spec)) {}
  virtual void initialize(Eigen::VectorXd& theta, std::mt19937_64& rng) const = 0;

  NetworkSpec spec_;
  ParamLayout layout_;
};

/// Fully connected stack: input -> hidden... -> output, dropout after the last hidden layer.
class Mlp {
 public:
  Mlp(ParamLayout& layout, const std::string& prefix, int input, std::vector<int> hidden, int output,
      Activation activation, double dropout);

  void initialize(Eigen::VectorXd& theta, InitScheme init, bool zero_output, std::mt19937_64& rng) const;

  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  // input of each layer
    std::vector<Eigen::MatrixXd> pre;  // pre-activation of each hidden layer
    Eigen::MatrixXd mask;  // dropout scale on the last hidden layer, empty when inactive
  };

  /// X is (input x batch); returns (output x batch).
  Eigen::MatrixXd forward(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x, const ForwardOptions& options,
                          Cache* cache) const;
  /// Returns dX and accumulates parameter gradients.
  Eigen::MatrixXd backward(const Eigen::VectorXd& theta, const Cache& cache, const Eigen::MatrixXd& dy,
                           Eigen::VectorXd& grad) const;

 private:
  struct Layer {
    std::size_t weight;
    std::size_t bias;
    std::size_t alpha;  // PReLU slope, only for hidden layers with PReLU
  };
  std::vector<int> sizes_;
  std::vector<Layer> layers_;
  Activation activation_;
  double dropout_;
  const ParamLayout* layout_;
};

/// Gated recurrent unit over a sequence of column vectors.
class Gru {
 public:
  Gru(ParamLayout& layout, const std::string& prefix, int input, int hidden);

  void initialize(Eigen::VectorXd& theta, InitScheme init, std::mt19937_64& rng) const;

  struct Cache {
    Eigen::MatrixXd x;  // input x T
    Eigen::MatrixXd h;  // hidden x (T + 1), column 0 is the zero initial state
    Eigen::MatrixXd r, z, n, hn;  // gates and W_hn h + b_hn, hidden x T
  };

  /// Final hidden state; the zero vector for an empty sequence.
  Eigen::VectorXd forward(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x, Cache* cache) const;
  /// Returns dX (input x T) and accumulates parameter gradients.
  Eigen::MatrixXd backward(const Eigen::VectorXd& theta, const Cache& cache, const Eigen::VectorXd& dh,
                           Eigen::VectorXd& grad) const;

  int hidden() const { return hidden_; }

 private:
  std::size_t w_input_, w_hidden_, b_input_, b_hidden_;
  int input_;
  int hidden_;
  const ParamLayout* layout_;
};

/// Feed-forward scorer over hand-crafted features.
class SmallNet : public Network {
 public:
  explicit SmallNet(NetworkSpec spec);

  Eigen::VectorXd forward(const Eigen::VectorXd& theta, std::span<const ScoringInput* const> batch,
                          const ForwardOptions& options, std::unique_ptr<ForwardCache>* cache) const override;
  void backward(const Eigen::VectorXd& theta, const ForwardCache& cache, const Eigen::VectorXd& dout,
                Eigen::VectorXd& grad) const override;

 protected:
  void initialize(Eigen::VectorXd& theta, std::mt19937_64& rng) const override;

 private:
  std::unique_ptr<Mlp> mlp_;
};

/// Hierarchical recurrent encoder with dueling heads: out = V([a;c]) + Adv([a;c;u]),
/// where a, c and u encode the article, the context and the candidate with shared GRUs.
class DeepNet : public Network {
 public:
  explicit DeepNet(NetworkSpec spec);

  Eigen::VectorXd forward(const Eigen::VectorXd& theta, std::span<const ScoringInput* const> batch,
                          const ForwardOptions& options, std::unique_ptr<ForwardCache>* cache) const override;
  void backward(const Eigen::VectorXd& theta, const ForwardCache& cache, const Eigen::VectorXd& dout,
                Eigen::VectorXd& grad) const override;

 protected:
  void initialize(Eigen::VectorXd& theta, std::mt19937_64& rng) const override;

 private:
  std::unique_ptr<Gru> word_gru_;
  std::unique_ptr<Gru> utterance_gru_;
  std::unique_ptr<Mlp> value_head_;
  std::unique_ptr<Mlp> advantage_head_;
};

}  // namespace chorus::scoring
