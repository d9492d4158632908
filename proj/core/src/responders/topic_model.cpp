#include "chorus/responders/topic_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "chorus/text/lexicons.hpp"
#include "chorus/text/tokenize.hpp"

namespace chorus::responders {
namespace {

constexpr char kMagic[8] = {'C', 'H', 'T', 'O', 'P', 'I', 'C', '1'};

std::uint32_t fnv1a(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

Eigen::VectorXf softmax(const Eigen::VectorXf& logits) {
  Eigen::VectorXf p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

}  // namespace

std::size_t topic_index(std::string_view label) {
  for (std::size_t i = 0; i < kTopicLabels.size(); ++i) {
    if (kTopicLabels[i] == label) return i;
  }
  throw ValidationError("unknown topic label: " + std::string(label));
}

TopicModel::TopicModel(int bucket_bits, int hidden) : bucket_bits_(bucket_bits), hidden_(hidden) {
  if (bucket_bits < 4 || bucket_bits > 24) throw ValidationError("bucket_bits must be in [4, 24]");
  if (hidden <= 0) throw ValidationError("hidden size must be positive");
  const Eigen::Index buckets = Eigen::Index{1} << bucket_bits;
  input_.resize(buckets, hidden);
  std::mt19937_64 rng(0x70b1c5eedULL);
  std::uniform_real_distribution<float> dist(-1.0f / static_cast<float>(hidden), 1.0f / static_cast<float>(hidden));
  for (Eigen::Index i = 0; i < input_.size(); ++i) input_.data()[i] = dist(rng);
  output_ = Eigen::MatrixXf::Zero(static_cast<Eigen::Index>(kTopicLabels.size()), hidden);
}

std::vector<std::uint32_t> TopicModel::ngram_ids(std::string_view text) const {
  const auto words = text::words_only(text::tokenize(text));
  const std::uint32_t mask = (1u << bucket_bits_) - 1u;
  std::vector<std::uint32_t> ids;
  ids.reserve(words.size() * 2);
  for (std::size_t i = 0; i < words.size(); ++i) {
    ids.push_back(fnv1a(words[i]) & mask);
    if (i + 1 < words.size()) ids.push_back(fnv1a(words[i] + ' ' + words[i + 1]) & mask);
  }
  return ids;
}

Eigen::VectorXf TopicModel::hidden_of(std::span<const std::uint32_t> ids) const {
  Eigen::VectorXf h = Eigen::VectorXf::Zero(hidden_);
  for (auto id : ids) h += input_.row(id).transpose();
  if (!ids.empty()) h /= static_cast<float>(ids.size());
  return h;
}

double TopicModel::train(std::span<const TopicExample> data, const TopicTrainConfig& cfg) {
  if (data.empty()) throw ValidationError("topic training corpus is empty");
  std::vector<std::vector<std::uint32_t>> ids;
  ids.reserve(data.size());
  for (const auto& ex : data) {
    if (ex.label >= kTopicLabels.size()) throw ValidationError("topic label out of range");
    ids.push_back(ngram_ids(ex.text));
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  const double total_steps = static_cast<double>(cfg.epochs) * static_cast<double>(data.size());
  double step = 0.0;
  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    epoch_loss = 0.0;
    for (auto idx : order) {
      const auto& ex_ids = ids[idx];
      const float lr = static_cast<float>(cfg.learning_rate * (1.0 - step / total_steps));
      step += 1.0;
      if (ex_ids.empty()) continue;
      const Eigen::VectorXf h = hidden_of(ex_ids);
      Eigen::VectorXf grad = softmax(output_ * h);
      epoch_loss -= std::log(std::max(grad[static_cast<Eigen::Index>(data[idx].label)], 1e-12f));
      grad[static_cast<Eigen::Index>(data[idx].label)] -= 1.0f;
      const Eigen::VectorXf grad_h = output_.transpose() * grad;
      output_.noalias() -= lr * grad * h.transpose();
      const float scale = lr / static_cast<float>(ex_ids.size());
      for (auto id : ex_ids) input_.row(id) -= scale * grad_h.transpose();
    }
    epoch_loss /= static_cast<double>(data.size());
  }
  return epoch_loss;
}

double TopicModel::loss(std::span<const TopicExample> data) const {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : data) {
    const auto ids = ngram_ids(ex.text);
    const Eigen::VectorXf p = softmax(output_ * hidden_of(ids));
    total -= std::log(std::max(static_cast<double>(p[static_cast<Eigen::Index>(ex.label)]), 1e-12));
  }
  return total / static_cast<double>(data.size());
}

TopicPrediction TopicModel::classify(std::string_view text) const {
  if (trim(text).empty()) throw ValidationError("cannot classify an empty article");
  const auto ids = ngram_ids(text);
  const Eigen::VectorXf p = softmax(output_ * hidden_of(ids));
  TopicPrediction out;
  Eigen::Index best = 0;
  p.maxCoeff(&best);
  out.label = static_cast<std::size_t>(best);
  out.confidence = p[best];
  for (std::size_t i = 0; i < out.probabilities.size(); ++i) out.probabilities[i] = p[static_cast<Eigen::Index>(i)];
  return out;
}

void TopicModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write topic model " + path.string());
  out.write(kMagic, sizeof kMagic);
  const std::int32_t header[2] = {bucket_bits_, hidden_};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(input_.data()), static_cast<std::streamsize>(input_.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(output_.data()), static_cast<std::streamsize>(output_.size() * sizeof(float)));
}

TopicModel TopicModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read topic model " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw ValidationError("not a topic model file");
  std::int32_t header[2];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  TopicModel m(header[0], header[1]);
  in.read(reinterpret_cast<char*>(m.input_.data()), static_cast<std::streamsize>(m.input_.size() * sizeof(float)));
  in.read(reinterpret_cast<char*>(m.output_.data()), static_cast<std::streamsize>(m.output_.size() * sizeof(float)));
  if (!in) throw ValidationError("truncated topic model file");
  return m;
}

std::vector<TopicExample> load_topic_corpus(const std::filesystem::path& path) {
  std::vector<TopicExample> out;
  for (const auto& line : text::read_resource_lines(path)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ValidationError("topic corpus line without a tab: " + line);
    out.push_back(TopicExample{topic_index(trim(std::string_view(line).substr(0, tab))), line.substr(tab + 1)});
  }
  return out;
}

}  // namespace chorus::responders
