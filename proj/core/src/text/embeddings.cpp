#include "chorus/text/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "chorus/model/types.hpp"
#include "chorus/text/tokenize.hpp"

namespace chorus::text {
namespace {

std::vector<const Eigen::VectorXd*> known_vectors(std::span<const std::string> tokens,
                                                  const EmbeddingStore& store) {
  std::vector<const Eigen::VectorXd*> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (const auto* v = store.find(t)) out.push_back(v);
  }
  return out;
}

Eigen::VectorXd extrema_pool(const std::vector<const Eigen::VectorXd*>& vecs, int dim) {
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(dim);
  for (const auto* v : vecs) {
    for (int d = 0; d < dim; ++d) {
      if (std::abs((*v)[d]) > std::abs(pooled[d])) pooled[d] = (*v)[d];
    }
  }
  return pooled;
}

double directed_greedy(const std::vector<const Eigen::VectorXd*>& from,
                       const std::vector<const Eigen::VectorXd*>& to) {
  double total = 0.0;
  for (const auto* a : from) {
    double best = -1.0;
    for (const auto* b : to) best = std::max(best, cosine_sim(*a, *b));
    total += best;
  }
  return total / static_cast<double>(from.size());
}

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Portable Gaussian draws (Box-Muller over splitmix64) keyed by a string.
Eigen::VectorXd gaussian_for(std::string_view key, int dim, std::uint64_t seed) {
  std::uint64_t state = seed;
  for (unsigned char c : key) state = (state ^ c) * 1099511628211ULL;
  Eigen::VectorXd v(dim);
  constexpr double kTwoPi = 6.283185307179586;
  for (int d = 0; d < dim; d += 2) {
    const double u1 = (static_cast<double>(splitmix(state) >> 11) + 1.0) / 9007199254740993.0;
    const double u2 = static_cast<double>(splitmix(state) >> 11) / 9007199254740992.0;
    const double r = std::sqrt(-2.0 * std::log(u1));
    v[d] = r * std::cos(kTwoPi * u2);
    if (d + 1 < dim) v[d + 1] = r * std::sin(kTwoPi * u2);
  }
  return v;
}

}  // namespace

EmbeddingStore EmbeddingStore::synthetic(std::span<const std::string> vocabulary, int dimension,
                                         std::uint64_t seed) {
  EmbeddingStore store(dimension);
  for (const auto& raw : vocabulary) {
    const auto word = to_lower(raw);
    if (word.empty() || store.contains(word)) continue;
    Eigen::VectorXd v = gaussian_for("w:" + word, dimension, seed);
    if (word.size() > 4) v += gaussian_for("p:" + word.substr(0, 4), dimension, seed);
    store.insert(word, v / v.norm());
  }
  return store;
}

void EmbeddingStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embedding file " + path.string());
  std::vector<const std::string*> keys;
  keys.reserve(table_.size());
  for (const auto& [k, v] : table_) keys.push_back(&k);
  std::sort(keys.begin(), keys.end(), [](const auto* a, const auto* b) { return *a < *b; });
  out << table_.size() << ' ' << dimension_ << '\n';
  out.precision(9);
  for (const auto* k : keys) {
    out << *k;
    for (double x : table_.at(*k)) out << ' ' << x;
    out << '\n';
  }
}

std::vector<std::string> collect_vocabulary(const std::filesystem::path& dir) {
  std::set<std::string> words;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext != ".txt" && ext != ".tsv") continue;
    std::ifstream in(entry.path());
    std::string line;
    while (std::getline(in, line)) {
      for (auto& w : words_only(tokenize(line))) words.insert(std::move(w));
    }
  }
  return {words.begin(), words.end()};
}

EmbeddingStore::EmbeddingStore(int dimension) : dimension_(dimension) {
  if (dimension <= 0) throw ValidationError("embedding dimension must be positive");
  zero_ = Eigen::VectorXd::Zero(dimension);
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file " + path.string());
  return parse(in);
}

EmbeddingStore EmbeddingStore::parse(std::istream& in) {
  std::string line;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  int dim = -1;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> values;
    double x = 0.0;
    while (fields >> x) values.push_back(x);
    if (!fields.eof()) {
      throw ValidationError("embedding line " + std::to_string(line_no) + ": non-numeric field");
    }
    const bool integral_token = !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
      return std::isdigit(static_cast<unsigned char>(c)) != 0;
    });
    if (line_no == 1 && values.size() == 1 && integral_token && values[0] == std::floor(values[0])) {
      continue;  // "count dim" header
    }
    if (values.empty()) {
      throw ValidationError("embedding line " + std::to_string(line_no) + ": no vector values");
    }
    if (dim < 0) dim = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != dim) {
      throw ValidationError("embedding line " + std::to_string(line_no) + ": expected " +
                            std::to_string(dim) + " values, got " + std::to_string(values.size()));
    }
    rows.emplace_back(std::move(token), std::move(values));
  }
  if (dim < 0) throw ValidationError("embedding file has no vectors");
  EmbeddingStore store(dim);
  for (auto& [token, values] : rows) {
    store.insert(std::move(token), Eigen::Map<Eigen::VectorXd>(values.data(), dim));
  }
  return store;
}

void EmbeddingStore::insert(std::string token, Eigen::VectorXd vec) {
  if (vec.size() != dimension_) throw ValidationError("embedding dimension mismatch on insert");
  table_.try_emplace(to_lower(token), std::move(vec));
}

bool EmbeddingStore::contains(std::string_view token) const { return find(token) != nullptr; }

const Eigen::VectorXd* EmbeddingStore::find(std::string_view token) const {
  const auto it = table_.find(std::string(token));
  return it == table_.end() ? nullptr : &it->second;
}

const Eigen::VectorXd& EmbeddingStore::lookup(std::string_view token) const {
  const auto* v = find(token);
  return v ? *v : zero_;
}

Eigen::VectorXd avg_embedding(std::span<const std::string> tokens, const EmbeddingStore& store) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(store.dimension());
  int known = 0;
  for (const auto& t : tokens) {
    if (const auto* v = store.find(t)) {
      sum += *v;
      ++known;
    }
  }
  if (known > 0) sum /= static_cast<double>(known);
  return sum;
}

double cosine_sim(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine_sim: dimension mismatch");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

double extrema_sim(std::span<const std::string> a, std::span<const std::string> b,
                   const EmbeddingStore& store) {
  const auto va = known_vectors(a, store);
  const auto vb = known_vectors(b, store);
  if (va.empty() || vb.empty()) return 0.0;
  return cosine_sim(extrema_pool(va, store.dimension()), extrema_pool(vb, store.dimension()));
}

double greedy_match_sim(std::span<const std::string> a, std::span<const std::string> b,
                        const EmbeddingStore& store) {
  const auto va = known_vectors(a, store);
  const auto vb = known_vectors(b, store);
  if (va.empty() || vb.empty()) return 0.0;
  return 0.5 * (directed_greedy(va, vb) + directed_greedy(vb, va));
}

}  // namespace chorus::text
