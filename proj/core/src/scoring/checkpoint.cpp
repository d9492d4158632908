#include "chorus/scoring/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "chorus/model/types.hpp"

namespace chorus::scoring {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'C', 'H', 'O', 'R', 'U', 'S', 'C', 'K'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ValidationError("truncated checkpoint " + path.string());
  return v;
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  if (theta.size() == 0) throw ValidationError("refusing to save an empty checkpoint");
  nlohmann::json header{{"network", spec.to_json()}, {"train_config", config.to_json()}, {"metadata", metadata}};
  header["feature_manifest"] = manifest ? manifest->to_json() : nlohmann::json(nullptr);
  const std::string text = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(theta.size()));
  out.write(reinterpret_cast<const char*>(theta.data()), static_cast<std::streamsize>(theta.size() * sizeof(double)));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ValidationError(path.string() + " is not a checkpoint");
  }
  const auto version = take<std::uint32_t>(in, path);
  if (version != kVersion) throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  const auto header_size = take<std::uint64_t>(in, path);
  if (header_size > (1ULL << 30)) throw ValidationError("corrupt checkpoint header length");
  std::string text(header_size, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_size))) {
    throw ValidationError("truncated checkpoint " + path.string());
  }
  const auto header = nlohmann::json::parse(text, nullptr, false);
  if (header.is_discarded()) throw ValidationError("corrupt checkpoint header in " + path.string());

  Checkpoint ck;
  try {
    ck.spec = NetworkSpec::from_json(header.at("network"));
    ck.config = TrainConfig::from_json(header.at("train_config"));
    ck.metadata = header.value("metadata", nlohmann::json::object());
    if (!header.at("feature_manifest").is_null()) {
      ck.manifest = features::FeatureManifest::from_json(header.at("feature_manifest"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad checkpoint header: " + std::string(e.what()));
  }
  const auto count = take<std::uint64_t>(in, path);
  const auto expected = Network::create(ck.spec)->parameter_count();
  if (count != static_cast<std::uint64_t>(expected)) {
    throw ValidationError("checkpoint holds " + std::to_string(count) + " parameters, architecture needs " +
                          std::to_string(expected));
  }
  ck.theta.resize(static_cast<Eigen::Index>(count));
  if (!in.read(reinterpret_cast<char*>(ck.theta.data()), static_cast<std::streamsize>(count * sizeof(double)))) {
    throw ValidationError("truncated checkpoint " + path.string());
  }
  return ck;
}

bool Checkpoint::operator==(const Checkpoint& other) const {
  return spec == other.spec && config == other.config && manifest == other.manifest && metadata == other.metadata &&
         theta.size() == other.theta.size() &&
         std::memcmp(theta.data(), other.theta.data(), static_cast<std::size_t>(theta.size()) * sizeof(double)) == 0;
}

}  // namespace chorus::scoring
