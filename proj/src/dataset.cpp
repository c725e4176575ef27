#include "vitalrr/dataset.hpp"

#include <filesystem>

#include "vitalrr/error.hpp"
#include "vitalrr/image.hpp"
#include "vitalrr/infer.hpp"
#include "vitalrr/io.hpp"

namespace vitalrr {

ScenarioFamily mixed_family(std::size_t index) {
  switch (index % 10) {
    case 3: return ScenarioFamily::Clean;
    case 7: return ScenarioFamily::PureRbm;
    default: return ScenarioFamily::Rbm;
  }
}

std::uint64_t scenario_seed(std::uint64_t base, std::size_t index) {
  // splitmix64 of (base, index)
  std::uint64_t z = base * 0x9E3779B97F4A7C15ull + index + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<ScenarioConfig> mixed_scenarios(std::size_t count, std::uint64_t base_seed) {
  std::vector<ScenarioConfig> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(make_scenario(mixed_family(i), scenario_seed(base_seed, i)));
  return out;
}

TrainExample make_example(const BeatSignal& beat, const GroundTruth& truth, const DetectorArch& arch,
                          const WindowConfig& window) {
  TrainExample ex;
  ex.image = to_detector_grid(stft(beat, window), model_grid(arch));
  std::vector<SliceInterval> gt;
  for (const auto& g : truth.intervals) gt.push_back({g.start_s, g.end_s, 1.0});
  ex.spans = column_spans(ex.image, gt);
  return ex;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  const auto j = read_json(path);
  const auto dir = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return (fp.is_absolute() ? fp : dir / fp).string();
  };
  std::vector<ManifestEntry> out;
  try {
    for (const auto& it : j.at("items")) {
      out.push_back({it.value("id", std::to_string(out.size())), resolve(it.at("beat").get<std::string>()),
                     resolve(it.at("truth").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest " + path + ": " + e.what());
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& e : entries) items.push_back({{"id", e.id}, {"beat", e.beat_path}, {"truth", e.truth_path}});
  write_json(path, {{"items", items}});
}

}  // namespace vitalrr
