#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vitalrr/scenario_gen.hpp"
#include "vitalrr/synth.hpp"
#include "vitalrr/train.hpp"

namespace vitalrr {

/// Family of the i-th scenario in a mixed set: one in ten clean, one in ten
/// pure movement, the rest movement-corrupted.
ScenarioFamily mixed_family(std::size_t index);

/// Seed of the i-th scenario of a set; distinct sets use distinct base seeds.
std::uint64_t scenario_seed(std::uint64_t base, std::size_t index);

std::vector<ScenarioConfig> mixed_scenarios(std::size_t count, std::uint64_t base_seed);

TrainExample make_example(const BeatSignal& beat, const GroundTruth& truth, const DetectorArch& arch,
                          const WindowConfig& window = {});

/// Manifest JSON: {"items": [{"id": ..., "beat": path, "truth": path}, ...]};
/// relative paths resolve against the manifest's directory.
struct ManifestEntry {
  std::string id;
  std::string beat_path;
  std::string truth_path;
};
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

}  // namespace vitalrr
