#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "vitalrr/tensor.hpp"

namespace testing {

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("vitalrr_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

template <typename T>
void fill_normal(vitalrr::Tensor<T>& t, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  for (auto& v : t.values()) v = static_cast<T>(nd(rng));
}

template <typename T>
void fill_normal(std::vector<T>& v, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  for (auto& x : v) x = static_cast<T>(nd(rng));
}

}  // namespace testing
