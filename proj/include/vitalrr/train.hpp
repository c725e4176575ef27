#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vitalrr/loss.hpp"

namespace vitalrr {

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  int epochs = 40;
  int batch_size = 8;
  std::uint64_t seed = 1;
  bool mirror = true;  // random time-axis flip per example and epoch
  void validate() const;
};

struct TrainExample {
  DetectorImage image;
  std::vector<ColumnSpan> spans;
};

struct TrainTrace {
  std::vector<LossValue> epochs;  // mean over batches, measured before each update
};

/// Called after every epoch with (epoch index, mean loss).
using EpochCallback = std::function<void(int, const LossValue&)>;

/// Momentum SGD (v = m v + g; p -= lr v). Deterministic for a given seed.
TrainTrace train(DetectorModel& model, const std::vector<TrainExample>& data, const TrainConfig& cfg,
                 const LossWeights& w, const EpochCallback& on_epoch = {});

TrainExample mirrored(const TrainExample& ex);

/// Loss-trace CSV: epoch,l_ciou,l_cls,l_dfl,total
std::string trace_csv(const TrainTrace& trace);

/// Mean of each window of `window` consecutive values (length n - window + 1).
std::vector<double> moving_average(const std::vector<double>& v, int window);

}  // namespace vitalrr
