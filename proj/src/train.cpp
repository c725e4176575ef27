#include "vitalrr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "vitalrr/error.hpp"

namespace vitalrr {

void TrainConfig::validate() const {
  // 0 is allowed: a frozen run that only measures the loss
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
}

TrainExample mirrored(const TrainExample& ex) {
  TrainExample m = ex;
  const int R = ex.image.rows, C = ex.image.cols;
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      m.image.pixels[static_cast<std::size_t>(r) * C + c] = ex.image.at(r, C - 1 - c);
    }
  }
  m.spans.clear();
  for (auto it = ex.spans.rbegin(); it != ex.spans.rend(); ++it) m.spans.push_back({C - it->end, C - it->start});
  return m;
}

TrainTrace train(DetectorModel& model, const std::vector<TrainExample>& data, const TrainConfig& cfg,
                 const LossWeights& w, const EpochCallback& on_epoch) {
  cfg.validate();
  w.validate();
  if (data.empty()) throw ConfigError("training set is empty");
  const auto& a = model.arch;
  for (const auto& ex : data) {
    if (ex.image.rows != a.in_h || ex.image.cols != a.in_w) {
      throw ShapeError("training image does not match the model input grid");
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<float> params = model.flatten();
  std::vector<double> velocity(params.size(), 0.0);
  const std::size_t plane = static_cast<std::size_t>(a.in_h) * a.in_w;

  TrainTrace trace;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<char> flip(data.size(), 0);
    if (cfg.mirror) {
      std::bernoulli_distribution coin(0.5);
      for (auto& f : flip) f = coin(rng);
    }
    LossValue sum;
    int batches = 0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const std::size_t n = std::min<std::size_t>(cfg.batch_size, order.size() - at);
      Tensor<float> x(static_cast<int>(n), 1, a.in_h, a.in_w);
      std::vector<std::vector<ColumnSpan>> gt;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = order[at + i];
        const TrainExample ex = flip[k] ? mirrored(data[k]) : data[k];
        std::copy(ex.image.pixels.begin(), ex.image.pixels.end(), x.data() + i * plane);
        gt.push_back(ex.spans);
      }
      const auto pass = network_forward(model, x);
      LossResult<float> loss;
      try {
        loss = detection_loss(pass.out, gt, a, w);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches));
      }
      const auto grads = network_backward(model, pass, loss.grad);
      for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = cfg.momentum * velocity[i] + static_cast<double>(grads[i]);
        params[i] = static_cast<float>(params[i] - cfg.learning_rate * velocity[i]);
      }
      model.unflatten(params);
      sum.ciou += loss.value.ciou;
      sum.cls += loss.value.cls;
      sum.dfl += loss.value.dfl;
      sum.total += loss.value.total;
      ++batches;
    }
    for (double* v : {&sum.ciou, &sum.cls, &sum.dfl, &sum.total}) *v /= batches;
    trace.epochs.push_back(sum);
    if (on_epoch) on_epoch(epoch, sum);
  }
  for (float p : params) {
    if (!std::isfinite(p)) throw NumericError("training produced non-finite weights");
  }
  return trace;
}

std::string trace_csv(const TrainTrace& trace) {
  std::string out = "epoch,l_ciou,l_cls,l_dfl,total\n";
  char buf[160];
  for (std::size_t e = 0; e < trace.epochs.size(); ++e) {
    const auto& v = trace.epochs[e];
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g\n", e + 1, v.ciou, v.cls, v.dfl, v.total);
    out += buf;
  }
  return out;
}

std::vector<double> moving_average(const std::vector<double>& v, int window) {
  std::vector<double> out;
  if (window < 1 || v.size() < static_cast<std::size_t>(window)) return out;
  double s = std::accumulate(v.begin(), v.begin() + window, 0.0);
  out.push_back(s / window);
  for (std::size_t i = window; i < v.size(); ++i) {
    s += v[i] - v[i - window];
    out.push_back(s / window);
  }
  return out;
}

}  // namespace vitalrr
