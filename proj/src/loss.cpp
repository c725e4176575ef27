#include "vitalrr/loss.hpp"

#include <algorithm>
#include <cmath>

#include "vitalrr/error.hpp"
#include "vitalrr/interval.hpp"

namespace vitalrr {

void LossWeights::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || alpha + beta > 1.0 + 1e-12) {
    throw ConfigError("loss weights need alpha, beta >= 0 and alpha + beta <= 1");
  }
}

std::vector<int> assign_columns(const std::vector<ColumnSpan>& gt, int cols) {
  std::vector<int> owner(cols, -1);
  for (int c = 0; c < cols; ++c) {
    const double u = c + 0.5;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (u >= gt[g].start && u <= gt[g].end) {
        owner[c] = static_cast<int>(g);
        break;
      }
    }
  }
  return owner;
}

double ciou_1d(double ps, double pe, double gs, double ge, double* d_ps, double* d_pe) {
  const double lo = std::max(ps, gs), hi = std::min(pe, ge);
  const double inter = std::max(0.0, hi - lo);
  const double uni = (pe - ps) + (ge - gs) - inter;
  const double iou = inter / uni;
  const double dc = 0.5 * (ps + pe) - 0.5 * (gs + ge);
  const double enc = std::max(pe, ge) - std::min(ps, gs);
  const double loss = 1.0 - iou + dc * dc / (enc * enc);
  if (d_ps || d_pe) {
    // d inter / d ps, d pe (piecewise)
    double di_ps = 0.0, di_pe = 0.0;
    if (hi > lo) {
      if (ps > gs) di_ps = -1.0;
      if (pe < ge) di_pe = 1.0;
    }
    const double du_ps = -1.0 - di_ps, du_pe = 1.0 - di_pe;
    const double diou_ps = (di_ps * uni - inter * du_ps) / (uni * uni);
    const double diou_pe = (di_pe * uni - inter * du_pe) / (uni * uni);
    const double de_ps = ps < gs ? -1.0 : 0.0;
    const double de_pe = pe > ge ? 1.0 : 0.0;
    const double r = dc * dc / (enc * enc);
    const double dr_ps = dc / (enc * enc) - 2.0 * r / enc * de_ps;
    const double dr_pe = dc / (enc * enc) - 2.0 * r / enc * de_pe;
    if (d_ps) *d_ps = -diou_ps + dr_ps;
    if (d_pe) *d_pe = -diou_pe + dr_pe;
  }
  return loss;
}

std::vector<ColumnSpan> column_spans(const DetectorImage& image, const std::vector<SliceInterval>& gt) {
  std::vector<ColumnSpan> out;
  for (const auto& g : gt) {
    const double s = std::clamp(image.time_to_column(g.start_s), 0.0, static_cast<double>(image.cols));
    const double e = std::clamp(image.time_to_column(g.end_s), 0.0, static_cast<double>(image.cols));
    if (e > s) out.push_back({s, e});
  }
  return out;
}

namespace {

// Softmax over bins at one column, plus the expected distance.
template <typename T>
double edge_distribution(const Tensor<T>& z, int n, int first, int bins, int col, double bw,
                         std::vector<double>& p) {
  double mx = -INFINITY;
  for (int b = 0; b < bins; ++b) mx = std::max(mx, static_cast<double>(z(n, first + b, 0, col)));
  double sum = 0.0;
  for (int b = 0; b < bins; ++b) {
    p[b] = std::exp(static_cast<double>(z(n, first + b, 0, col)) - mx);
    sum += p[b];
  }
  double e = 0.0;
  for (int b = 0; b < bins; ++b) {
    p[b] /= sum;
    e += p[b] * b * bw;
  }
  return e;
}

}  // namespace

template <typename T>
LossResult<T> detection_loss(const Tensor<T>& logits, const std::vector<std::vector<ColumnSpan>>& gt,
                             const DetectorArch& arch, const LossWeights& w) {
  w.validate();
  const int N = logits.n(), W = logits.w(), B = arch.dfl_bins;
  require_shape(logits, N, arch.head_outputs(), 1, W, "loss logits");
  if (W < 1) throw ShapeError("loss needs at least one column");
  if (gt.size() != static_cast<std::size_t>(N)) throw ShapeError("one ground-truth list per batch item");
  const double bw = arch.bin_width();
  const double max_target = (B - 1) - 0.01;

  LossResult<T> res;
  res.grad = Tensor<T>(N, arch.head_outputs(), 1, W);
  std::vector<double> pl(B), pr(B);
  for (int n = 0; n < N; ++n) {
    const auto owner = assign_columns(gt[n], W);
    int npos = 0;
    for (int o : owner) npos += o >= 0;

    double cls = 0.0;
    for (int c = 0; c < W; ++c) {
      const double z = static_cast<double>(logits(n, 0, 0, c));
      const double y = owner[c] >= 0 ? 1.0 : 0.0;
      // softplus(z) - y z, stable
      cls += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y * z;
      const double sig = 1.0 / (1.0 + std::exp(-z));
      res.grad(n, 0, 0, c) += static_cast<T>(w.beta * (sig - y) / W / N);
    }
    cls /= W;

    double ciou = 0.0, dfl = 0.0;
    for (int c = 0; c < W && npos > 0; ++c) {
      if (owner[c] < 0) continue;
      const ColumnSpan& g = gt[n][owner[c]];
      const double u = c + 0.5;
      const double dl = edge_distribution(logits, n, 1, B, c, bw, pl);
      const double dr = edge_distribution(logits, n, 1 + B, B, c, bw, pr);
      double d_ps = 0.0, d_pe = 0.0;
      ciou += ciou_1d(u - dl, u + dr, g.start, g.end, &d_ps, &d_pe);
      // ps = u - dl, pe = u + dr; d dist / d z_b = p_b (b * bw - dist)
      const double sc = w.alpha / npos / N;
      for (int b = 0; b < B; ++b) {
        res.grad(n, 1 + b, 0, c) += static_cast<T>(sc * -d_ps * pl[b] * (b * bw - dl));
        res.grad(n, 1 + B + b, 0, c) += static_cast<T>(sc * d_pe * pr[b] * (b * bw - dr));
      }

      const double sd = w.dfl() / npos / N * 0.5;
      auto dfl_side = [&](double target_cols, const std::vector<double>& p, int first) {
        const double t = std::clamp(target_cols / bw, 0.0, max_target);
        const int i = static_cast<int>(std::floor(t));
        const double wr = t - i, wl = 1.0 - wr;
        const double l = -(wl * std::log(std::max(p[i], 1e-300)) + wr * std::log(std::max(p[i + 1], 1e-300)));
        for (int b = 0; b < B; ++b) {
          const double target = (b == i ? wl : 0.0) + (b == i + 1 ? wr : 0.0);
          res.grad(n, first + b, 0, c) += static_cast<T>(sd * (p[b] - target));
        }
        return l;
      };
      dfl += 0.5 * (dfl_side(u - g.start, pl, 1) + dfl_side(g.end - u, pr, 1 + B));
    }
    if (npos > 0) {
      ciou /= npos;
      dfl /= npos;
    }
    res.value.ciou += ciou / N;
    res.value.cls += cls / N;
    res.value.dfl += dfl / N;
  }
  res.value.total = w.alpha * res.value.ciou + w.beta * res.value.cls + w.dfl() * res.value.dfl;
  if (!std::isfinite(res.value.total)) {
    throw NumericError("non-finite loss (ciou " + std::to_string(res.value.ciou) + ", cls " +
                       std::to_string(res.value.cls) + ", dfl " + std::to_string(res.value.dfl) + ")");
  }
  return res;
}

template LossResult<float> detection_loss(const Tensor<float>&, const std::vector<std::vector<ColumnSpan>>&,
                                          const DetectorArch&, const LossWeights&);
template LossResult<double> detection_loss(const Tensor<double>&, const std::vector<std::vector<ColumnSpan>>&,
                                           const DetectorArch&, const LossWeights&);

}  // namespace vitalrr
