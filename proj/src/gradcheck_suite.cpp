#include "vitalrr/gradcheck_suite.hpp"

#include <random>

#include "vitalrr/dsc.hpp"
#include "vitalrr/loss.hpp"
#include "vitalrr/model.hpp"

namespace vitalrr {

namespace {

void fill(std::span<double> v, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  for (double& x : v) x = d(rng);
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

void add(std::vector<GradCheckEntry>& out, GradCheckReport r, double tol) {
  out.push_back({std::move(r), tol});
}

void conv_checks(std::vector<GradCheckEntry>& out, std::mt19937_64& rng) {
  ConvSpec<double> s(2, 3, 3, 3, 1, 1);
  fill(s.weight, rng);
  fill(s.bias, rng);
  Tensor<double> x(2, 2, 5, 7);
  fill(x.values(), rng);
  const auto y = conv2d_forward(x, s);
  Tensor<double> r(y.n(), y.c(), y.h(), y.w());
  fill(r.values(), rng);
  const auto g = conv2d_backward(x, s, r);
  add(out, grad_check("conv2d.x", [&](std::span<const double> p) {
        Tensor<double> xx = x;
        std::copy(p.begin(), p.end(), xx.values().begin());
        return dot(conv2d_forward(xx, s), r);
      }, x.values(), g.grad_x.values()), 1e-6);
  add(out, grad_check("conv2d.w", [&](std::span<const double> p) {
        auto ss = s;
        std::copy(p.begin(), p.end(), ss.weight.begin());
        return dot(conv2d_forward(x, ss), r);
      }, s.weight, g.grad_w), 1e-6);
}

void bilinear_checks(std::vector<GradCheckEntry>& out, std::mt19937_64& rng) {
  Tensor<double> x(1, 2, 5, 6);
  fill(x.values(), rng);
  // keep samples away from integer pixel edges, where the map has kinks
  std::uniform_real_distribution<double> frac(0.1, 0.9);
  std::uniform_int_distribution<int> ri(-1, 5);
  std::vector<Coord<double>> c(kSnakeLength * 5 * 6);
  for (auto& p : c) p = {ri(rng) + frac(rng), ri(rng) + frac(rng)};
  const auto y = bilinear_sample(x, std::span<const Coord<double>>(c));
  Tensor<double> r(y.n(), y.c(), y.h(), y.w());
  fill(r.values(), rng);
  const auto g = bilinear_sample_backward(x, std::span<const Coord<double>>(c), r);
  add(out, grad_check("bilinear.x", [&](std::span<const double> p) {
        Tensor<double> xx = x;
        std::copy(p.begin(), p.end(), xx.values().begin());
        return dot(bilinear_sample(xx, std::span<const Coord<double>>(c)), r);
      }, x.values(), g.grad_x.values()), 1e-6);
  std::vector<double> flat, gflat;
  for (std::size_t i = 0; i < c.size(); ++i) {
    flat.insert(flat.end(), {c[i].y, c[i].x});
    gflat.insert(gflat.end(), {g.grad_coords[i].y, g.grad_coords[i].x});
  }
  add(out, grad_check("bilinear.coords", [&](std::span<const double> p) {
        std::vector<Coord<double>> cc(c.size());
        for (std::size_t i = 0; i < cc.size(); ++i) cc[i] = {p[2 * i], p[2 * i + 1]};
        return dot(bilinear_sample(x, std::span<const Coord<double>>(cc)), r);
      }, flat, gflat), 1e-6);
}

void snake_checks(std::vector<GradCheckEntry>& out, std::mt19937_64& rng) {
  for (auto axis : {SnakeAxis::Horizontal, SnakeAxis::Vertical}) {
    const std::string tag = axis == SnakeAxis::Horizontal ? "snake_h" : "snake_v";
    DscSpec<double> s(axis, 3, 2);
    fill(s.main.weight, rng);
    fill(s.main.bias, rng);
    fill(s.offset.weight, rng, 0.3);
    fill(s.offset.bias, rng, 0.3);
    Tensor<double> x(2, 3, 6, 8), r(2, 2, 6, 8);
    fill(x.values(), rng);
    fill(r.values(), rng);
    DscCache<double> cache;
    dsc_forward(x, s, &cache);
    const auto g = dsc_backward(x, s, cache, r);
    auto eval = [&](const DscSpec<double>& ss, const Tensor<double>& xx) { return dot(dsc_forward(xx, ss), r); };
    GradCheckOptions opt;
    opt.skip_kinks = true;
    add(out, grad_check(tag + ".x", [&](std::span<const double> p) {
          Tensor<double> xx = x;
          std::copy(p.begin(), p.end(), xx.values().begin());
          return eval(s, xx);
        }, x.values(), g.grad_x.values(), opt), 1e-4);
    add(out, grad_check(tag + ".main_w", [&](std::span<const double> p) {
          auto ss = s;
          std::copy(p.begin(), p.end(), ss.main.weight.begin());
          return eval(ss, x);
        }, s.main.weight, g.grad_main_w, opt), 1e-4);
    add(out, grad_check(tag + ".offset_w", [&](std::span<const double> p) {
          auto ss = s;
          std::copy(p.begin(), p.end(), ss.offset.weight.begin());
          return eval(ss, x);
        }, s.offset.weight, g.grad_offset_w, opt), 1e-4);
    add(out, grad_check(tag + ".offset_b", [&](std::span<const double> p) {
          auto ss = s;
          std::copy(p.begin(), p.end(), ss.offset.bias.begin());
          return eval(ss, x);
        }, s.offset.bias, g.grad_offset_b, opt), 1e-4);
  }
}

void context_check(std::vector<GradCheckEntry>& out, std::mt19937_64& rng) {
  const std::vector<int> scales = {1, 4, 30};
  Tensor<double> f(2, 3, 1, 20);
  fill(f.values(), rng);
  const auto y = context_forward(f, std::span<const int>(scales));
  Tensor<double> r(y.n(), y.c(), 1, y.w());
  fill(r.values(), rng);
  const auto g = context_backward(f, std::span<const int>(scales), r);
  add(out, grad_check("context", [&](std::span<const double> p) {
        Tensor<double> ff = f;
        std::copy(p.begin(), p.end(), ff.values().begin());
        return dot(context_forward(ff, std::span<const int>(scales)), r);
      }, f.values(), g.values()), 1e-6);
}

DetectorArch small_arch() {
  DetectorArch a;
  a.in_h = 16;
  a.in_w = 24;
  a.stem1 = 3;
  a.stem2 = 3;
  a.dsc_out = 2;
  a.context_scales = {2, 5};
  a.hidden = 5;
  a.dfl_bins = 6;
  return a;
}

void loss_check(std::vector<GradCheckEntry>& out, std::mt19937_64& rng) {
  const auto a = small_arch();
  Tensor<double> z(3, a.head_outputs(), 1, a.in_w);
  fill(z.values(), rng, 2.0);
  const std::vector<std::vector<ColumnSpan>> gt = {{{3.2, 15.7}}, {{0.0, 6.5}, {10.1, 24.0}}, {}};
  const auto res = detection_loss(z, gt, a, LossWeights{});
  add(out, grad_check("loss", [&](std::span<const double> p) {
        Tensor<double> zz = z;
        std::copy(p.begin(), p.end(), zz.values().begin());
        return detection_loss(zz, gt, a, LossWeights{}).value.total;
      }, z.values(), res.grad.values()), 1e-4);
}

void network_check(std::vector<GradCheckEntry>& out, std::mt19937_64& rng, std::uint64_t seed) {
  const auto a = small_arch();
  auto m = make_model(a, seed).cast<double>();
  fill(m.dsc_h.offset.weight, rng, 0.3);
  fill(m.dsc_v.offset.weight, rng, 0.3);
  fill(m.head.weight, rng, 0.9);
  Tensor<double> x(2, 1, a.in_h, a.in_w);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : x.values()) v = u(rng);
  const auto pass = network_forward(m, x);
  Tensor<double> r = pass.out;
  fill(r.values(), rng);
  GradCheckOptions opt;
  opt.skip_kinks = true;
  add(out, grad_check("network", [&](std::span<const double> p) {
        auto n = m;
        n.unflatten(p);
        return dot(network_forward(n, x).out, r);
      }, m.flatten(), network_backward(m, pass, r), opt), 1e-3);
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GradCheckEntry> out;
  conv_checks(out, rng);
  bilinear_checks(out, rng);
  snake_checks(out, rng);
  context_check(out, rng);
  loss_check(out, rng);
  network_check(out, rng, seed);
  return out;
}

}  // namespace vitalrr
