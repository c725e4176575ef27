#include "vitalrr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "vitalrr/error.hpp"

namespace vitalrr {

GradCheckReport grad_check(const std::string& name,
                           const std::function<double(std::span<const double>)>& f,
                           std::span<const double> params, std::span<const double> analytic,
                           const GradCheckOptions& opt) {
  if (params.size() != analytic.size()) throw ShapeError("grad_check: gradient size mismatch");
  std::vector<std::size_t> idx(params.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (opt.max_checks > 0 && idx.size() > opt.max_checks) {
    std::mt19937_64 rng(opt.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(opt.max_checks);
    std::sort(idx.begin(), idx.end());
  }
  double gmax = 0.0;
  for (double g : analytic) gmax = std::max(gmax, std::abs(g));
  const double floor = std::max(opt.floor_fraction * gmax, 1e-12);

  GradCheckReport r;
  r.name = name;
  std::vector<double> p(params.begin(), params.end());
  const double f0 = opt.skip_kinks ? f(p) : 0.0;
  for (std::size_t i : idx) {
    const double orig = p[i];
    p[i] = orig + opt.eps;
    const double fp = f(p);
    p[i] = orig - opt.eps;
    const double fm = f(p);
    p[i] = orig;
    const double numeric = (fp - fm) / (2.0 * opt.eps);
    const double a = analytic[i];
    if (opt.skip_kinks) {
      // one-sided slopes disagree far beyond eps * curvature: the step crossed a kink
      const double gap = std::abs((fp - f0) - (f0 - fm)) / opt.eps;
      if (gap > opt.kink_ratio * std::max(std::abs(numeric), floor)) {
        ++r.skipped_kinks;
        continue;
      }
    }
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    const double rel = std::abs(a - numeric) / denom;
    ++r.checked;
    if (rel > r.max_rel_error || r.checked == 1) {
      r.max_rel_error = std::max(rel, r.max_rel_error);
      if (rel >= r.max_rel_error) {
        r.worst_index = i;
        r.worst_analytic = a;
        r.worst_numeric = numeric;
      }
    }
  }
  return r;
}

std::string describe(const GradCheckReport& r) {
  const std::string kinks =
      r.skipped_kinks ? " kinks_skipped=" + std::to_string(r.skipped_kinks) : std::string();
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "%-28s checked=%-6zu max_rel_err=%.3e worst[%zu] analytic=%.9g numeric=%.9g%s",
                r.name.c_str(), r.checked, r.max_rel_error, r.worst_index, r.worst_analytic,
                r.worst_numeric, kinks.c_str());
  return buf;
}

}  // namespace vitalrr
