#include "vitalrr/model.hpp"

#include <cmath>
#include <random>

#include "vitalrr/error.hpp"
#include "vitalrr/io.hpp"

namespace vitalrr {

void DetectorArch::validate() const {
  if (in_h <= 0 || in_w <= 0 || in_h % 4 != 0) {
    throw ConfigError("detector input height must be a positive multiple of 4");
  }
  if (stem1 <= 0 || stem2 <= 0 || dsc_out <= 0 || hidden <= 0) {
    throw ConfigError("detector channel counts must be positive");
  }
  if (dfl_bins < 2) throw ConfigError("detector needs at least 2 distance bins");
  for (int s : context_scales) {
    if (s <= 0) throw ConfigError("context scales must be positive");
  }
}

template <typename T>
Network<T>::Network(const DetectorArch& a)
    : arch(a),
      stem1(1, a.stem1, 3, 3, 1, 1),
      stem2(a.stem1, a.stem2, 3, 3, 1, 1),
      dsc_h(SnakeAxis::Horizontal, a.stem2, a.dsc_out),
      dsc_v(SnakeAxis::Vertical, a.stem2, a.dsc_out),
      hidden(a.context_channels(), a.hidden, 1, 1, 0, 0),
      head(a.hidden, a.head_outputs(), 1, 1, 0, 0) {
  a.validate();
}

template <typename T>
void Network<T>::for_each_param(const std::function<void(std::vector<T>&)>& fn) {
  for (ConvSpec<T>* c : {&stem1, &stem2, &dsc_h.main, &dsc_h.offset, &dsc_v.main, &dsc_v.offset,
                         &hidden, &head}) {
    fn(c->weight);
    fn(c->bias);
  }
}

template <typename T>
void Network<T>::for_each_param(const std::function<void(const std::vector<T>&)>& fn) const {
  for (const ConvSpec<T>* c : {&stem1, &stem2, &dsc_h.main, &dsc_h.offset, &dsc_v.main,
                               &dsc_v.offset, &hidden, &head}) {
    fn(c->weight);
    fn(c->bias);
  }
}

template <typename T>
std::size_t Network<T>::param_count() const {
  std::size_t n = 0;
  for_each_param([&](const std::vector<T>& v) { n += v.size(); });
  return n;
}

template <typename T>
std::vector<T> Network<T>::flatten() const {
  std::vector<T> out;
  out.reserve(param_count());
  for_each_param([&](const std::vector<T>& v) { out.insert(out.end(), v.begin(), v.end()); });
  return out;
}

template <typename T>
void Network<T>::unflatten(std::span<const T> values) {
  if (values.size() != param_count()) throw ShapeError("parameter vector size mismatch");
  std::size_t at = 0;
  for_each_param([&](std::vector<T>& v) {
    std::copy(values.begin() + at, values.begin() + at + v.size(), v.begin());
    at += v.size();
  });
}

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
  Network<U> out(arch);
  out.unflatten(std::span<const U>([&] {
    std::vector<U> v;
    for (T x : flatten()) v.push_back(static_cast<U>(x));
    return v;
  }()));
  return out;
}

template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template Network<float> Network<float>::cast<float>() const;

DetectorModel make_model(const DetectorArch& arch, std::uint64_t seed) {
  DetectorModel m(arch);
  std::mt19937_64 rng(seed);
  auto init = [&](ConvSpec<float>& c) {
    const double fan_in = static_cast<double>(c.in_ch) * c.kh * c.kw;
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (float& w : c.weight) w = static_cast<float>(u(rng));
  };
  init(m.stem1);
  init(m.stem2);
  init(m.dsc_h.main);
  init(m.dsc_v.main);
  init(m.hidden);
  init(m.head);
  for (float& w : m.head.weight) w *= 0.1f;
  return m;
}

template <typename T>
Tensor<T> context_forward(const Tensor<T>& f, std::span<const int> scales) {
  const int N = f.n(), C = f.c(), W = f.w();
  if (f.h() != 1) throw ShapeError("context input must have height 1");
  const int blocks = 1 + 2 * static_cast<int>(scales.size());
  Tensor<T> out(N, C * blocks, 1, W);
  std::vector<T> prefix(W + 1);
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T* x = f.channel(n, c);
      prefix[0] = T(0);
      for (int t = 0; t < W; ++t) prefix[t + 1] = prefix[t] + x[t];
      std::copy(x, x + W, out.channel(n, c));
      for (std::size_t j = 0; j < scales.size(); ++j) {
        const int s = scales[j];
        const T inv = T(1) / static_cast<T>(s);
        T* left = out.channel(n, (1 + 2 * static_cast<int>(j)) * C + c);
        T* right = out.channel(n, (2 + 2 * static_cast<int>(j)) * C + c);
        for (int t = 0; t < W; ++t) {
          const int lo = std::max(0, t - s);
          const int hi = std::min(W, t + 1 + s);
          left[t] = (prefix[t] - prefix[lo]) * inv;
          right[t] = (prefix[hi] - prefix[t + 1]) * inv;
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> context_backward(const Tensor<T>& f, std::span<const int> scales, const Tensor<T>& grad) {
  const int N = f.n(), C = f.c(), W = f.w();
  const int blocks = 1 + 2 * static_cast<int>(scales.size());
  require_shape(grad, N, C * blocks, 1, W, "context grad");
  Tensor<T> g(N, C, 1, W);
  std::vector<T> prefix(W + 1);
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      T* gx = g.channel(n, c);
      const T* g0 = grad.channel(n, c);
      for (int t = 0; t < W; ++t) gx[t] = g0[t];
      for (std::size_t j = 0; j < scales.size(); ++j) {
        const int s = scales[j];
        const T inv = T(1) / static_cast<T>(s);
        // left[t] reads x[t-s .. t-1]: x[u] receives gl[u+1 .. u+s].
        const T* gl = grad.channel(n, (1 + 2 * static_cast<int>(j)) * C + c);
        prefix[0] = T(0);
        for (int t = 0; t < W; ++t) prefix[t + 1] = prefix[t] + gl[t];
        for (int u = 0; u < W; ++u) {
          const int lo = std::min(W, u + 1), hi = std::min(W, u + 1 + s);
          gx[u] += (prefix[hi] - prefix[lo]) * inv;
        }
        // right[t] reads x[t+1 .. t+s]: x[u] receives gr[u-s .. u-1].
        const T* gr = grad.channel(n, (2 + 2 * static_cast<int>(j)) * C + c);
        for (int t = 0; t < W; ++t) prefix[t + 1] = prefix[t] + gr[t];
        for (int u = 0; u < W; ++u) {
          const int lo = std::max(0, u - s);
          gx[u] += (prefix[u] - prefix[lo]) * inv;
        }
      }
    }
  }
  return g;
}

template <typename T>
ForwardPass<T> network_forward(const Network<T>& net, const Tensor<T>& image) {
  const auto& a = net.arch;
  require_shape(image, image.n(), 1, a.in_h, a.in_w, "detector input");
  ForwardPass<T> p;
  p.input = image;
  p.z1 = conv2d_forward(image, net.stem1);
  p.p1 = pool_freq2_forward(silu_forward(p.z1));
  p.z2 = conv2d_forward(p.p1, net.stem2);
  p.p2 = pool_freq2_forward(silu_forward(p.z2));
  const Tensor<T> yh = dsc_forward(p.p2, net.dsc_h, &p.cache_h);
  const Tensor<T> yv = dsc_forward(p.p2, net.dsc_v, &p.cache_v);
  const int N = image.n(), D = a.dsc_out;
  p.zcat = Tensor<T>(N, 2 * D, yh.h(), yh.w());
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < D; ++c) {
      std::copy(yh.channel(n, c), yh.channel(n, c) + yh.plane(), p.zcat.channel(n, c));
      std::copy(yv.channel(n, c), yv.channel(n, c) + yv.plane(), p.zcat.channel(n, D + c));
    }
  }
  p.acat = silu_forward(p.zcat);
  p.pooled = freq_mean_forward(p.acat);
  p.context = context_forward(p.pooled, std::span<const int>(a.context_scales));
  p.zh = conv2d_forward(p.context, net.hidden);
  p.ah = silu_forward(p.zh);
  p.out = conv2d_forward(p.ah, net.head);
  return p;
}

template <typename T>
std::vector<T> network_backward(const Network<T>& net, const ForwardPass<T>& p,
                                const Tensor<T>& grad_out) {
  const auto& a = net.arch;
  auto g_head = conv2d_backward(p.ah, net.head, grad_out);
  auto g_hidden = conv2d_backward(p.context, net.hidden, silu_backward(p.zh, g_head.grad_x));
  const Tensor<T> g_pooled =
      context_backward(p.pooled, std::span<const int>(a.context_scales), g_hidden.grad_x);
  const Tensor<T> g_zcat = silu_backward(p.zcat, freq_mean_backward(p.acat, g_pooled));

  const int N = g_zcat.n(), D = a.dsc_out;
  Tensor<T> gh(N, D, g_zcat.h(), g_zcat.w()), gv(N, D, g_zcat.h(), g_zcat.w());
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < D; ++c) {
      std::copy(g_zcat.channel(n, c), g_zcat.channel(n, c) + g_zcat.plane(), gh.channel(n, c));
      std::copy(g_zcat.channel(n, D + c), g_zcat.channel(n, D + c) + g_zcat.plane(), gv.channel(n, c));
    }
  }
  auto g_dh = dsc_backward(p.p2, net.dsc_h, p.cache_h, gh);
  auto g_dv = dsc_backward(p.p2, net.dsc_v, p.cache_v, gv);
  Tensor<T> g_p2 = g_dh.grad_x;
  for (std::size_t i = 0; i < g_p2.size(); ++i) g_p2.values()[i] += g_dv.grad_x.values()[i];

  const Tensor<T> a2 = silu_forward(p.z2);
  auto g_stem2 = conv2d_backward(p.p1, net.stem2, silu_backward(p.z2, pool_freq2_backward(a2, g_p2)));
  const Tensor<T> a1 = silu_forward(p.z1);
  auto g_stem1 = conv2d_backward(p.input, net.stem1,
                                 silu_backward(p.z1, pool_freq2_backward(a1, g_stem2.grad_x)), false);

  std::vector<T> grads;
  grads.reserve(net.param_count());
  for (const std::vector<T>* v :
       {&g_stem1.grad_w, &g_stem1.grad_b, &g_stem2.grad_w, &g_stem2.grad_b, &g_dh.grad_main_w,
        &g_dh.grad_main_b, &g_dh.grad_offset_w, &g_dh.grad_offset_b, &g_dv.grad_main_w,
        &g_dv.grad_main_b, &g_dv.grad_offset_w, &g_dv.grad_offset_b, &g_hidden.grad_w,
        &g_hidden.grad_b, &g_head.grad_w, &g_head.grad_b}) {
    grads.insert(grads.end(), v->begin(), v->end());
  }
  return grads;
}

template <typename T>
std::vector<ColumnPrediction> decode_predictions(const Tensor<T>& out, const DetectorArch& arch,
                                                 int n) {
  require_shape(out, out.n(), arch.head_outputs(), 1, out.w(), "head output");
  const int W = out.w(), B = arch.dfl_bins;
  std::vector<ColumnPrediction> preds(W);
  std::vector<double> prob(B);
  auto expected = [&](int first, int t) {
    double mx = -INFINITY;
    for (int b = 0; b < B; ++b) mx = std::max(mx, static_cast<double>(out(n, first + b, 0, t)));
    double z = 0.0;
    for (int b = 0; b < B; ++b) {
      prob[b] = std::exp(static_cast<double>(out(n, first + b, 0, t)) - mx);
      z += prob[b];
    }
    double e = 0.0;
    for (int b = 0; b < B; ++b) e += prob[b] / z * b * arch.bin_width();
    return e;
  };
  for (int t = 0; t < W; ++t) {
    preds[t].objectness = 1.0 / (1.0 + std::exp(-static_cast<double>(out(n, 0, 0, t))));
    preds[t].left = expected(1, t);
    preds[t].right = expected(1 + B, t);
  }
  return preds;
}

Tensor<float> image_tensor(const DetectorImage& image) {
  Tensor<float> t(1, 1, image.rows, image.cols);
  std::copy(image.pixels.begin(), image.pixels.end(), t.data());
  return t;
}

std::vector<ColumnPrediction> model_forward(const DetectorModel& model, const DetectorImage& image) {
  if (image.rows != model.arch.in_h || image.cols != model.arch.in_w) {
    throw ShapeError("image grid " + std::to_string(image.rows) + "x" + std::to_string(image.cols) +
                     " does not match model input " + std::to_string(model.arch.in_h) + "x" +
                     std::to_string(model.arch.in_w));
  }
  const auto pass = network_forward(model, image_tensor(image));
  return decode_predictions(pass.out, model.arch);
}

// ---------------------------------------------------------------------------
// Weights file

namespace {

enum class LayerTag : std::uint16_t {
  Input = 1,
  Conv = 2,
  SnakeHorizontal = 3,
  SnakeVertical = 4,
  SnakeOffset = 5,
  FreqMean = 6,
  Context = 7,
  Pointwise = 8,
  Head = 9,
};

struct LayerRecord {
  LayerTag tag;
  std::vector<std::uint32_t> dims;
  std::vector<float> params;
};

LayerRecord conv_record(LayerTag tag, const ConvSpec<float>& c, std::vector<std::uint32_t> extra = {}) {
  LayerRecord r{tag,
                {static_cast<std::uint32_t>(c.out_ch), static_cast<std::uint32_t>(c.in_ch),
                 static_cast<std::uint32_t>(c.kh), static_cast<std::uint32_t>(c.kw)},
                c.weight};
  r.dims.insert(r.dims.end(), extra.begin(), extra.end());
  r.params.insert(r.params.end(), c.bias.begin(), c.bias.end());
  return r;
}

std::vector<LayerRecord> records(const DetectorModel& m) {
  const auto& a = m.arch;
  std::vector<std::uint32_t> scales(a.context_scales.begin(), a.context_scales.end());
  return {
      {LayerTag::Input, {static_cast<std::uint32_t>(a.in_h), static_cast<std::uint32_t>(a.in_w)}, {}},
      conv_record(LayerTag::Conv, m.stem1),
      conv_record(LayerTag::Conv, m.stem2),
      conv_record(LayerTag::SnakeHorizontal, m.dsc_h.main),
      conv_record(LayerTag::SnakeOffset, m.dsc_h.offset),
      conv_record(LayerTag::SnakeVertical, m.dsc_v.main),
      conv_record(LayerTag::SnakeOffset, m.dsc_v.offset),
      {LayerTag::FreqMean, {}, {}},
      {LayerTag::Context, scales, {}},
      conv_record(LayerTag::Pointwise, m.hidden),
      conv_record(LayerTag::Head, m.head, {static_cast<std::uint32_t>(a.dfl_bins)}),
  };
}

void fill_conv(ConvSpec<float>& c, const LayerRecord& r, const char* what) {
  if (r.dims.size() < 4 || r.dims[0] != static_cast<std::uint32_t>(c.out_ch) ||
      r.dims[1] != static_cast<std::uint32_t>(c.in_ch) || r.dims[2] != static_cast<std::uint32_t>(c.kh) ||
      r.dims[3] != static_cast<std::uint32_t>(c.kw)) {
    throw FormatError(std::string("weights file: inconsistent dims for ") + what);
  }
  if (r.params.size() != c.weight.size() + c.bias.size()) {
    throw FormatError(std::string("weights file: wrong parameter count for ") + what);
  }
  std::copy(r.params.begin(), r.params.begin() + c.weight.size(), c.weight.begin());
  std::copy(r.params.begin() + c.weight.size(), r.params.end(), c.bias.begin());
}

}  // namespace

std::vector<unsigned char> encode_weights(const DetectorModel& model) {
  const auto recs = records(model);
  std::vector<unsigned char> out = {'D', 'S', 'C', 'W'};
  put_u16(out, kWeightsVersion);
  put_u16(out, static_cast<std::uint16_t>(recs.size()));
  for (const auto& r : recs) {
    put_u16(out, static_cast<std::uint16_t>(r.tag));
    put_u16(out, static_cast<std::uint16_t>(r.dims.size()));
    for (auto d : r.dims) put_u32(out, d);
    put_u32(out, static_cast<std::uint32_t>(r.params.size()));
    for (float v : r.params) put_f32(out, v);
  }
  return out;
}

DetectorModel decode_weights(std::span<const unsigned char> bytes) {
  ByteReader in(bytes);
  std::array<unsigned char, 4> magic{};
  in.raw(magic);
  if (magic != std::array<unsigned char, 4>{'D', 'S', 'C', 'W'}) {
    throw FormatError("not a detector weights file (bad magic)");
  }
  const std::uint16_t version = in.u16();
  if (version != kWeightsVersion) {
    throw VersionError("weights file version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kWeightsVersion) + ")");
  }
  const std::uint16_t count = in.u16();
  std::vector<LayerRecord> recs;
  for (std::uint16_t i = 0; i < count; ++i) {
    LayerRecord r;
    r.tag = static_cast<LayerTag>(in.u16());
    const std::uint16_t nd = in.u16();
    for (std::uint16_t d = 0; d < nd; ++d) r.dims.push_back(in.u32());
    const std::uint32_t np = in.u32();
    if (static_cast<std::size_t>(np) * 4 > in.remaining()) throw FormatError("weights file truncated");
    r.params.resize(np);
    for (float& v : r.params) v = in.f32();
    recs.push_back(std::move(r));
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after weights");

  const std::vector<LayerTag> expected = {
      LayerTag::Input,         LayerTag::Conv,        LayerTag::Conv,      LayerTag::SnakeHorizontal,
      LayerTag::SnakeOffset,   LayerTag::SnakeVertical, LayerTag::SnakeOffset, LayerTag::FreqMean,
      LayerTag::Context,       LayerTag::Pointwise,   LayerTag::Head};
  if (recs.size() != expected.size()) throw FormatError("weights file: unexpected layer count");
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].tag != expected[i]) throw FormatError("weights file: unexpected layer type");
  }
  DetectorArch a;
  if (recs[0].dims.size() != 2 || recs[1].dims.size() != 4 || recs[3].dims.size() != 4 ||
      recs[9].dims.size() != 4 || recs[10].dims.size() != 5) {
    throw FormatError("weights file: malformed layer dims");
  }
  a.in_h = static_cast<int>(recs[0].dims[0]);
  a.in_w = static_cast<int>(recs[0].dims[1]);
  a.stem1 = static_cast<int>(recs[1].dims[0]);
  a.stem2 = static_cast<int>(recs[2].dims[0]);
  a.dsc_out = static_cast<int>(recs[3].dims[0]);
  a.context_scales.assign(recs[8].dims.begin(), recs[8].dims.end());
  a.hidden = static_cast<int>(recs[9].dims[0]);
  a.dfl_bins = static_cast<int>(recs[10].dims[4]);
  try {
    a.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("weights file: ") + e.what());
  }
  DetectorModel m(a);
  fill_conv(m.stem1, recs[1], "stem conv 1");
  fill_conv(m.stem2, recs[2], "stem conv 2");
  fill_conv(m.dsc_h.main, recs[3], "horizontal snake");
  fill_conv(m.dsc_h.offset, recs[4], "horizontal offsets");
  fill_conv(m.dsc_v.main, recs[5], "vertical snake");
  fill_conv(m.dsc_v.offset, recs[6], "vertical offsets");
  fill_conv(m.hidden, recs[9], "head hidden");
  fill_conv(m.head, recs[10], "head output");
  for (float v : m.flatten()) {
    if (!std::isfinite(v)) throw FormatError("weights file contains non-finite values");
  }
  return m;
}

void save_weights(const DetectorModel& model, const std::string& path) {
  write_file_atomic(path, encode_weights(model));
}

DetectorModel load_weights(const std::string& path) { return decode_weights(read_file(path)); }

template struct Network<float>;
template struct Network<double>;
template ForwardPass<float> network_forward(const Network<float>&, const Tensor<float>&);
template ForwardPass<double> network_forward(const Network<double>&, const Tensor<double>&);
template std::vector<float> network_backward(const Network<float>&, const ForwardPass<float>&,
                                             const Tensor<float>&);
template std::vector<double> network_backward(const Network<double>&, const ForwardPass<double>&,
                                              const Tensor<double>&);
template Tensor<float> context_forward(const Tensor<float>&, std::span<const int>);
template Tensor<double> context_forward(const Tensor<double>&, std::span<const int>);
template Tensor<float> context_backward(const Tensor<float>&, std::span<const int>, const Tensor<float>&);
template Tensor<double> context_backward(const Tensor<double>&, std::span<const int>, const Tensor<double>&);
template std::vector<ColumnPrediction> decode_predictions(const Tensor<float>&, const DetectorArch&, int);
template std::vector<ColumnPrediction> decode_predictions(const Tensor<double>&, const DetectorArch&, int);

}  // namespace vitalrr
