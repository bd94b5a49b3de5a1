#include "catpose/convgru.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "catpose/errors.hpp"

namespace catpose {

ConvKernel::ConvKernel(int out, int in, int k, bool with_bias)
    : out_channels(out), in_channels(in), size(k),
      weights(static_cast<std::size_t>(out) * in * k * k, 0.0),
      bias(with_bias ? static_cast<std::size_t>(out) : 0, 0.0) {
  if (out <= 0 || in <= 0 || k <= 0 || k % 2 == 0) {
    throw InvalidArgument("convolution kernel needs positive channels and an odd size");
  }
}

Tensor conv2d_same(const Tensor& input, const ConvKernel& kernel) {
  if (input.channels() != kernel.in_channels) {
    throw InvalidArgument("conv2d: input has " + std::to_string(input.channels()) +
                          " channels, kernel expects " + std::to_string(kernel.in_channels));
  }
  const int h = input.height();
  const int w = input.width();
  const int pad = kernel.size / 2;
  Tensor out(kernel.out_channels, h, w);
  for (int o = 0; o < kernel.out_channels; ++o) {
    auto dst = out.channel(o);
    if (!kernel.bias.empty()) std::fill(dst.begin(), dst.end(), kernel.bias[o]);
    for (int i = 0; i < kernel.in_channels; ++i) {
      const auto src = input.channel(i);
      for (int ky = 0; ky < kernel.size; ++ky) {
        const int dy = ky - pad;
        const int y0 = std::max(0, -dy);
        const int y1 = std::min(h, h - dy);
        for (int kx = 0; kx < kernel.size; ++kx) {
          const double wgt = kernel.at(o, i, ky, kx);
          if (wgt == 0.0) continue;
          const int dx = kx - pad;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int y = y0; y < y1; ++y) {
            double* drow = dst.data() + static_cast<std::size_t>(y) * w;
            const double* srow = src.data() + static_cast<std::size_t>(y + dy) * w + dx;
            for (int x = x0; x < x1; ++x) drow[x] += wgt * srow[x];
          }
        }
      }
    }
  }
  return out;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

int head_timestep(Head h) {
  switch (h) {
    case Head::kCenterHeatmap:
    case Head::kCenterOffset:
    case Head::kBboxSize:
      return 1;
    case Head::kKpDisplacements:
    case Head::kKpHeatmaps:
    case Head::kKpOffsets:
      return 2;
    case Head::kRelDims:
      return 3;
  }
  return 3;
}

namespace {

void fill_uniform(ConvKernel& k, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(k.in_channels * k.size * k.size));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : k.weights) v = dist(rng);
  for (auto& v : k.bias) v = dist(rng);
}

ConvGRUModel shaped_model(const ModelShape& s) {
  ConvGRUModel m;
  const int in = s.input_channels;
  const int hid = s.hidden_channels;
  const int k = s.kernel_size;
  m.gru.x_update = ConvKernel(hid, in, k, true);
  m.gru.h_update = ConvKernel(hid, hid, k, false);
  m.gru.x_reset = ConvKernel(hid, in, k, true);
  m.gru.h_reset = ConvKernel(hid, hid, k, false);
  m.gru.x_candidate = ConvKernel(hid, in, k, true);
  m.gru.h_candidate = ConvKernel(hid, hid, k, false);
  for (int i = 0; i < kNumHeads; ++i) {
    m.heads.heads[i].hidden = ConvKernel(s.head_channels, hid, 3, true);
    m.heads.heads[i].output = ConvKernel(kHeadChannels[i], s.head_channels, 1, true);
  }
  return m;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw InvalidArgument(std::string(what) + ": spatial shape mismatch");
  }
}

}  // namespace

ConvGRUModel zero_model(const ModelShape& shape) { return shaped_model(shape); }

ConvGRUModel random_model(const ModelShape& shape, std::uint64_t seed) {
  ConvGRUModel m = shaped_model(shape);
  std::mt19937_64 rng(seed);
  for (ConvKernel* k : {&m.gru.x_update, &m.gru.h_update, &m.gru.x_reset, &m.gru.h_reset,
                        &m.gru.x_candidate, &m.gru.h_candidate}) {
    fill_uniform(*k, rng);
  }
  for (auto& hw : m.heads.heads) {
    fill_uniform(hw.hidden, rng);
    fill_uniform(hw.output, rng);
  }
  return m;
}

GRUStep convgru_step_detailed(const Tensor& x, const Tensor& h_prev, const ConvGRUWeights& w) {
  check_same_shape(x, h_prev, "convgru_step");
  if (h_prev.channels() != w.hidden_channels()) {
    throw InvalidArgument("convgru_step: hidden state channel mismatch");
  }
  GRUStep s;
  s.update_gate = conv2d_same(x, w.x_update);
  s.reset_gate = conv2d_same(x, w.x_reset);
  {
    const Tensor hz = conv2d_same(h_prev, w.h_update);
    const Tensor hr = conv2d_same(h_prev, w.h_reset);
    auto z = s.update_gate.data();
    auto r = s.reset_gate.data();
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] = sigmoid(z[i] + hz.data()[i]);
      r[i] = sigmoid(r[i] + hr.data()[i]);
    }
  }
  Tensor gated = h_prev;
  {
    auto g = gated.data();
    const auto r = s.reset_gate.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= r[i];
  }
  s.candidate = conv2d_same(x, w.x_candidate);
  const Tensor hc = conv2d_same(gated, w.h_candidate);
  s.hidden = Tensor(h_prev.channels(), h_prev.height(), h_prev.width());
  auto c = s.candidate.data();
  auto out = s.hidden.data();
  const auto z = s.update_gate.data();
  const auto hp = h_prev.data();
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = std::tanh(c[i] + hc.data()[i]);
    out[i] = (1.0 - z[i]) * hp[i] + z[i] * c[i];
  }
  return s;
}

Tensor convgru_step(const Tensor& x, const Tensor& h_prev, const ConvGRUWeights& w) {
  return convgru_step_detailed(x, h_prev, w).hidden;
}

OutputMaps run_sequential_heads(const Tensor& feature, const ConvGRUModel& model) {
  if (feature.channels() != model.gru.input_channels()) {
    throw InvalidArgument("feature channel count does not match the GRU input");
  }
  OutputMaps out;
  Tensor h(model.gru.hidden_channels(), feature.height(), feature.width());
  for (int t = 1; t <= 3; ++t) {
    h = convgru_step(feature, h, model.gru);
    for (Head head : kAllHeads) {
      if (head_timestep(head) != t) continue;
      const HeadWeights& hw = model.heads.heads[static_cast<int>(head)];
      Tensor mid = conv2d_same(h, hw.hidden);
      for (auto& v : mid.data()) v = std::max(v, 0.0);
      Tensor y = conv2d_same(mid, hw.output);
      if (y.channels() != kHeadChannels[static_cast<int>(head)]) {
        throw InvalidArgument("head output channel count mismatch");
      }
      if (is_heatmap_head(head)) {
        for (auto& v : y.data()) v = sigmoid(v);
      }
      out[head] = std::move(y);
    }
  }
  return out;
}

}  // namespace catpose
