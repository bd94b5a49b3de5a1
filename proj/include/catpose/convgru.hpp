#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "catpose/labelgen.hpp"
#include "catpose/tensor.hpp"

namespace catpose {

/// Square convolution kernel, layout [out][in][ky][kx], "same" zero padding, stride 1.
struct ConvKernel {
  int out_channels = 0;
  int in_channels = 0;
  int size = 1;
  std::vector<double> weights;
  std::vector<double> bias;  // empty or out_channels entries

  ConvKernel() = default;
  ConvKernel(int out, int in, int k, bool with_bias);

  double& at(int o, int i, int ky, int kx) {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * size + ky) * size + kx];
  }
  double at(int o, int i, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * size + ky) * size + kx];
  }
};

Tensor conv2d_same(const Tensor& input, const ConvKernel& kernel);

/// Gate kernels of a single-layer convolutional GRU. Biases live on the input-path
/// kernels; the hidden-path kernels have none.
struct ConvGRUWeights {
  ConvKernel x_update, h_update;
  ConvKernel x_reset, h_reset;
  ConvKernel x_candidate, h_candidate;

  int input_channels() const { return x_update.in_channels; }
  int hidden_channels() const { return x_update.out_channels; }
};

struct HeadWeights {
  ConvKernel hidden;  // 3x3, GRU hidden -> head width, followed by ReLU
  ConvKernel output;  // 1x1, head width -> output channels
};

/// Output heads, indexed like `Head`.
struct HeadStack {
  std::array<HeadWeights, kNumHeads> heads;
};

/// Recurrent step at which each head is evaluated (1, 2 or 3).
int head_timestep(Head h);

struct ConvGRUModel {
  ConvGRUWeights gru;
  HeadStack heads;
};

struct ModelShape {
  int input_channels = 64;
  int hidden_channels = 64;
  int head_channels = 256;
  int kernel_size = 3;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization for every kernel and bias.
ConvGRUModel random_model(const ModelShape& shape, std::uint64_t seed);
/// Every weight and bias zero.
ConvGRUModel zero_model(const ModelShape& shape);

struct GRUStep {
  Tensor hidden;
  Tensor update_gate;
  Tensor reset_gate;
  Tensor candidate;
};

/// z = sigmoid(Wxz*x + Whz*h + bz), r = sigmoid(Wxr*x + Whr*h + br),
/// c = tanh(Wxc*x + Whc*(r o h) + bc), h' = (1 - z) o h + z o c.
GRUStep convgru_step_detailed(const Tensor& x, const Tensor& h_prev, const ConvGRUWeights& w);
Tensor convgru_step(const Tensor& x, const Tensor& h_prev, const ConvGRUWeights& w);

/// Runs the three recurrent steps on the same backbone feature (h0 = 0) and
/// evaluates each head from the hidden state of its step. Heatmap heads go
/// through a sigmoid; regression heads are linear.
OutputMaps run_sequential_heads(const Tensor& feature, const ConvGRUModel& model);

double sigmoid(double v);

}  // namespace catpose
