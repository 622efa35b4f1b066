#pragma once

// From-scratch evaluators. These define correctness; EvalCache must agree
// with them.
//
// Reduction orders are part of the contract so the cache can reproduce them
// bit for bit:
//   * pre-activations accumulate left to right starting from the bias;
//   * MSEs accumulate per example in row order;
//   * reconstruction MSEs first sum squared errors per input component over
//     the examples, then add the component sums in index order, then divide
//     by count * n.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nanet/error.hpp"
#include "nanet/network.hpp"
#include "nanet/nk_landscape.hpp"

namespace nanet {

inline constexpr double kPreactivationClamp = 500.0;

inline double sigmoid(double x) {
  x = std::clamp(x, -kPreactivationClamp, kPreactivationClamp);
  return 1.0 / (1.0 + std::exp(-x));
}

inline double decoder_activate(DecoderActivation a, double x) {
  switch (a) {
    case DecoderActivation::Sigmoid: return sigmoid(x);
    case DecoderActivation::Tanh: return std::tanh(std::clamp(x, -kPreactivationClamp, kPreactivationClamp));
    case DecoderActivation::Linear: return x;
  }
  return x;
}

namespace kernel {

inline double hidden_preactivation(const MlpCore& core, std::size_t j, const double* x) {
  double z = core.hidden_bias[j];
  const double* w = core.encoder.data() + j * core.n;
  for (std::size_t i = 0; i < core.n; ++i) z += w[i] * x[i];
  return z;
}

inline double output_from_hidden(const MlpCore& core, const double* hidden) {
  double z = core.output_bias;
  for (std::size_t j = 0; j < core.h; ++j) z += core.output_w[j] * hidden[j];
  return sigmoid(z);
}

// NAN neuron j, component i.
inline double neuron_decode(const Network& net, std::size_t j, std::size_t i, double activation) {
  double z = net.decoder[j * net.n() + i] * activation;
  if (!net.decoder_bias.empty()) z += net.decoder_bias[j * net.n() + i];
  return decoder_activate(net.decoder_config.activation, z);
}

// ANN decoder node i.
inline double layer_decode(const Network& net, std::size_t i, const double* hidden) {
  const double* w = net.decoder.data() + i * net.h();
  double z = 0.0;
  for (std::size_t j = 0; j < net.h(); ++j) z += w[j] * hidden[j];
  if (!net.decoder_bias.empty()) z += net.decoder_bias[i];
  return decoder_activate(net.decoder_config.activation, z);
}

inline double sum_in_order(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace kernel

inline void check_input(const Network& net, std::span<const double> input) {
  if (input.size() != net.n())
    throw ParameterError("input length " + std::to_string(input.size()) + " != n=" + std::to_string(net.n()));
}

inline void check_dataset(const Network& net, const Dataset& ds) {
  if (ds.rows() == 0) throw ParameterError("dataset is empty");
  if (ds.cols() != net.n())
    throw ParameterError("dataset width " + std::to_string(ds.cols()) + " != network n=" + std::to_string(net.n()));
}

inline void check_hidden_index(const Network& net, std::size_t j) {
  if (j >= net.h())
    throw ParameterError("hidden index " + std::to_string(j) + " out of range [0, " + std::to_string(net.h()) + ")");
}

inline double hidden_activation(const Network& net, std::size_t j, std::span<const double> input) {
  check_hidden_index(net, j);
  check_input(net, input);
  return sigmoid(kernel::hidden_preactivation(net.core, j, input.data()));
}

inline std::vector<double> hidden_layer(const Network& net, std::span<const double> input) {
  check_input(net, input);
  std::vector<double> out(net.h());
  for (std::size_t j = 0; j < net.h(); ++j) out[j] = sigmoid(kernel::hidden_preactivation(net.core, j, input.data()));
  return out;
}

inline double forward(const Network& net, std::span<const double> input) {
  const auto hidden = hidden_layer(net, input);
  return kernel::output_from_hidden(net.core, hidden.data());
}

inline std::vector<double> decode_neuron(const Network& net, std::size_t j, double activation) {
  if (net.arch != Arch::Nan) throw ParameterError("decode_neuron requires a NAN network");
  check_hidden_index(net, j);
  std::vector<double> out(net.n());
  for (std::size_t i = 0; i < net.n(); ++i) out[i] = kernel::neuron_decode(net, j, i, activation);
  return out;
}

inline std::vector<double> decode_layer(const Network& net, std::span<const double> hidden) {
  if (net.arch != Arch::Ann) throw ParameterError("decode_layer requires an ANN network");
  if (hidden.size() != net.h())
    throw ParameterError("hidden vector length " + std::to_string(hidden.size()) + " != h=" + std::to_string(net.h()));
  std::vector<double> out(net.n());
  for (std::size_t i = 0; i < net.n(); ++i) out[i] = kernel::layer_decode(net, i, hidden.data());
  return out;
}

inline double reconstruction_denominator(const Dataset& ds) {
  return static_cast<double>(ds.rows()) * static_cast<double>(ds.cols());
}

inline double task_mse(const Network& net, const Dataset& ds) {
  check_dataset(net, ds);
  std::vector<double> hidden(net.h());
  double sse = 0.0;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const double* x = ds.inputs.data() + r * ds.cols();
    for (std::size_t j = 0; j < net.h(); ++j) hidden[j] = sigmoid(kernel::hidden_preactivation(net.core, j, x));
    const double e = kernel::output_from_hidden(net.core, hidden.data()) - ds.targets[r];
    sse += e * e;
  }
  return sse / static_cast<double>(ds.rows());
}

inline double neuron_ae_mse(const Network& net, std::size_t j, const Dataset& ds) {
  if (net.arch != Arch::Nan) throw ParameterError("neuron_ae_mse requires a NAN network");
  check_hidden_index(net, j);
  check_dataset(net, ds);
  std::vector<double> component_sse(net.n(), 0.0);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const double* x = ds.inputs.data() + r * ds.cols();
    const double a = sigmoid(kernel::hidden_preactivation(net.core, j, x));
    for (std::size_t i = 0; i < net.n(); ++i) {
      const double e = kernel::neuron_decode(net, j, i, a) - x[i];
      component_sse[i] += e * e;
    }
  }
  return kernel::sum_in_order(component_sse) / reconstruction_denominator(ds);
}

inline double mean_neuron_ae_mse(const Network& net, const Dataset& ds) {
  double s = 0.0;
  for (std::size_t j = 0; j < net.h(); ++j) s += neuron_ae_mse(net, j, ds);
  return s / static_cast<double>(net.h());
}

inline double layer_ae_mse(const Network& net, const Dataset& ds) {
  if (net.arch != Arch::Ann) throw ParameterError("layer_ae_mse requires an ANN network");
  check_dataset(net, ds);
  std::vector<double> component_sse(net.n(), 0.0);
  std::vector<double> hidden(net.h());
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const double* x = ds.inputs.data() + r * ds.cols();
    for (std::size_t j = 0; j < net.h(); ++j) hidden[j] = sigmoid(kernel::hidden_preactivation(net.core, j, x));
    for (std::size_t i = 0; i < net.n(); ++i) {
      const double e = kernel::layer_decode(net, i, hidden.data()) - x[i];
      component_sse[i] += e * e;
    }
  }
  return kernel::sum_in_order(component_sse) / reconstruction_denominator(ds);
}

// NAN: mean over the hidden neurons. ANN: the layer value. NN: none.
inline std::optional<double> autoencoder_mse(const Network& net, const Dataset& ds) {
  switch (net.arch) {
    case Arch::Nan: return mean_neuron_ae_mse(net, ds);
    case Arch::Ann: return layer_ae_mse(net, ds);
    case Arch::Nn: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace nanet

namespace nanet {

// Which quantity a hill-climbing proposal is judged on.
enum class Objective { Task, NeuronAe, LayerAe };

inline double objective_value(const Network& net, const Dataset& ds, Objective obj, std::size_t neuron) {
  switch (obj) {
    case Objective::Task: return task_mse(net, ds);
    case Objective::NeuronAe: return neuron_ae_mse(net, neuron, ds);
    case Objective::LayerAe: return layer_ae_mse(net, ds);
  }
  return 0.0;
}

}  // namespace nanet
