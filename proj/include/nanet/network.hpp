#pragma once

// Two-layer sigmoid MLPs with three decoder arrangements:
//
//   NAN  every hidden neuron j owns N decoder weights decoder[j][i], each
//        reconstructing input i from that neuron's activation alone.
//   ANN  one extra layer of N decoder nodes, each fully connected to the
//        hidden layer (decoder[i][j]).
//   NN   no decoder.
//
// All parameters live in flat row-major vectors. A Coord names a single
// scalar parameter so the hill climber can mutate and restore it exactly.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nanet/error.hpp"
#include "nanet/rng.hpp"

namespace nanet {

enum class Arch { Nan, Ann, Nn };

inline std::string to_string(Arch a) {
  switch (a) {
    case Arch::Nan: return "nan";
    case Arch::Ann: return "ann";
    case Arch::Nn: return "nn";
  }
  return "?";
}

inline Arch arch_from_string(const std::string& s) {
  if (s == "nan" || s == "NAN") return Arch::Nan;
  if (s == "ann" || s == "ANN") return Arch::Ann;
  if (s == "nn" || s == "NN") return Arch::Nn;
  throw ParameterError("unknown architecture '" + s + "' (expected nan|ann|nn)");
}

enum class DecoderActivation { Sigmoid, Tanh, Linear };

inline std::string to_string(DecoderActivation a) {
  switch (a) {
    case DecoderActivation::Sigmoid: return "sigmoid";
    case DecoderActivation::Tanh: return "tanh";
    case DecoderActivation::Linear: return "linear";
  }
  return "?";
}

inline DecoderActivation decoder_activation_from_string(const std::string& s) {
  if (s == "sigmoid") return DecoderActivation::Sigmoid;
  if (s == "tanh") return DecoderActivation::Tanh;
  if (s == "linear") return DecoderActivation::Linear;
  throw ParameterError("unknown decoder activation '" + s + "' (expected sigmoid|tanh|linear)");
}

struct DecoderConfig {
  DecoderActivation activation = DecoderActivation::Sigmoid;
  bool bias = false;

  bool operator==(const DecoderConfig&) const = default;
};

struct MlpCore {
  std::size_t n = 0;
  std::size_t h = 0;
  std::vector<double> encoder;      // h x n
  std::vector<double> hidden_bias;  // h
  std::vector<double> output_w;     // h
  double output_bias = 0.0;

  double& enc(std::size_t j, std::size_t i) { return encoder[j * n + i]; }
  double enc(std::size_t j, std::size_t i) const { return encoder[j * n + i]; }

  bool operator==(const MlpCore&) const = default;
};

struct Network {
  Arch arch = Arch::Nn;
  DecoderConfig decoder_config;
  MlpCore core;
  // NAN: h x n (row j is neuron j's decoder). ANN: n x h. NN: empty.
  std::vector<double> decoder;
  // Same shape as decoder for NAN, n entries for ANN; empty when disabled.
  std::vector<double> decoder_bias;

  std::size_t n() const { return core.n; }
  std::size_t h() const { return core.h; }
  bool has_decoder() const { return arch != Arch::Nn; }
  std::size_t decoder_rows() const { return arch == Arch::Nan ? core.h : arch == Arch::Ann ? core.n : 0; }
  std::size_t decoder_cols() const { return arch == Arch::Nan ? core.n : arch == Arch::Ann ? core.h : 0; }

  double& dec(std::size_t r, std::size_t c) { return decoder[r * decoder_cols() + c]; }
  double dec(std::size_t r, std::size_t c) const { return decoder[r * decoder_cols() + c]; }

  bool operator==(const Network&) const = default;
};

enum class Layer : std::uint8_t { Encoder, HiddenBias, OutputWeight, OutputBias, Decoder, DecoderBias };

struct Coord {
  Layer layer = Layer::OutputBias;
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  bool operator==(const Coord&) const = default;
};

// Stable text id used in run logs: enc:j:i, hb:j, ow:j, ob, dec:r:c, db:r:c (NAN) / db:i (ANN).
inline std::string to_string(const Coord& c) {
  const auto r = std::to_string(c.row);
  const auto col = std::to_string(c.col);
  switch (c.layer) {
    case Layer::Encoder: return "enc:" + r + ":" + col;
    case Layer::HiddenBias: return "hb:" + r;
    case Layer::OutputWeight: return "ow:" + r;
    case Layer::OutputBias: return "ob";
    case Layer::Decoder: return "dec:" + r + ":" + col;
    case Layer::DecoderBias: return "db:" + r + ":" + col;
  }
  return "?";
}

inline std::size_t parameter_count(const Network& net) {
  return net.core.encoder.size() + net.core.hidden_bias.size() + net.core.output_w.size() + 1 +
         net.decoder.size() + net.decoder_bias.size();
}

// Flattened in generation order: encoder, hidden bias, output weights, output bias, decoder, decoder bias.
inline std::vector<double> flatten_parameters(const Network& net) {
  std::vector<double> out;
  out.reserve(parameter_count(net));
  out.insert(out.end(), net.core.encoder.begin(), net.core.encoder.end());
  out.insert(out.end(), net.core.hidden_bias.begin(), net.core.hidden_bias.end());
  out.insert(out.end(), net.core.output_w.begin(), net.core.output_w.end());
  out.push_back(net.core.output_bias);
  out.insert(out.end(), net.decoder.begin(), net.decoder.end());
  out.insert(out.end(), net.decoder_bias.begin(), net.decoder_bias.end());
  return out;
}

inline bool coord_valid(const Network& net, const Coord& c) {
  const std::size_t n = net.n(), h = net.h();
  switch (c.layer) {
    case Layer::Encoder: return c.row < h && c.col < n;
    case Layer::HiddenBias:
    case Layer::OutputWeight: return c.row < h && c.col == 0;
    case Layer::OutputBias: return c.row == 0 && c.col == 0;
    case Layer::Decoder: return net.has_decoder() && c.row < net.decoder_rows() && c.col < net.decoder_cols();
    case Layer::DecoderBias:
      if (net.decoder_bias.empty()) return false;
      if (net.arch == Arch::Nan) return c.row < h && c.col < n;
      return c.row < n && c.col == 0;
  }
  return false;
}

inline double& param(Network& net, const Coord& c) {
  if (!coord_valid(net, c)) throw ParameterError("coordinate " + to_string(c) + " invalid for " + to_string(net.arch));
  switch (c.layer) {
    case Layer::Encoder: return net.core.enc(c.row, c.col);
    case Layer::HiddenBias: return net.core.hidden_bias[c.row];
    case Layer::OutputWeight: return net.core.output_w[c.row];
    case Layer::OutputBias: return net.core.output_bias;
    case Layer::Decoder: return net.dec(c.row, c.col);
    case Layer::DecoderBias:
      return net.arch == Arch::Nan ? net.decoder_bias[c.row * net.n() + c.col] : net.decoder_bias[c.row];
  }
  throw ParameterError("bad layer");
}

inline double param(const Network& net, const Coord& c) { return param(const_cast<Network&>(net), c); }

// Every weight and bias uniform on [-1, 1), drawn in flatten_parameters order.
inline Network init_network(Arch arch, std::size_t n, std::size_t h, DecoderConfig decoder, Rng& rng) {
  if (n < 1) throw ParameterError("network input count must be >= 1");
  if (h < 1) throw ParameterError("hidden node count must be >= 1");
  Network net;
  net.arch = arch;
  net.decoder_config = decoder;
  net.core.n = n;
  net.core.h = h;
  auto draw = [&rng](std::vector<double>& v, std::size_t count) {
    v.resize(count);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
  };
  draw(net.core.encoder, h * n);
  draw(net.core.hidden_bias, h);
  draw(net.core.output_w, h);
  net.core.output_bias = rng.uniform(-1.0, 1.0);
  if (arch != Arch::Nn) {
    draw(net.decoder, h * n);
    if (decoder.bias) draw(net.decoder_bias, arch == Arch::Nan ? h * n : n);
  }
  return net;
}

}  // namespace nanet
