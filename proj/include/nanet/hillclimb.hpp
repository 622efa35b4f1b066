#pragma once

// Interleaved autoencode/task random hill climbing.
//
// One cycle:
//   1. choose_cycle: autoencode with probability p_autoencode, else task;
//   2. pick_coordinate: task -> one of the h output weights or the output
//      bias; autoencode -> any hidden-layer-associated parameter (encoder
//      weights, hidden biases, decoder weights and biases);
//   3. propose_and_test: add delta ~ U[-r, r), evaluate the cycle objective,
//      keep on improvement, keep with probability 1/2 on a tie, otherwise
//      restore the old value exactly.
//
// Objective per cycle: task cycles always use task MSE. Autoencode cycles use
// the owning neuron's reconstruction MSE (NAN), the layer reconstruction MSE
// (ANN), or task MSE (NN, which has no decoder).
//
// RNG draws per cycle, in order: cycle kind, coordinate, delta, and a tie
// coin only when the objectives compare equal.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nanet/error.hpp"
#include "nanet/eval_cache.hpp"
#include "nanet/evaluation.hpp"
#include "nanet/network.hpp"
#include "nanet/nk_landscape.hpp"
#include "nanet/rng.hpp"

namespace nanet {

// Raised when an internal consistency audit fails.
class InvariantViolation : public std::logic_error {
 public:
  explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

struct TrainConfig {
  std::size_t iterations = 10000;
  double r = 1.0;
  std::size_t h = 10;
  double p_autoencode = 0.5;
  DecoderActivation decoder_activation = DecoderActivation::Sigmoid;
  bool decoder_bias = false;
  std::size_t eval_interval = 100;
  std::uint64_t seed = 0;
  bool incremental = true;
  bool record_cycles = true;

  DecoderConfig decoder() const { return {decoder_activation, decoder_bias}; }

  void validate() const {
    if (iterations < 1) throw ParameterError("iterations must be >= 1");
    if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("r must be a finite value > 0");
    if (h < 1) throw ParameterError("h must be >= 1");
    if (!(p_autoencode >= 0.0 && p_autoencode <= 1.0)) throw ParameterError("p_autoencode must lie in [0, 1]");
    if (eval_interval < 1) throw ParameterError("eval_interval must be >= 1");
  }
};

enum class CycleKind { Autoencode, Task };

inline std::string to_string(CycleKind k) { return k == CycleKind::Autoencode ? "autoencode" : "task"; }

struct CycleRecord {
  std::size_t iter = 0;  // 1-based
  CycleKind kind = CycleKind::Task;
  Coord coord;
  double delta = 0.0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  bool accepted = false;

  bool operator==(const CycleRecord&) const = default;
};

struct Snapshot {
  std::size_t iter = 0;
  double train_task_mse = 0.0;
  std::optional<double> train_ae_mse;
  std::optional<double> test_task_mse;

  bool operator==(const Snapshot&) const = default;
};

struct RunLog {
  std::vector<CycleRecord> cycles;
  std::vector<Snapshot> snapshots;
  Network final_network;

  bool operator==(const RunLog&) const = default;
};

inline CycleKind choose_cycle(Rng& rng, const TrainConfig& config, Arch /*arch*/) {
  return rng.bernoulli(config.p_autoencode) ? CycleKind::Autoencode : CycleKind::Task;
}

inline std::size_t coordinate_count(const Network& net, CycleKind kind) {
  if (kind == CycleKind::Task) return net.h() + 1;
  return net.core.encoder.size() + net.core.hidden_bias.size() + net.decoder.size() + net.decoder_bias.size();
}

// Maps a flat index in [0, coordinate_count) to a coordinate, in the order
// listed in coordinate_count.
inline Coord coordinate_at(const Network& net, CycleKind kind, std::size_t idx) {
  const auto u32 = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
  const std::size_t n = net.n(), h = net.h();
  if (kind == CycleKind::Task) {
    if (idx < h) return {Layer::OutputWeight, u32(idx), 0};
    if (idx == h) return {Layer::OutputBias, 0, 0};
    throw ParameterError("task coordinate index out of range");
  }
  if (idx < h * n) return {Layer::Encoder, u32(idx / n), u32(idx % n)};
  idx -= h * n;
  if (idx < h) return {Layer::HiddenBias, u32(idx), 0};
  idx -= h;
  if (idx < net.decoder.size()) {
    const std::size_t cols = net.decoder_cols();
    return {Layer::Decoder, u32(idx / cols), u32(idx % cols)};
  }
  idx -= net.decoder.size();
  if (idx < net.decoder_bias.size()) {
    if (net.arch == Arch::Nan) return {Layer::DecoderBias, u32(idx / n), u32(idx % n)};
    return {Layer::DecoderBias, u32(idx), 0};
  }
  throw ParameterError("autoencode coordinate index out of range");
}

inline Coord pick_coordinate(const Network& net, CycleKind kind, Rng& rng) {
  return coordinate_at(net, kind, static_cast<std::size_t>(rng.below(coordinate_count(net, kind))));
}

// Hidden neuron that owns a hidden-layer coordinate of a NAN network.
inline std::size_t owning_neuron(const Coord& c) { return c.row; }

struct CycleObjective {
  Objective objective = Objective::Task;
  std::size_t neuron = 0;
};

inline CycleObjective cycle_objective(Arch arch, CycleKind kind, const Coord& c) {
  if (kind == CycleKind::Task || arch == Arch::Nn) return {Objective::Task, 0};
  if (arch == Arch::Nan) return {Objective::NeuronAe, owning_neuron(c)};
  return {Objective::LayerAe, 0};
}

// Applies `delta` at `coord`, tests it and keeps or restores it. `cache`, when
// given, must describe `net` on `train` and is kept in sync.
inline CycleRecord propose_with_delta(Network& net, const Coord& coord, CycleKind kind, double delta,
                                      const Dataset& train, Rng& rng, EvalCache* cache) {
  if (!coord_valid(net, coord)) throw ParameterError("coordinate " + to_string(coord) + " invalid");
  const auto [obj, neuron] = cycle_objective(net.arch, kind, coord);

  CycleRecord rec;
  rec.kind = kind;
  rec.coord = coord;
  rec.delta = delta;

  double& slot = param(net, coord);
  const double old_value = slot;
  if (cache) {
    rec.objective_before = cache->objective(net, obj, neuron);
    slot = old_value + delta;
    rec.objective_after = cache->evaluate_candidate(net, coord, obj, neuron);
  } else {
    rec.objective_before = objective_value(net, train, obj, neuron);
    slot = old_value + delta;
    rec.objective_after = objective_value(net, train, obj, neuron);
  }

  if (rec.objective_after < rec.objective_before)
    rec.accepted = true;
  else if (rec.objective_after == rec.objective_before)
    rec.accepted = rng.bernoulli(0.5);

  if (rec.accepted) {
    if (cache) cache->commit();
  } else {
    slot = old_value;
    if (cache) cache->discard();
  }
  return rec;
}

inline CycleRecord propose_and_test(Network& net, const Coord& coord, CycleKind kind, const Dataset& train,
                                    Rng& rng, const TrainConfig& config, EvalCache* cache = nullptr) {
  const double delta = rng.uniform(-config.r, config.r);
  return propose_with_delta(net, coord, kind, delta, train, rng, cache);
}

inline Snapshot take_snapshot(std::size_t iter, const Network& net, const Dataset& train, const Dataset* test) {
  Snapshot s;
  s.iter = iter;
  s.train_task_mse = task_mse(net, train);
  s.train_ae_mse = autoencoder_mse(net, train);
  if (test) s.test_task_mse = task_mse(net, *test);
  return s;
}

// Owns one run: network, cache and RNG stream. step() performs one cycle.
class HillClimber {
 public:
  using Observer = std::function<void(const Network&, const CycleRecord&)>;

  HillClimber(Arch arch, const Dataset& train, const Dataset* test, const TrainConfig& config)
      : train_(train), test_(test), config_(config), rng_(config.seed) {
    config_.validate();
    if (test_ && test_->cols() != train_.cols())
      throw ParameterError("train and test sets have different widths (" + std::to_string(train_.cols()) +
                           " vs " + std::to_string(test_->cols()) + ")");
    if (train_.rows() == 0) throw ParameterError("training set is empty");
    net_ = init_network(arch, train_.cols(), config_.h, config_.decoder(), rng_);
    if (config_.incremental) cache_.emplace(net_, train_);
  }

  CycleRecord step() {
    const CycleKind kind = choose_cycle(rng_, config_, net_.arch);
    const Coord coord = pick_coordinate(net_, kind, rng_);
    CycleRecord rec = propose_and_test(net_, coord, kind, train_, rng_, config_, cache_ ? &*cache_ : nullptr);
    rec.iter = ++iter_;
    return rec;
  }

  RunLog run(const Observer& observer = {}) {
    RunLog log;
    if (config_.record_cycles) log.cycles.reserve(config_.iterations);
    while (iter_ < config_.iterations) {
      const CycleRecord rec = step();
      if (observer) observer(net_, rec);
      if (config_.record_cycles) log.cycles.push_back(rec);
      if (iter_ % config_.eval_interval == 0) {
        log.snapshots.push_back(take_snapshot(iter_, net_, train_, test_));
        audit(log.snapshots.back());
      }
    }
    log.final_network = net_;
    return log;
  }

  const Network& network() const { return net_; }
  EvalCache* cache() { return cache_ ? &*cache_ : nullptr; }

 private:
  // Snapshots are computed from scratch; the cache must agree with them.
  void audit(const Snapshot& snap) {
    if (!cache_) return;
    constexpr double kTolerance = 1e-12;
    const double cached_task = cache_->task(net_);
    if (std::abs(cached_task - snap.train_task_mse) > kTolerance)
      throw InvariantViolation("cached task MSE diverged from recomputation at iteration " + std::to_string(iter_));
    if (net_.arch == Arch::Ann && std::abs(cache_->layer() - *snap.train_ae_mse) > kTolerance)
      throw InvariantViolation("cached layer reconstruction MSE diverged at iteration " + std::to_string(iter_));
    if (net_.arch == Arch::Nan) {
      double mean = 0.0;
      for (std::size_t j = 0; j < net_.h(); ++j) mean += cache_->neuron(j);
      mean /= static_cast<double>(net_.h());
      if (std::abs(mean - *snap.train_ae_mse) > kTolerance)
        throw InvariantViolation("cached neuron reconstruction MSE diverged at iteration " + std::to_string(iter_));
    }
  }

  const Dataset& train_;
  const Dataset* test_;
  TrainConfig config_;
  Rng rng_;
  Network net_;
  std::optional<EvalCache> cache_;
  std::size_t iter_ = 0;
};

struct TrainResult {
  Network network;
  RunLog log;
};

inline TrainResult train(Arch arch, const Dataset& train_set, const Dataset& test_set, const TrainConfig& config,
                         const HillClimber::Observer& observer = {}) {
  HillClimber climber(arch, train_set, &test_set, config);
  RunLog log = climber.run(observer);
  return {log.final_network, std::move(log)};
}

}  // namespace nanet
