#pragma once

// Incremental objective evaluation for single-coordinate proposals.
//
// The cache stores, for the incumbent network on one dataset:
//   * hidden activations (rows x h, example-major);
//   * per-component reconstruction SSE (NAN: h x n, ANN: n);
//   * the task MSE, behind a dirty flag.
// A proposal touching one coordinate only recomputes the affected hidden
// column or SSE entries, using the same kernels and reduction orders as the
// naive evaluators, so clean cached values equal from-scratch values exactly.
//
// The cache does not hold the network. Callers pass the incumbent (or the
// candidate differing from it at one coordinate) on every call.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "nanet/error.hpp"
#include "nanet/evaluation.hpp"
#include "nanet/network.hpp"
#include "nanet/nk_landscape.hpp"

namespace nanet {

class EvalCache {
 public:
  EvalCache(const Network& incumbent, const Dataset& ds) : ds_(&ds) { rebuild(incumbent); }

  void rebuild(const Network& net) {
    check_dataset(net, *ds_);
    arch_ = net.arch;
    n_ = net.n();
    h_ = net.h();
    rows_ = ds_->rows();
    hidden_.assign(rows_ * h_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t j = 0; j < h_; ++j)
        hidden_[r * h_ + j] = sigmoid(kernel::hidden_preactivation(net.core, j, x(r)));
    sse_.clear();
    if (arch_ == Arch::Nan) {
      sse_.assign(h_ * n_, 0.0);
      for (std::size_t j = 0; j < h_; ++j) fill_neuron_row(net, j, nullptr, sse_.data() + j * n_);
    } else if (arch_ == Arch::Ann) {
      sse_.assign(n_, 0.0);
      fill_layer(net, std::nullopt, sse_);
    }
    task_ = compute_task(net, std::nullopt);
    task_valid_ = true;
    discard();
  }

  double task(const Network& incumbent) {
    if (!task_valid_) {
      task_ = compute_task(incumbent, std::nullopt);
      task_valid_ = true;
    }
    return task_;
  }

  double neuron(std::size_t j) const {
    if (arch_ != Arch::Nan) throw ParameterError("neuron objective requires a NAN network");
    return neuron_from(sse_, j);
  }

  double layer() const {
    if (arch_ != Arch::Ann) throw ParameterError("layer objective requires an ANN network");
    return kernel::sum_in_order(sse_) / denominator();
  }

  double objective(const Network& incumbent, Objective obj, std::size_t j) {
    switch (obj) {
      case Objective::Task: return task(incumbent);
      case Objective::NeuronAe: return neuron(j);
      case Objective::LayerAe: return layer();
    }
    return 0.0;
  }

  // `candidate` must equal the incumbent except at `changed`. The result is
  // held as pending until commit() or discard().
  double evaluate_candidate(const Network& candidate, const Coord& changed, Objective obj, std::size_t j) {
    discard();
    switch (changed.layer) {
      case Layer::Encoder:
      case Layer::HiddenBias: {
        const std::size_t col = changed.row;
        pending_hidden_col_ = col;
        pending_hidden_.resize(rows_);
        for (std::size_t r = 0; r < rows_; ++r)
          pending_hidden_[r] = sigmoid(kernel::hidden_preactivation(candidate.core, col, x(r)));
        if (arch_ == Arch::Nan) {
          pending_sse_ = sse_;
          fill_neuron_row(candidate, col, pending_hidden_.data(), pending_sse_->data() + col * n_);
        } else if (arch_ == Arch::Ann) {
          pending_sse_ = sse_;
          fill_layer(candidate, col, *pending_sse_);
        }
        if (obj == Objective::Task) pending_task_ = compute_task(candidate, col);
        break;
      }
      case Layer::OutputWeight:
      case Layer::OutputBias:
        pending_task_ = compute_task(candidate, std::nullopt);
        break;
      case Layer::Decoder:
      case Layer::DecoderBias: {
        pending_sse_ = sse_;
        if (arch_ == Arch::Nan) {
          const std::size_t nj = changed.row, i = changed.col;
          (*pending_sse_)[nj * n_ + i] = neuron_component_sse(candidate, nj, i);
        } else if (arch_ == Arch::Ann) {
          const std::size_t i = changed.row;
          (*pending_sse_)[i] = layer_component_sse(candidate, i);
        } else {
          throw ParameterError("decoder coordinate on a network without decoder");
        }
        break;
      }
    }
    has_pending_ = true;
    pending_task_touched_ = changed.layer == Layer::Encoder || changed.layer == Layer::HiddenBias ||
                            changed.layer == Layer::OutputWeight || changed.layer == Layer::OutputBias;

    switch (obj) {
      case Objective::Task:
        if (!pending_task_) pending_task_ = compute_task(candidate, std::nullopt);
        return *pending_task_;
      case Objective::NeuronAe:
        if (arch_ != Arch::Nan) throw ParameterError("neuron objective requires a NAN network");
        return neuron_from(pending_sse_ ? *pending_sse_ : sse_, j);
      case Objective::LayerAe:
        if (arch_ != Arch::Ann) throw ParameterError("layer objective requires an ANN network");
        return kernel::sum_in_order(pending_sse_ ? *pending_sse_ : sse_) / denominator();
    }
    return 0.0;
  }

  void commit() {
    if (!has_pending_) return;
    if (pending_hidden_col_) {
      const std::size_t col = *pending_hidden_col_;
      for (std::size_t r = 0; r < rows_; ++r) hidden_[r * h_ + col] = pending_hidden_[r];
    }
    if (pending_sse_) sse_.swap(*pending_sse_);
    if (pending_task_) {
      task_ = *pending_task_;
      task_valid_ = true;
    } else if (pending_task_touched_) {
      task_valid_ = false;
    }
    discard();
  }

  void discard() {
    has_pending_ = false;
    pending_hidden_col_.reset();
    pending_sse_.reset();
    pending_task_.reset();
    pending_task_touched_ = false;
  }

  bool task_dirty() const { return !task_valid_; }

 private:
  const double* x(std::size_t r) const { return ds_->inputs.data() + r * n_; }
  double denominator() const { return static_cast<double>(rows_) * static_cast<double>(n_); }

  double neuron_from(const std::vector<double>& sse, std::size_t j) const {
    if (j >= h_) throw ParameterError("hidden index out of range");
    return kernel::sum_in_order(std::span<const double>(sse.data() + j * n_, n_)) / denominator();
  }

  double hidden_at(std::size_t r, std::size_t j, std::optional<std::size_t> replaced) const {
    return replaced && *replaced == j ? pending_hidden_[r] : hidden_[r * h_ + j];
  }

  // column: replacement activations for neuron j (nullptr = cached).
  void fill_neuron_row(const Network& net, std::size_t j, const double* column, double* out) const {
    for (std::size_t i = 0; i < n_; ++i) out[i] = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double a = column ? column[r] : hidden_[r * h_ + j];
      const double* xr = x(r);
      for (std::size_t i = 0; i < n_; ++i) {
        const double e = kernel::neuron_decode(net, j, i, a) - xr[i];
        out[i] += e * e;
      }
    }
  }

  double neuron_component_sse(const Network& net, std::size_t j, std::size_t i) const {
    double s = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double e = kernel::neuron_decode(net, j, i, hidden_[r * h_ + j]) - x(r)[i];
      s += e * e;
    }
    return s;
  }

  void fill_layer(const Network& net, std::optional<std::size_t> replaced, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> hrow(h_);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t j = 0; j < h_; ++j) hrow[j] = hidden_at(r, j, replaced);
      const double* xr = x(r);
      for (std::size_t i = 0; i < n_; ++i) {
        const double e = kernel::layer_decode(net, i, hrow.data()) - xr[i];
        out[i] += e * e;
      }
    }
  }

  double layer_component_sse(const Network& net, std::size_t i) const {
    double s = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double e = kernel::layer_decode(net, i, hidden_.data() + r * h_) - x(r)[i];
      s += e * e;
    }
    return s;
  }

  double compute_task(const Network& net, std::optional<std::size_t> replaced) const {
    std::vector<double> hrow(h_);
    double sse = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t j = 0; j < h_; ++j) hrow[j] = hidden_at(r, j, replaced);
      const double e = kernel::output_from_hidden(net.core, hrow.data()) - ds_->targets[r];
      sse += e * e;
    }
    return sse / static_cast<double>(rows_);
  }

  const Dataset* ds_;
  Arch arch_ = Arch::Nn;
  std::size_t n_ = 0, h_ = 0, rows_ = 0;
  std::vector<double> hidden_;
  std::vector<double> sse_;
  double task_ = 0.0;
  bool task_valid_ = false;

  bool has_pending_ = false;
  std::optional<std::size_t> pending_hidden_col_;
  std::vector<double> pending_hidden_;
  std::optional<std::vector<double>> pending_sse_;
  std::optional<double> pending_task_;
  bool pending_task_touched_ = false;
};

}  // namespace nanet
