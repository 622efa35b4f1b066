#pragma once

// NK fitness landscapes used as tunable regression functions, plus the
// labelled datasets sampled from them.
//
// Each gene i reads its own bit and the bits of k partner genes. The lookup
// index into tables[i] places gene i's bit in the most significant position,
// followed by the partners in stored order:
//
//   idx = bit(i) << k | bit(nb[0]) << (k-1) | ... | bit(nb[k-1])
//
// Generation order from the seed: all neighbour lists (gene 0 first), then all
// tables (gene 0 first, row 0 first).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nanet/error.hpp"
#include "nanet/rng.hpp"

namespace nanet {

inline constexpr std::size_t kMaxEpistasis = 15;

enum class NeighborScheme { Random, Adjacent };

inline std::string to_string(NeighborScheme s) { return s == NeighborScheme::Random ? "random" : "adjacent"; }

inline NeighborScheme neighbor_scheme_from_string(const std::string& s) {
  if (s == "random") return NeighborScheme::Random;
  if (s == "adjacent") return NeighborScheme::Adjacent;
  throw ParameterError("unknown neighbour scheme '" + s + "' (expected random|adjacent)");
}

using Genome = std::vector<std::uint8_t>;

struct NkLandscape {
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  NeighborScheme scheme = NeighborScheme::Random;
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<std::vector<double>> tables;

  std::size_t table_size() const { return std::size_t{1} << (k + 1); }

  bool operator==(const NkLandscape&) const = default;
};

inline void check_nk_parameters(std::size_t n, std::size_t k) {
  if (n < 2) throw ParameterError("n must be >= 2 (got " + std::to_string(n) + ")");
  if (k < 1) throw ParameterError("k must be >= 1 (got " + std::to_string(k) + ")");
  if (k > kMaxEpistasis)
    throw ParameterError("k must be <= 15 (got " + std::to_string(k) + ")");
  if (k > n - 1)
    throw ParameterError("k must be <= n-1 (got k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
}

inline NkLandscape nk_new(std::size_t n, std::size_t k, std::uint64_t seed,
                          NeighborScheme scheme = NeighborScheme::Random) {
  check_nk_parameters(n, k);
  NkLandscape land;
  land.n = n;
  land.k = k;
  land.seed = seed;
  land.scheme = scheme;
  land.neighbors.resize(n);

  Rng rng(seed);
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < n; ++i) {
    auto& nb = land.neighbors[i];
    nb.reserve(k);
    if (scheme == NeighborScheme::Adjacent) {
      for (std::size_t d = 1; d <= k; ++d) nb.push_back((i + d) % n);
      continue;
    }
    // Partial Fisher-Yates over every gene except i.
    pool.clear();
    for (std::size_t g = 0; g < n; ++g)
      if (g != i) pool.push_back(g);
    for (std::size_t d = 0; d < k; ++d) {
      const std::size_t pick = d + static_cast<std::size_t>(rng.below(pool.size() - d));
      std::swap(pool[d], pool[pick]);
      nb.push_back(pool[d]);
    }
  }

  land.tables.assign(n, std::vector<double>(land.table_size()));
  for (auto& table : land.tables)
    for (double& v : table) v = rng.uniform01();
  return land;
}

inline std::size_t lookup_index(const NkLandscape& land, std::size_t i, std::span<const std::uint8_t> genome) {
  std::size_t idx = genome[i] & 1u;
  for (std::size_t nb : land.neighbors[i]) idx = (idx << 1) | (genome[nb] & 1u);
  return idx;
}

inline double gene_contribution(const NkLandscape& land, std::size_t i, std::span<const std::uint8_t> genome) {
  if (i >= land.n)
    throw ParameterError("gene index " + std::to_string(i) + " out of range [0, " + std::to_string(land.n) + ")");
  if (genome.size() != land.n)
    throw ParameterError("genome length " + std::to_string(genome.size()) + " != n=" + std::to_string(land.n));
  return land.tables[i][lookup_index(land, i, genome)];
}

inline double nk_fitness(const NkLandscape& land, std::span<const std::uint8_t> genome) {
  if (genome.size() != land.n)
    throw ParameterError("genome length " + std::to_string(genome.size()) + " != n=" + std::to_string(land.n));
  double sum = 0.0;
  for (std::size_t i = 0; i < land.n; ++i) sum += land.tables[i][lookup_index(land, i, genome)];
  return sum / static_cast<double>(land.n);
}

struct DatasetMeta {
  std::uint64_t landscape_seed = 0;
  std::uint64_t dataset_seed = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t count = 0;

  bool operator==(const DatasetMeta&) const = default;
};

// Row-major count x n matrix of +/-1 inputs with unit-interval targets.
struct Dataset {
  std::vector<double> inputs;
  std::vector<double> targets;
  DatasetMeta meta;

  std::size_t rows() const { return targets.size(); }
  std::size_t cols() const { return meta.n; }
  std::span<const double> row(std::size_t r) const { return {inputs.data() + r * meta.n, meta.n}; }

  bool operator==(const Dataset&) const = default;
};

inline Dataset gen_dataset(const NkLandscape& land, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw ParameterError("dataset count must be >= 1");
  Dataset ds;
  ds.meta = {land.seed, seed, land.n, land.k, count};
  ds.inputs.resize(count * land.n);
  ds.targets.resize(count);

  Rng rng(seed);
  Genome genome(land.n);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t g = 0; g < land.n; ++g) genome[g] = static_cast<std::uint8_t>(rng.next() >> 63);
    double* row = ds.inputs.data() + r * land.n;
    for (std::size_t g = 0; g < land.n; ++g) row[g] = genome[g] ? 1.0 : -1.0;
    ds.targets[r] = nk_fitness(land, genome);
  }
  return ds;
}

}  // namespace nanet
