#pragma once

// File formats: landscape JSON, dataset CSV (+ sibling metadata JSON),
// network snapshot JSON, and the per-run cycle and snapshot CSV logs.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nanet/error.hpp"
#include "nanet/hillclimb.hpp"
#include "nanet/network.hpp"
#include "nanet/nk_landscape.hpp"

namespace nanet::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Round-trip decimal with 17 significant digits.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParameterError("cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

inline void finish_write(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

inline json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(1) << '\n';
  finish_write(out, path);
}

// ---- landscape -----------------------------------------------------------

inline json to_json(const NkLandscape& land) {
  return json{{"n", land.n},
              {"k", land.k},
              {"seed", land.seed},
              {"neighbor_scheme", to_string(land.scheme)},
              {"neighbors", land.neighbors},
              {"tables", land.tables}};
}

inline NkLandscape landscape_from_json(const json& j) {
  try {
    NkLandscape land;
    land.n = j.at("n").get<std::size_t>();
    land.k = j.at("k").get<std::size_t>();
    land.seed = j.at("seed").get<std::uint64_t>();
    land.scheme = neighbor_scheme_from_string(j.value("neighbor_scheme", std::string("random")));
    land.neighbors = j.at("neighbors").get<std::vector<std::vector<std::size_t>>>();
    land.tables = j.at("tables").get<std::vector<std::vector<double>>>();
    check_nk_parameters(land.n, land.k);
    if (land.neighbors.size() != land.n || land.tables.size() != land.n)
      throw ParameterError("landscape arrays do not match n");
    for (std::size_t i = 0; i < land.n; ++i) {
      if (land.neighbors[i].size() != land.k) throw ParameterError("neighbour list of wrong length");
      for (std::size_t nb : land.neighbors[i])
        if (nb >= land.n || nb == i) throw ParameterError("invalid neighbour index");
      if (land.tables[i].size() != land.table_size()) throw ParameterError("fitness table of wrong size");
      for (double v : land.tables[i])
        if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("fitness table entry outside [0, 1]");
    }
    return land;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed landscape: ") + e.what());
  }
}

inline void write_landscape(const fs::path& path, const NkLandscape& land) { write_json(path, to_json(land)); }
inline NkLandscape read_landscape(const fs::path& path) { return landscape_from_json(read_json(path)); }

// ---- dataset -------------------------------------------------------------

inline fs::path dataset_meta_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".meta.json");
  return p;
}

inline std::string dataset_csv(const Dataset& ds) {
  std::string s;
  s.reserve(ds.rows() * (ds.cols() * 3 + 24));
  for (std::size_t i = 0; i < ds.cols(); ++i) s += "x" + std::to_string(i + 1) + ",";
  s += "y\n";
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (double v : ds.row(r)) s += v > 0 ? "1," : "-1,";
    s += format_double(ds.targets[r]);
    s += '\n';
  }
  return s;
}

inline void write_dataset(const fs::path& path, const Dataset& ds) {
  auto out = open_out(path);
  out << dataset_csv(ds);
  finish_write(out, path);
  write_json(dataset_meta_path(path), json{{"landscape_seed", ds.meta.landscape_seed},
                                           {"dataset_seed", ds.meta.dataset_seed},
                                           {"n", ds.meta.n},
                                           {"k", ds.meta.k},
                                           {"count", ds.meta.count}});
}

inline Dataset read_dataset(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty dataset file " + path.string());
  const auto header = split_csv(strip_cr(line));
  if (header.size() < 2 || header.back() != "y") throw ParameterError("dataset header must be x1,...,xN,y");
  Dataset ds;
  ds.meta.n = header.size() - 1;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw ParameterError("dataset row " + std::to_string(ds.rows() + 1) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(header.size()));
    for (std::size_t i = 0; i < ds.meta.n; ++i) {
      const double v = parse_double(fields[i]);
      if (v != 1.0 && v != -1.0) throw ParameterError("dataset inputs must be -1 or 1");
      ds.inputs.push_back(v);
    }
    ds.targets.push_back(parse_double(fields.back()));
  }
  ds.meta.count = ds.targets.size();
  const auto meta_path = dataset_meta_path(path);
  if (fs::exists(meta_path)) {
    const auto m = read_json(meta_path);
    ds.meta.landscape_seed = m.value("landscape_seed", std::uint64_t{0});
    ds.meta.dataset_seed = m.value("dataset_seed", std::uint64_t{0});
    ds.meta.k = m.value("k", std::size_t{0});
  }
  return ds;
}

// ---- network -------------------------------------------------------------

inline json to_json(const Network& net) {
  return json{{"arch", to_string(net.arch)},
              {"n", net.n()},
              {"h", net.h()},
              {"config",
               {{"decoder_activation", to_string(net.decoder_config.activation)},
                {"decoder_bias", net.decoder_config.bias}}},
              {"encoder", net.core.encoder},
              {"hidden_bias", net.core.hidden_bias},
              {"output_w", net.core.output_w},
              {"output_bias", net.core.output_bias},
              {"decoder", net.decoder},
              {"decoder_bias", net.decoder_bias}};
}

inline Network network_from_json(const json& j) {
  try {
    Network net;
    net.arch = arch_from_string(j.at("arch").get<std::string>());
    net.core.n = j.at("n").get<std::size_t>();
    net.core.h = j.at("h").get<std::size_t>();
    const auto& cfg = j.at("config");
    net.decoder_config.activation = decoder_activation_from_string(cfg.at("decoder_activation").get<std::string>());
    net.decoder_config.bias = cfg.at("decoder_bias").get<bool>();
    net.core.encoder = j.at("encoder").get<std::vector<double>>();
    net.core.hidden_bias = j.at("hidden_bias").get<std::vector<double>>();
    net.core.output_w = j.at("output_w").get<std::vector<double>>();
    net.core.output_bias = j.at("output_bias").get<double>();
    net.decoder = j.at("decoder").get<std::vector<double>>();
    net.decoder_bias = j.at("decoder_bias").get<std::vector<double>>();
    const std::size_t n = net.n(), h = net.h();
    const bool has_dec = net.arch != Arch::Nn;
    const std::size_t dec_bias = !has_dec || !net.decoder_config.bias ? 0 : net.arch == Arch::Nan ? h * n : n;
    if (net.core.encoder.size() != h * n || net.core.hidden_bias.size() != h || net.core.output_w.size() != h ||
        net.decoder.size() != (has_dec ? h * n : 0) || net.decoder_bias.size() != dec_bias)
      throw ParameterError("network parameter arrays do not match (arch, n, h)");
    return net;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed network snapshot: ") + e.what());
  }
}

inline void write_network(const fs::path& path, const Network& net) { write_json(path, to_json(net)); }
inline Network read_network(const fs::path& path) { return network_from_json(read_json(path)); }

// ---- run logs ------------------------------------------------------------

inline void write_cycles(const fs::path& path, const std::vector<CycleRecord>& cycles) {
  auto out = open_out(path);
  std::string s = "iter,kind,coord,delta,obj_before,obj_after,accepted\n";
  for (const auto& c : cycles) {
    s += std::to_string(c.iter);
    s += ',';
    s += to_string(c.kind);
    s += ',';
    s += to_string(c.coord);
    s += ',';
    s += format_double(c.delta);
    s += ',';
    s += format_double(c.objective_before);
    s += ',';
    s += format_double(c.objective_after);
    s += c.accepted ? ",1\n" : ",0\n";
  }
  out << s;
  finish_write(out, path);
}

inline void write_snapshots(const fs::path& path, const std::vector<Snapshot>& snaps) {
  auto out = open_out(path);
  out << "iter,train_task_mse,train_ae_mse,test_task_mse\n";
  for (const auto& s : snaps)
    out << s.iter << ',' << format_double(s.train_task_mse) << ',' << format_optional(s.train_ae_mse) << ','
        << format_optional(s.test_task_mse) << '\n';
  finish_write(out, path);
}

inline std::vector<Snapshot> read_snapshots(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (strip_cr(line) != "iter,train_task_mse,train_ae_mse,test_task_mse")
    throw IoError("unexpected snapshot header in " + path.string());
  std::vector<Snapshot> out;
  const auto opt = [](std::string_view f) -> std::optional<double> {
    if (f.empty()) return std::nullopt;
    return parse_double(f);
  };
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw IoError("malformed snapshot row in " + path.string());
    Snapshot s;
    s.iter = static_cast<std::size_t>(parse_double(f[0]));
    s.train_task_mse = parse_double(f[1]);
    s.train_ae_mse = opt(f[2]);
    s.test_task_mse = opt(f[3]);
    out.push_back(s);
  }
  return out;
}

}  // namespace nanet::io
