#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qsky/biphoton.hpp"
#include "qsky/error.hpp"
#include "qsky/grid.hpp"
#include "qsky/lgmodes.hpp"
#include "qsky/record_csv.hpp"
#include "qsky/tomography.hpp"
#include "qsky/topology.hpp"

namespace qsky {

enum class SweepVariable { P, Qc };
enum class Pipeline { Analytic, Tomographic };
enum class Reconstruction { Mle, Linear };

/// Everything a run needs. Lengths are in units of the beam waist.
struct RunConfig {
  HybridStateSpec state;
  double waist = 1.0;
  /// Window half width; unset means recommended_half_width per state.
  std::optional<double> half_width;
  int samples = 256;
  double envelope_cutoff = 1e-6;
  double tail_tolerance = 6e-4;
  int stencil_order = kDefaultStencilOrder;
  double degeneracy_eps = 1e-6;

  SweepVariable variable = SweepVariable::P;
  std::vector<double> values;
  Pipeline pipeline = Pipeline::Analytic;
  Reconstruction reconstruction = Reconstruction::Mle;

  /// Channel weight for single-point commands (state, skyrmion, tomo).
  double p = 1.0;
  /// When set, tomo picks the noise rate that gives this average contrast.
  std::optional<double> target_qc;
  CountModel counts;
  int mle_max_iters = 5000;

  std::vector<HybridStateSpec> gallery_specs;
  double gallery_p = 0.5;
  std::vector<int> resolutions{64, 128, 256};

  std::string out_dir = "out";

  GridSpec grid_for(const HybridStateSpec& s) const {
    const double hw = half_width ? *half_width
                                 : recommended_half_width(s, waist, tail_tolerance, 5.0, envelope_cutoff);
    return GridSpec{hw, samples, envelope_cutoff};
  }

  TopologyOptions topology_options() const { return {waist, stencil_order, degeneracy_eps}; }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline int parse_int(const std::string& s, int line) {
  const double v = parse_double(s, line);
  if (v != std::floor(v) || std::abs(v) > 1e9)
    throw ValidationError("line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
  return static_cast<int>(v);
}

inline HybridStateSpec parse_pair(const std::string& s, int line) {
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw ValidationError("line " + std::to_string(line) + ": gallery entry '" + s + "' must look like l1:l2");
  HybridStateSpec spec;
  spec.ell1 = parse_int(trim(s.substr(0, colon)), line);
  spec.ell2 = parse_int(trim(s.substr(colon + 1)), line);
  return spec;
}

/// start, start + step, ... up to and including stop (within rounding).
inline std::vector<double> arithmetic_range(double start, double stop, double step, int line) {
  if (step == 0.0 || (stop - start) * step < 0.0)
    throw ValidationError("line " + std::to_string(line) + ": step does not move from start toward stop");
  const double span = (stop - start) / step;
  const long count = std::lround(std::floor(span + 1e-9)) + 1;
  if (count > 100000) throw ValidationError("line " + std::to_string(line) + ": sweep has too many points");
  std::vector<double> out;
  for (long i = 0; i < count; ++i) {
    const double v = start + static_cast<double>(i) * step;
    out.push_back(std::round(v * 1e12) / 1e12);
  }
  return out;
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment. Errors name the offending line.
inline RunConfig parse_config(std::istream& is) {
  RunConfig cfg;
  std::map<std::string, int> seen;
  std::optional<double> start, stop, step;
  int range_line = 0, values_line = 0, sweep_line = 0;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ValidationError("line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string val = detail::trim(s.substr(eq + 1));
    if (val.empty()) throw ValidationError("line " + std::to_string(line) + ": key '" + key + "' has no value");
    if (seen.count(key))
      throw ValidationError("line " + std::to_string(line) + ": key '" + key + "' repeats line " +
                            std::to_string(seen[key]));
    seen[key] = line;
    auto num = [&] { return detail::parse_double(val, line); };
    auto fail = [&](const std::string& why) {
      throw ValidationError("line " + std::to_string(line) + ": " + key + ": " + why);
    };

    if (key == "ell1") cfg.state.ell1 = detail::parse_int(val, line);
    else if (key == "ell2") cfg.state.ell2 = detail::parse_int(val, line);
    else if (key == "delta") cfg.state.delta = num();
    else if (key == "pol1") cfg.state.pol1 = parse_polarization(val);
    else if (key == "pol2") cfg.state.pol2 = parse_polarization(val);
    else if (key == "waist") cfg.waist = num();
    else if (key == "half_width") {
      if (val != "auto") cfg.half_width = num();
    } else if (key == "samples") cfg.samples = detail::parse_int(val, line);
    else if (key == "envelope_cutoff") cfg.envelope_cutoff = num();
    else if (key == "tail_tolerance") cfg.tail_tolerance = num();
    else if (key == "stencil_order") cfg.stencil_order = detail::parse_int(val, line);
    else if (key == "degeneracy_eps") cfg.degeneracy_eps = num();
    else if (key == "sweep") {
      sweep_line = line;
      if (val == "p") cfg.variable = SweepVariable::P;
      else if (val == "qc") cfg.variable = SweepVariable::Qc;
      else fail("must be p or qc");
    } else if (key == "start") { start = num(); range_line = line; }
    else if (key == "stop") { stop = num(); range_line = line; }
    else if (key == "step") { step = num(); range_line = line; }
    else if (key == "values") {
      values_line = line;
      for (const auto& item : detail::split_list(val)) cfg.values.push_back(detail::parse_double(item, line));
    } else if (key == "pipeline") {
      if (val == "analytic") cfg.pipeline = Pipeline::Analytic;
      else if (val == "tomographic") cfg.pipeline = Pipeline::Tomographic;
      else fail("must be analytic or tomographic");
    } else if (key == "reconstruction") {
      if (val == "mle") cfg.reconstruction = Reconstruction::Mle;
      else if (val == "linear") cfg.reconstruction = Reconstruction::Linear;
      else fail("must be mle or linear");
    } else if (key == "p") cfg.p = num();
    else if (key == "target_qc") cfg.target_qc = num();
    else if (key == "pair_rate") cfg.counts.pair_rate = num();
    else if (key == "noise_rate") cfg.counts.noise_rate_a = cfg.counts.noise_rate_b = num();
    else if (key == "noise_rate_a") cfg.counts.noise_rate_a = num();
    else if (key == "noise_rate_b") cfg.counts.noise_rate_b = num();
    else if (key == "coincidence_window") cfg.counts.coincidence_window = num();
    else if (key == "duration") cfg.counts.duration = num();
    else if (key == "sampling") {
      if (val == "deterministic") cfg.counts.sampling = Sampling::Deterministic;
      else if (val == "poisson") cfg.counts.sampling = Sampling::Poisson;
      else fail("must be deterministic or poisson");
    } else if (key == "seed") {
      if (val.find_first_not_of("0123456789") != std::string::npos) fail("not an unsigned integer");
      try {
        std::size_t used = 0;
        cfg.counts.seed = std::stoull(val, &used);
        if (used != val.size()) fail("not an unsigned integer");
      } catch (const std::logic_error&) {
        fail("not an unsigned integer");
      }
    } else if (key == "mle_max_iters") cfg.mle_max_iters = detail::parse_int(val, line);
    else if (key == "gallery") {
      for (const auto& item : detail::split_list(val)) cfg.gallery_specs.push_back(detail::parse_pair(item, line));
    } else if (key == "gallery_p") cfg.gallery_p = num();
    else if (key == "resolutions") {
      cfg.resolutions.clear();
      for (const auto& item : detail::split_list(val)) cfg.resolutions.push_back(detail::parse_int(item, line));
    } else if (key == "out") cfg.out_dir = val;
    else fail("unknown key");
  }

  auto at = [&](const std::string& key) {
    return seen.count(key) ? "line " + std::to_string(seen[key]) + ": " : std::string("config: ");
  };
  const bool has_range = start || stop || step;
  if (has_range && values_line)
    throw ValidationError("line " + std::to_string(values_line) + ": give either values or start/stop/step, not both");
  if (has_range) {
    if (!(start && stop && step))
      throw ValidationError("line " + std::to_string(range_line) + ": start, stop and step must all be given");
    cfg.values = detail::arithmetic_range(*start, *stop, *step, range_line);
  }
  const int sweep_at = values_line ? values_line : (range_line ? range_line : sweep_line);
  for (double v : cfg.values) {
    if (cfg.variable == SweepVariable::P && !(v >= 0.0 && v <= 1.0))
      throw ValidationError("line " + std::to_string(sweep_at) + ": sweep value " + std::to_string(v) +
                            " is outside p in [0, 1]");
    if (cfg.variable == SweepVariable::Qc && !(v >= 1.0))
      throw ValidationError("line " + std::to_string(sweep_at) + ": sweep value " + std::to_string(v) +
                            " is below Qc = 1");
  }
  try {
    cfg.state.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(at("pol2") + e.what());
  }
  if (!(cfg.waist > 0.0)) throw ValidationError(at("waist") + "waist must be positive");
  if (cfg.half_width && !(*cfg.half_width > 0.0)) throw ValidationError(at("half_width") + "must be positive");
  if (cfg.samples < 16) throw ValidationError(at("samples") + "need at least 16 samples per axis");
  if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) throw ValidationError(at("p") + "p must lie in [0, 1]");
  if (!(cfg.gallery_p >= 0.0 && cfg.gallery_p <= 1.0)) throw ValidationError(at("gallery_p") + "must lie in [0, 1]");
  if (cfg.target_qc && !(*cfg.target_qc > 1.0)) throw ValidationError(at("target_qc") + "must exceed 1");
  if (!(cfg.tail_tolerance > 0.0)) throw ValidationError(at("tail_tolerance") + "must be positive");
  if (cfg.mle_max_iters <= 0) throw ValidationError(at("mle_max_iters") + "must be positive");
  for (int r : cfg.resolutions)
    if (r < 16) throw ValidationError(at("resolutions") + "resolutions must be at least 16");
  try {
    cfg.counts.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  try {
    return parse_config(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace qsky
