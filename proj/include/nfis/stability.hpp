#pragma once

// Experiment configuration (one JSON document per run), stability records
// and the amplitude x energy sweep with envelope fits.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nfis/harness.hpp"
#include "nfis/io.hpp"
#include "nfis/potentials.hpp"

namespace nfis {

using Json = nlohmann::json;

/// Malformed or invalid configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  int dimension = 2;
  int grid = 64;
  double r1 = 0.7;
  double r = 1.0;
  int mesh_polar = 128;
  int mesh_azimuth = 1;
  PotentialFamily base;
  PotentialFamily perturbation;
  std::vector<double> amplitudes{0.02, 0.05, 0.1, 0.2};
  std::vector<double> energies{2.0};
  double tau = 0.5;
  double epsilon = 0.5;
  double s_fraction = 0.5;  // s = s_fraction * s*
  double smooth_order = 6.0;
  bool reconstruct = false;  // Born-mode inversion per record (d = 3)
  BornInversionOptions born;
  std::vector<double> lambdas{8, 16, 32, 64};
  std::vector<double> rhos{4, 8, 16, 32};
  std::vector<Point> points;  // z0 (2D) or p (3D) lists, subcommand dependent
  std::string prefix = "run";
  Json raw;  // the parsed document, echoed into the manifest

  BoundaryMesh mesh() const { return BoundaryMesh::make(dimension, r, mesh_polar, mesh_azimuth); }
  std::string hash() const { return fnv1a_hex(raw.dump()); }
};

namespace detail {

inline Point json_point(const Json& j) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3) throw ConfigError("a point must be an array of 2 or 3 numbers");
  Point p{0, 0, 0};
  for (std::size_t a = 0; a < j.size(); ++a) p[a] = j[a].get<double>();
  return p;
}

inline PotentialFamily json_family(const Json& j) {
  PotentialFamily f;
  if (j.is_null()) return f;
  if (!j.is_array()) throw ConfigError("a potential family must be an array of bumps");
  for (const auto& b : j) {
    Bump bump;
    const std::string kind = b.value("kind", "smooth");
    if (kind == "smooth")
      bump.kind = BumpKind::Smooth;
    else if (kind == "polynomial")
      bump.kind = BumpKind::Polynomial;
    else
      throw ConfigError("unknown bump kind '" + kind + "'");
    if (b.contains("center")) bump.center = json_point(b["center"]);
    bump.radius = b.value("radius", 0.5);
    bump.amplitude = b.value("amplitude", 1.0);
    bump.q = b.value("q", 4);
    f.bumps.push_back(bump);
  }
  return f;
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  try {
    c.raw = j;
    c.dimension = j.value("dimension", 2);
    c.grid = j.value("grid", c.dimension == 2 ? 64 : 12);
    c.r1 = j.value("r1", 0.7);
    c.r = j.value("r", 1.0);
    if (j.contains("mesh")) {
      c.mesh_polar = j["mesh"].value("polar", c.dimension == 2 ? 128 : 16);
      c.mesh_azimuth = j["mesh"].value("azimuth", c.dimension == 2 ? 1 : 32);
    } else if (c.dimension == 3) {
      c.mesh_polar = 16;
      c.mesh_azimuth = 32;
    }
    c.base = detail::json_family(j.value("base", Json()));
    c.perturbation = detail::json_family(j.value("perturbation", Json()));
    if (j.contains("amplitudes")) c.amplitudes = j["amplitudes"].get<std::vector<double>>();
    if (j.contains("energies")) c.energies = j["energies"].get<std::vector<double>>();
    c.tau = j.value("tau", 0.5);
    c.epsilon = j.value("epsilon", 0.5);
    c.s_fraction = j.value("s_fraction", 0.5);
    c.smooth_order = j.value("smooth_order", 6.0);
    c.reconstruct = j.value("reconstruct", false);
    if (j.contains("born")) {
      const auto& b = j["born"];
      c.born.n_rad = b.value("n_rad", c.born.n_rad);
      c.born.n_polar = b.value("n_polar", c.born.n_polar);
      c.born.n_azimuth = b.value("n_azimuth", c.born.n_azimuth);
      c.born.J = b.value("J", c.born.J);
      c.born.noise_floor = b.value("noise_floor", c.born.noise_floor);
    }
    if (j.contains("lambdas")) c.lambdas = j["lambdas"].get<std::vector<double>>();
    if (j.contains("rhos")) c.rhos = j["rhos"].get<std::vector<double>>();
    if (j.contains("points"))
      for (const auto& p : j["points"]) c.points.push_back(detail::json_point(p));
    c.prefix = j.value("prefix", std::string("run"));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.dimension != 2 && c.dimension != 3) throw ConfigError("config: dimension must be 2 or 3");
  if (!(c.r1 > 0.0 && c.r1 < c.r)) throw ConfigError("config: radii must satisfy 0 < r1 < r");
  if (!(c.tau > 0.0 && c.tau < 1.0)) throw ConfigError("config: tau must lie in (0, 1)");
  if (c.grid < 2) throw ConfigError("config: grid too small");
  for (double E : c.energies)
    if (!(E > 0.0)) throw ConfigError("config: energies must be positive");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  Json j;
  try {
    is >> j;
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return parse_config(j);
}

struct StabilityRecord {
  double E = 0.0;
  double amplitude = 0.0;
  double m = 0.0;
  double N = 0.0;
  double delta = 0.0;
  double sup_diff = 0.0;
  double beta = 0.0, rho = 0.0, kappa = 0.0, tau = 0.0;
  double s = 0.0, s_star = 0.0;
  double holder_term = 0.0;  // (1 + E)^{5/2} delta^tau
  double log_term = 0.0;     // (1 + E)^{(s - s*)/2} (ln(3 + 1/delta))^{-s}
  double log_shape_2d = 0.0; // (ln(3 + 1/delta))^{-3/4} (ln(3 ln(3 + 1/delta)))^2
  double recon_error = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";

  static std::vector<std::string> columns() {
    return {"E",     "amplitude", "m",           "N",        "delta",        "sup_diff",    "beta",
            "rho",   "kappa",     "tau",         "s",        "s_star",       "holder_term", "log_term",
            "log_shape_2d", "recon_error", "status"};
  }
  std::vector<std::string> cells() const {
    auto f = CsvWriter::num;
    return {f(E),   f(amplitude), f(m), f(N),        f(delta),       f(sup_diff),           f(beta), f(rho), f(kappa),
            f(tau), f(s),         f(s_star), f(holder_term), f(log_term), f(log_shape_2d), f(recon_error), status};
  }
};

struct EnergyFit {
  double E = 0.0;
  EnvelopeFit sup_envelope;     // sup_diff vs the (ln)^{-3/4}(ln 3 ln)^2 shape (d = 2) or ln^{-s} (d = 3)
  double log_coefficient = 0.0; // max over records of value * (ln(3 + 1/delta))^s
  double log_coefficient_sup = 0.0;
  bool uses_reconstruction = false;
};

struct SweepResult {
  std::vector<StabilityRecord> records;
  std::vector<EnergyFit> fits;
  bool energy_trend_nonincreasing = true;
};

/// s* = (m - d) / d
inline double s_star(double m, int d) { return (m - d) / d; }

/// Runs the amplitude x energy grid. Solver failures become diagnostic rows.
inline SweepResult stability_sweep(const ExperimentConfig& c, int jobs = 1) {
  SweepResult out;
  const auto mesh = c.mesh();
  const int d = c.dimension;
  const auto v1 = generate_potential(c.base, d, c.grid, c.r1, c.r, c.smooth_order);
  struct Job {
    double E, amp;
  };
  std::vector<Job> list;
  for (double E : c.energies)
    for (double a : c.amplitudes) list.push_back({E, a});
  out.records.resize(list.size());
  std::vector<NearFieldMatrix> base(c.energies.size());
  std::vector<std::string> base_err(c.energies.size());

  auto pool = [&](int count, const std::function<void(int)>& work) {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int i = next++; i < count; i = next++) work(i);
    };
    const int nt = std::max(1, std::min(jobs, count));
    std::vector<std::thread> threads;
    for (int t = 1; t < nt; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
  };

  pool(static_cast<int>(c.energies.size()), [&](int e) {
    try {
      base[e] = near_field_data(v1, c.energies[e], mesh);
    } catch (const std::exception& ex) {
      base_err[e] = ex.what();
    }
  });

  pool(static_cast<int>(list.size()), [&](int i) {
    const auto [E, amp] = list[i];
    const int e = static_cast<int>(std::find(c.energies.begin(), c.energies.end(), E) - c.energies.begin());
    StabilityRecord rec;
    rec.E = E;
    rec.amplitude = amp;
    rec.tau = c.tau;
    try {
      if (!base_err[e].empty()) throw std::runtime_error(base_err[e]);
      const auto v2 = generate_potential(c.base.plus(c.perturbation.scaled(amp)), d, c.grid, c.r1, c.r, c.smooth_order);
      rec.m = v2.regularity().m;
      rec.N = std::max(v1.regularity().N, v2.regularity().N);
      rec.s_star = s_star(rec.m, d);
      rec.s = c.s_fraction * rec.s_star;
      rec.sup_diff = v1.max_abs_difference(v2);
      if (rec.sup_diff == 0.0) {
        rec.delta = 0.0;  // identical potentials: bound holds trivially
        rec.recon_error = 0.0;
      } else {
        const auto S2 = near_field_data(v2, E, mesh);
        rec.delta = data_norm_diff(base[e], S2);
        const auto pc = choose_parameters(rec.delta, E, c.tau, c.r, d, c.epsilon);
        rec.beta = pc.beta;
        rec.rho = pc.rho;
        rec.kappa = pc.kappa;
        rec.holder_term = std::pow(1.0 + E, 2.5) * std::pow(rec.delta, c.tau);
        rec.log_term = std::pow(1.0 + E, 0.5 * (rec.s - rec.s_star)) * std::pow(pc.log_term, -rec.s);
        rec.log_shape_2d = log_envelope_2d(rec.delta);
        if (c.reconstruct && d == 3) {
          const auto est = born_invert_difference(base[e], S2, E, pc.rho, pc.kappa, v1, c.born);
          double err = 0.0;
          for (int q = 0; q < v1.size(); ++q) err = std::max(err, std::fabs(est.values[q] - (v2[q] - v1[q])));
          rec.recon_error = err;
          if (est.below_noise) rec.status = "below-noise";
        }
      }
    } catch (const std::exception& ex) {
      rec.status = std::string("error: ") + ex.what();
    }
    out.records[i] = rec;
  });

  double prev = std::numeric_limits<double>::infinity();
  for (double E : c.energies) {
    EnergyFit fit;
    fit.E = E;
    std::vector<double> dl, sv;
    double s = 0.0;
    for (const auto& rec : out.records) {
      if (rec.E != E || rec.status.rfind("error", 0) == 0) continue;
      dl.push_back(rec.delta);
      sv.push_back(rec.sup_diff);
      s = std::max(s, rec.s);
      if (rec.delta <= 0.0) continue;
      const double L = std::pow(std::log(3.0 + 1.0 / rec.delta), rec.s);
      fit.log_coefficient_sup = std::max(fit.log_coefficient_sup, rec.sup_diff * L);
      if (!std::isnan(rec.recon_error)) {
        fit.uses_reconstruction = true;
        fit.log_coefficient = std::max(fit.log_coefficient, rec.recon_error * L);
      }
    }
    if (!fit.uses_reconstruction) fit.log_coefficient = fit.log_coefficient_sup;
    bool any_positive = false;
    for (double x : dl) any_positive = any_positive || x > 0.0;
    if (any_positive) {
      if (d == 2)
        fit.sup_envelope = fit_envelope(dl, sv, log_envelope_2d);
      else
        fit.sup_envelope = fit_envelope(dl, sv, [s](double dd) { return std::pow(std::log(3.0 + 1.0 / dd), -s); });
    }
    if (fit.log_coefficient > prev * (1.0 + 1e-12)) out.energy_trend_nonincreasing = false;
    prev = fit.log_coefficient;
    out.fits.push_back(fit);
  }
  return out;
}

}  // namespace nfis
