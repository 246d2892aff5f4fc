// nfis: run the experiment pipelines from a JSON config and write CSV / JSON / SVG artifacts.

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <random>

#include "nfis/buckhgeim.hpp"
#include "nfis/exterior.hpp"
#include "nfis/faddeev.hpp"
#include "nfis/harness.hpp"
#include "nfis/io.hpp"
#include "nfis/phi.hpp"
#include "nfis/stability.hpp"
#include "run_context.hpp"

using namespace nfis;
using cli::RunContext;

namespace {

const auto num = CsvWriter::num;

PotentialFamily jittered(PotentialFamily f, double jitter, std::mt19937_64& rng) {
  if (jitter <= 0.0) return f;
  std::uniform_real_distribution<double> u(-jitter, jitter);
  for (auto& b : f.bumps)
    for (auto& x : b.center) x += u(rng);
  return f;
}

struct Pair {
  GridPotential v1, v2;
  bool has_v2 = false;
};

// v1 = base, v2 = base + amplitude * perturbation; either may be read from files instead.
Pair config_potentials(const RunContext& ctx) {
  const auto& c = ctx.config();
  const auto& j = ctx.raw();
  std::mt19937_64 rng(ctx.seed());
  const double jitter = j.value("jitter", 0.0);
  auto make = [&](const PotentialFamily& f) {
    if (f.bumps.empty()) return GridPotential::zero(c.dimension, c.grid, c.r1, c.r);
    return generate_potential(jittered(f, jitter, rng), c.dimension, c.grid, c.r1, c.r, c.smooth_order);
  };
  Pair p{make(c.base), GridPotential::zero(c.dimension, c.grid, c.r1, c.r), false};
  if (!c.perturbation.bumps.empty()) {
    p.v2 = make(c.base.plus(c.perturbation.scaled(j.value("amplitude", 1.0))));
    p.has_v2 = true;
  }
  if (j.contains("potential_files")) {
    const auto files = j["potential_files"].get<std::vector<std::string>>();
    if (files.empty() || files.size() > 2) throw ConfigError("config: potential_files takes one or two paths");
    p.v1 = read_potential(files[0]);
    if (files.size() == 2) {
      p.v2 = read_potential(files[1]);
      p.has_v2 = true;
    }
  }
  return p;
}

double config_energy(const RunContext& ctx) {
  return ctx.raw().value("E", ctx.config().energies.front());
}

int cmd_generate(RunContext& ctx) {
  const auto& c = ctx.config();
  CsvWriter csv(ctx.file("potentials.csv"), {"name", "file", "dimension", "n", "m", "N", "flatness", "sup_norm", "status"});
  try {
    const auto p = config_potentials(ctx);
    std::vector<std::pair<std::string, const GridPotential*>> out{{"v1", &p.v1}};
    if (p.has_v2) out.push_back({"v2", &p.v2});
    for (const auto& [name, v] : out) {
      const std::string stem = name + ".bin";
      write_potential(ctx.file(stem), *v);
      const auto& r = v->regularity();
      csv.row({name, c.prefix + "_" + stem, std::to_string(v->dim()), std::to_string(v->n()), num(r.m), num(r.N),
               std::to_string(r.flatness), num(v->sup_norm()), "ok"});
      ctx.case_status(name, "ok");
    }
  } catch (const DomainError& e) {
    csv.row({"v", "", std::to_string(c.dimension), std::to_string(c.grid), "", "", "", "", std::string("error: ") + e.what()});
    ctx.case_status("generate", std::string("error: ") + e.what());
  }
  return ctx.finish();
}

int cmd_forward(RunContext& ctx) {
  const auto& c = ctx.config();
  const auto p = config_potentials(ctx);
  const auto mesh = c.mesh();
  CsvWriter csv(ctx.file("forward.csv"), {"E", "potential", "file", "max_abs", "reciprocity_defect", "delta", "status"});
  for (double E : c.energies) {
    const std::string tag = "E" + num(E);
    try {
      const auto S1 = near_field_data(p.v1, E, mesh);
      write_matrix(ctx.file("S1_" + tag + ".bin"), S1);
      csv.row({num(E), "v1", c.prefix + "_S1_" + tag + ".bin", num(S1.max_abs()), num(S1.reciprocity_defect()), "", "ok"});
      ctx.gate("reciprocity v1 " + tag, S1.reciprocity_defect(), 1e-6, S1.reciprocity_defect() <= 1e-6);
      if (p.has_v2) {
        const auto S2 = near_field_data(p.v2, E, mesh);
        write_matrix(ctx.file("S2_" + tag + ".bin"), S2);
        csv.row({num(E), "v2", c.prefix + "_S2_" + tag + ".bin", num(S2.max_abs()), num(S2.reciprocity_defect()),
                 num(data_norm_diff(S1, S2)), "ok"});
        ctx.gate("reciprocity v2 " + tag, S2.reciprocity_defect(), 1e-6, S2.reciprocity_defect() <= 1e-6);
      }
      ctx.case_status(tag, "ok");
    } catch (const std::exception& e) {
      csv.row({num(E), "", "", "", "", "", std::string("error: ") + e.what()});
      ctx.case_status(tag, std::string("error: ") + e.what());
    }
  }
  return ctx.finish();
}

int cmd_identity(RunContext& ctx) {
  const auto& c = ctx.config();
  const auto& j = ctx.raw();
  const auto p = config_potentials(ctx);
  if (!p.has_v2) throw ConfigError("identity-check needs a perturbation or two potential files");
  const auto mesh = c.mesh();
  const double tol = j.value("tolerance", 2e-2);
  PhiOptions po;
  po.fd_step = j.value("fd_step", po.fd_step);
  // Pairs of propagation directions; default e1 and (cos 2, sin 2).
  std::vector<std::pair<Point, Point>> dirs;
  if (j.contains("directions")) {
    for (const auto& d : j["directions"]) {
      if (!d.is_array() || d.size() != 2) throw ConfigError("config: each direction entry is a pair of points");
      dirs.push_back({detail::json_point(d[0]), detail::json_point(d[1])});
    }
  } else {
    dirs.push_back({{1, 0, 0}, {std::cos(2.0), std::sin(2.0), 0}});
  }
  CsvWriter csv(ctx.file("identity.csv"),
                {"E", "case", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "relerr", "status"});
  for (double E : c.energies) {
    NearFieldMatrix S1, S2;
    try {
      S1 = near_field_data(p.v1, E, mesh);
      S2 = near_field_data(p.v2, E, mesh);
    } catch (const std::exception& e) {
      csv.row({num(E), "data", "", "", "", "", "", std::string("error: ") + e.what()});
      ctx.case_status("data E" + num(E), std::string("error: ") + e.what());
      continue;
    }
    for (std::size_t q = 0; q < dirs.size(); ++q) {
      const std::string name = "E" + num(E) + " pair" + std::to_string(q);
      try {
        auto wave = [&](Point w) {
          const double s = std::sqrt(E / dot(w, w));
          return exponential_field({s * w[0], s * w[1], s * w[2]});
        };
        const auto p1 = build_phi(p.v1, total_field(p.v1, E, wave(dirs[q].first)), E, mesh, po);
        const auto p2 = build_phi(p.v2, total_field(p.v2, E, wave(dirs[q].second)), E, mesh, po);
        const auto rep = alessandrini_check(p.v1, p.v2, p1, p2, S1, S2);
        csv.row({num(E), std::to_string(q), num(rep.lhs.real()), num(rep.lhs.imag()), num(rep.rhs.real()),
                 num(rep.rhs.imag()), num(rep.relative_error), "ok"});
        ctx.gate("identity " + name, rep.relative_error, tol, rep.relative_error <= tol);
        ctx.case_status(name, "ok");
      } catch (const std::exception& e) {
        csv.row({num(E), std::to_string(q), "", "", "", "", "", std::string("error: ") + e.what()});
        ctx.case_status(name, std::string("error: ") + e.what());
      }
    }
  }
  return ctx.finish();
}

int cmd_faddeev(RunContext& ctx) {
  const auto& c = ctx.config();
  const auto& j = ctx.raw();
  if (c.dimension != 3) throw ConfigError("faddeev-born is a 3D pipeline");
  const auto p = config_potentials(ctx);
  const double E = config_energy(ctx);
  const auto mode = faddeev_mode_from_string(j.value("mode", std::string("series")));
  std::vector<Point> ps = c.points;
  if (ps.empty()) ps = {{1.0, 0.0, 0.0}, {0.0, 1.5, 0.5}, {0.8, -0.6, 1.2}};
  const int np = static_cast<int>(ps.size()), nr = static_cast<int>(c.rhos.size());
  struct Row {
    Complex vhat, h;
    std::string status = "ok";
  };
  std::vector<Row> rows(static_cast<std::size_t>(np * nr));
  cli::parallel_for(np * nr, ctx.jobs(), [&](int i) {
    const auto& pt = ps[i / nr];
    try {
      rows[i].vhat = hat_v(p.v1, pt);
      rows[i].h = scattering_amplitude(p.v1, make_theta_pair(E, pt, c.rhos[i % nr]), mode);
    } catch (const std::exception& e) {
      rows[i].status = std::string("error: ") + e.what();
    }
  });
  CsvWriter csv(ctx.file("born.csv"), {"p1", "p2", "p3", "rho", "sqrt_E_rho2", "vhat_re", "vhat_im", "h_re", "h_im",
                                       "abs_err", "mode", "status"});
  std::vector<SvgSeries> series;
  Json slopes = Json::array();
  for (int a = 0; a < np; ++a) {
    SvgSeries s;
    s.label = "p = (" + num(ps[a][0]) + ", " + num(ps[a][1]) + ", " + num(ps[a][2]) + ")";
    for (int b = 0; b < nr; ++b) {
      const auto& r = rows[a * nr + b];
      const double x = std::sqrt(E + c.rhos[b] * c.rhos[b]), err = std::abs(r.vhat - r.h);
      csv.row({num(ps[a][0]), num(ps[a][1]), num(ps[a][2]), num(c.rhos[b]), num(x), num(r.vhat.real()),
               num(r.vhat.imag()), num(r.h.real()), num(r.h.imag()), r.status == "ok" ? num(err) : "", to_string(mode),
               r.status});
      ctx.case_status(s.label + " rho " + num(c.rhos[b]), r.status);
      if (r.status == "ok" && err > 0.0) {
        s.x.push_back(x);
        s.y.push_back(err);
      }
    }
    if (s.x.size() >= 2) {
      const double slope = fit_loglog(s.x, s.y).slope;
      slopes.push_back({{"p", {ps[a][0], ps[a][1], ps[a][2]}}, {"slope", slope}});
      if (j.contains("slope_range")) {
        const auto lim = j["slope_range"].get<std::vector<double>>();
        ctx.gate("born slope " + s.label, slope, lim.at(1), slope >= lim.at(0) && slope <= lim.at(1));
      }
    }
    series.push_back(std::move(s));
  }
  ctx.extra("born_slopes", slopes);
  write_svg_plot(ctx.file("born.svg"), "Born limit: |vhat(p) - h(k, l)|", "sqrt(E + rho^2)", "abs error", series);

  // Band-limited inversion of two data sets, if requested.
  if (j.contains("invert") && p.has_v2) {
    const auto& inv = j["invert"];
    const double rho = inv.value("rho", 2.0), kappa = inv.value("kappa", 5.0);
    try {
      const auto mesh = c.mesh();
      const auto S1 = near_field_data(p.v1, E, mesh), S2 = near_field_data(p.v2, E, mesh);
      const auto est = born_invert_difference(S1, S2, E, rho, kappa, p.v1, c.born);
      const auto ref = lowpass_difference(p.v1, p.v2, kappa, c.born);
      const int n = est.n;
      CsvWriter g(ctx.file("inversion.csv"), {"cell", "estimate", "lowpass"});
      std::vector<double> slice;
      double err = 0.0;
      for (std::size_t i = 0; i < est.values.size(); ++i) {
        g.row({std::to_string(i), num(est.values[i]), num(ref.values[i])});
        err = std::max(err, std::fabs(est.values[i] - ref.values[i]));
        if (static_cast<int>(i) / (n * n) == n / 2) slice.push_back(est.values[i]);
      }
      write_svg_heatmap(ctx.file("inversion.svg"), "Born inversion, central slice", n, slice);
      const double rel = ref.sup() > 0 ? err / ref.sup() : err;
      ctx.extra("inversion", {{"rho", rho}, {"kappa", kappa}, {"relative_sup_error", rel}, {"below_noise", est.below_noise}});
      ctx.gate("inversion vs low-pass", rel, inv.value("tolerance", 0.3), rel <= inv.value("tolerance", 0.3));
      ctx.case_status("inversion", "ok");
    } catch (const std::exception& e) {
      ctx.case_status("inversion", std::string("error: ") + e.what());
    }
  }
  return ctx.finish();
}

int cmd_buckhgeim(RunContext& ctx) {
  const auto& c = ctx.config();
  if (c.dimension != 2) throw ConfigError("buckhgeim-recon is a 2D pipeline");
  const auto p = config_potentials(ctx);
  if (!p.has_v2) throw ConfigError("buckhgeim-recon needs a perturbation or two potential files");
  const double E = ctx.raw().value("E", 0.0);
  std::vector<Complex> z0s;
  for (const auto& pt : c.points) z0s.emplace_back(pt[0], pt[1]);
  if (z0s.empty())
    for (double x : {-0.2, 0.0, 0.2})
      for (double y : {-0.2, 0.0, 0.2}) z0s.emplace_back(x, y);
  const int nl = static_cast<int>(c.lambdas.size());
  std::vector<std::vector<ReconstructionPoint>> res(nl);
  std::vector<std::string> status(nl, "ok");
  cli::parallel_for(nl, ctx.jobs(), [&](int i) {
    try {
      res[i] = reconstruct_diff(p.v1, p.v2, z0s, Complex(c.lambdas[i], 0.0), E);
    } catch (const std::exception& e) {
      status[i] = std::string("error: ") + e.what();
    }
  });
  CsvWriter csv(ctx.file("recon.csv"), {"lambda", "x", "y", "estimate", "truth", "abs_err", "imag_residue", "status"});
  SvgSeries s{"sup error", {}, {}, true};
  std::vector<double> sup(nl, 0.0);
  for (int i = 0; i < nl; ++i) {
    ctx.case_status("lambda " + num(c.lambdas[i]), status[i]);
    if (status[i] != "ok") {
      csv.row({num(c.lambdas[i]), "", "", "", "", "", "", status[i]});
      continue;
    }
    for (const auto& r : res[i]) {
      const double err = std::fabs(r.estimate - r.truth);
      sup[i] = std::max(sup[i], err);
      csv.row({num(c.lambdas[i]), num(r.z0.real()), num(r.z0.imag()), num(r.estimate), num(r.truth), num(err),
               num(r.imag_residue), "ok"});
    }
    s.x.push_back(c.lambdas[i]);
    s.y.push_back(sup[i]);
  }
  SvgSeries env{"envelope fitted at first lambda", {}, {}, true};
  if (!s.x.empty() && s.y.front() > 0.0) {
    const double C = s.y.front() / buckhgeim_envelope(s.x.front());
    for (double l : s.x) {
      env.x.push_back(l);
      env.y.push_back(C * buckhgeim_envelope(l));
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < s.y.size(); ++i) decreasing = decreasing && s.y[i] < s.y[i - 1];
    ctx.gate("sup error strictly decreasing", decreasing ? 1.0 : 0.0, 1.0, decreasing);
    if (s.x.size() >= 2) {
      const double slope = fit_loglog(s.x, s.y).slope;
      ctx.gate("decay exponent", slope, -0.5, slope <= -0.5);
      ctx.extra("decay_exponent", slope);
    }
    ctx.gate("final error under envelope", s.y.back(), env.y.back(), s.y.back() <= env.y.back());
  }
  write_svg_plot(ctx.file("recon.svg"), "Pointwise reconstruction error", "|lambda|", "sup error", {s, env});
  return ctx.finish();
}

int cmd_exterior(RunContext& ctx) {
  const auto& c = ctx.config();
  const int J = ctx.raw().value("J", 32);
  const int trials = ctx.raw().value("trials", 100);
  const int d = c.dimension;
  CsvWriter modes(ctx.file("dtn.csv"), {"E", "j", "m_re", "m_im", "abs_m", "bound", "status"});
  CsvWriter ratios(ctx.file("dtn_ratio.csv"), {"E", "c7", "worst_degree", "worst_random_ratio", "status"});
  SvgSeries s{"C7(E)", {}, {}, true};
  double c7max = 0.0;
  for (double E : c.energies) {
    const std::string tag = "E" + num(E);
    try {
      bool ok = true;
      for (int jj = 0; jj <= J; ++jj) {
        const Complex m = dtn_multiplier(d, jj, E, c.r);
        const double bound = jj + d - 2 + 2 * E;
        ok = ok && std::abs(m) <= bound * (1 + 1e-12);
        modes.row({num(E), std::to_string(jj), num(m.real()), num(m.imag()), num(std::abs(m)), num(bound), "ok"});
      }
      ctx.gate("multiplier bound " + tag, ok ? 1.0 : 0.0, 1.0, ok);
      const auto rep = verify_dtn_ratio_bound(d, E, c.r, J, trials, ctx.seed());
      ratios.row({num(E), num(rep.c7), std::to_string(rep.worst_degree), num(rep.worst_random_ratio), "ok"});
      c7max = std::max(c7max, rep.c7);
      s.x.push_back(E);
      s.y.push_back(rep.c7);
      ctx.case_status(tag, "ok");
    } catch (const std::exception& e) {
      ratios.row({num(E), "", "", "", std::string("error: ") + e.what()});
      ctx.case_status(tag, std::string("error: ") + e.what());
    }
  }
  ctx.extra("c7", c7max);
  write_svg_plot(ctx.file("c7.svg"), "DtN ratio constant", "E", "C7", {s}, true, false);
  return ctx.finish();
}

int cmd_stability(RunContext& ctx) {
  const auto& c = ctx.config();
  const auto res = stability_sweep(c, ctx.jobs());
  {
    CsvWriter csv(ctx.file("records.csv"), StabilityRecord::columns());
    for (const auto& r : res.records) {
      csv.row(r.cells());
      ctx.case_status("E " + num(r.E) + " amplitude " + num(r.amplitude), r.status);
    }
  }
  Json fits = Json::array();
  std::vector<SvgSeries> series;
  for (const auto& f : res.fits) {
    fits.push_back({{"E", f.E},
                    {"envelope_constant", f.sup_envelope.constant},
                    {"envelope_anchor", f.sup_envelope.anchor},
                    {"envelope_holds", f.sup_envelope.holds},
                    {"envelope_worst_ratio", f.sup_envelope.worst_ratio},
                    {"log_coefficient", f.log_coefficient},
                    {"log_coefficient_sup", f.log_coefficient_sup},
                    {"uses_reconstruction", f.uses_reconstruction}});
    if (c.dimension == 2)
      ctx.gate("envelope E " + num(f.E), f.sup_envelope.worst_ratio, 1.0, f.sup_envelope.holds);
    SvgSeries s;
    s.label = "E = " + num(f.E);
    for (const auto& r : res.records)
      if (r.E == f.E && r.delta > 0.0 && r.sup_diff > 0.0) {
        s.x.push_back(std::log(3.0 + 1.0 / r.delta));
        s.y.push_back(r.sup_diff);
      }
    series.push_back(std::move(s));
  }
  if (res.fits.size() > 1)
    ctx.gate("log coefficient non-increasing in E", res.energy_trend_nonincreasing ? 1.0 : 0.0, 1.0,
             res.energy_trend_nonincreasing);
  {
    std::ofstream os(ctx.file("fits.json"));
    os << Json{{"fits", fits}, {"energy_trend_nonincreasing", res.energy_trend_nonincreasing}}.dump(2) << "\n";
  }
  write_svg_plot(ctx.file("stability.svg"), "Stability: sup |v2 - v1| vs ln(3 + 1/delta)", "ln(3 + 1/delta)",
                 "sup |v2 - v1|", series);
  return ctx.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nfis: near-field inverse scattering experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NFIS_VERSION);
  std::string config, out = "out";
  int jobs = 1;
  std::uint64_t seed = 1;
  bool strict = false;
  app.add_option("--config", config, "JSON experiment config")->required();
  app.add_option("--out", out, "output directory");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for random traces and jittered potentials");
  app.add_flag("--strict", strict, "failed invariant gates fail the run");
  app.fallthrough();

  using Fn = int (*)(RunContext&);
  const std::vector<std::pair<std::string, Fn>> commands{
      {"generate-potential", cmd_generate}, {"forward", cmd_forward},         {"identity-check", cmd_identity},
      {"faddeev-born", cmd_faddeev},        {"buckhgeim-recon", cmd_buckhgeim}, {"exterior-check", cmd_exterior},
      {"stability-sweep", cmd_stability}};
  for (const auto& [name, fn] : commands) app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (const auto& [name, fn] : commands) {
    if (!app.got_subcommand(name)) continue;
    try {
      RunContext ctx(name, load_config(config), out, jobs, seed, strict);
      return fn(ctx);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    } catch (const IoError& e) {
      std::cerr << "io error: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << name << " failed: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}
