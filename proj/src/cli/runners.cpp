#include "quenchlab/cli/runners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "quenchlab/csv.hpp"
#include "quenchlab/errors.hpp"
#include "quenchlab/msk.hpp"
#include "quenchlab/parallel.hpp"
#include "quenchlab/polymer.hpp"
#include "quenchlab/version.hpp"

namespace quenchlab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Files under one output directory; every write failure names the path.
class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {}

  template <class Writer>
  void write(const std::string& rel, Writer&& writer) {
    const fs::path path = root_ / rel;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    writer(out);
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
    files_.push_back(rel);
  }

  const std::vector<std::string>& files() const noexcept { return files_; }
  const fs::path& root() const noexcept { return root_; }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

std::string frame_name(const char* dir, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/frame_%04d.csv", dir, i);
  return buf;
}

void write_frame(std::ostream& out, int i, int dim, const LatticePMF& f) {
  if (dim == 1)
    CsvRow(out) << "i" << "x1" << "mass";
  else
    CsvRow(out) << "i" << "x1" << "x2" << "mass";
  for (const auto& a : f.atoms()) {
    CsvRow row(out);
    row << i << a.x[0];
    if (dim == 2) row << a.x[1];
    row << a.mass;
  }
}

RunOutput finish(const OutputDir& dir, RunOutput out) {
  out.files = dir.files();
  return out;
}

PSPM load_pspm(const PspmConfig& c) {
  if (c.f) return *c.f;
  std::ifstream in(c.input);
  if (!in) throw IoError("cannot read PSPM file " + c.input);
  try {
    json j;
    in >> j;
    return j.get<PSPM>();
  } catch (const std::exception& e) {
    throw ConfigError("PSPM file " + c.input + ": " + e.what());
  }
}

PSPM random_pspm(const KeyedStream& rng, std::int64_t tag, int max_atoms) {
  const int atoms = 1 + static_cast<int>(rng.uniform({tag, 0}) * max_atoms);
  const int copies = 1 + static_cast<int>(rng.uniform({tag, 1}) * 2);
  std::vector<std::vector<Atom>> per(static_cast<std::size_t>(copies));
  std::vector<double> w(static_cast<std::size_t>(atoms));
  double total = 0.0;
  for (int k = 0; k < atoms; ++k) total += (w[static_cast<std::size_t>(k)] = rng.uniform({tag, 2, k}));
  const double scale = rng.uniform({tag, 3}) / total;
  for (int k = 0; k < atoms; ++k) {
    const int c = static_cast<int>(rng.uniform({tag, 4, k}) * copies);
    const Coord x{static_cast<int>(rng.uniform({tag, 5, k}) * 5) - 2, static_cast<int>(rng.uniform({tag, 6, k}) * 5) - 2};
    per[static_cast<std::size_t>(c)].push_back({x, w[static_cast<std::size_t>(k)] * scale});
  }
  std::vector<LatticePMF> pmfs;
  for (auto& atoms_c : per) pmfs.emplace_back(2, std::move(atoms_c));
  return PSPM(2, std::move(pmfs));
}

PSPM translate_and_permute(const PSPM& f, const KeyedStream& rng, std::int64_t tag) {
  std::vector<LatticePMF> copies;
  int k = 0;
  for (const auto& c : f.copies()) {
    const Coord shift{static_cast<int>(rng.uniform({tag, 7, k}) * 11) - 5,
                      static_cast<int>(rng.uniform({tag, 8, k}) * 11) - 5};
    std::vector<Atom> atoms;
    for (const auto& a : c.atoms()) atoms.push_back({a.x + shift, a.mass});
    copies.emplace_back(f.dim(), std::move(atoms));
    ++k;
  }
  std::reverse(copies.begin(), copies.end());
  return PSPM(f.dim(), std::move(copies));
}

}  // namespace

RunOutput run_polymer(const PolymerConfig& c, int /*jobs*/) {
  OutputDir dir(c.output);
  RunOutput out;
  const Environment env = sample_environment(c.dist, c.d, c.n, c.seed);
  const PolymerRun run = forward_measures(env, c.beta);
  std::vector<LatticePMF> endpoints;
  for (int i = 0; i <= c.n; ++i) endpoints.push_back(run.forward(i));
  if (c.frames) {
    for (int i = 0; i <= c.n; ++i) {
      dir.write(frame_name("endpoint", i), [&](std::ostream& o) { write_frame(o, i, c.d, endpoints[static_cast<std::size_t>(i)]); });
      dir.write(frame_name("ipoint", i), [&](std::ostream& o) { write_frame(o, i, c.d, run.marginal(i)); });
    }
  }
  const double overlap = replica_overlap(run);
  double log_w = kNaN;
  try {
    log_w = log_normalized_partition(run);
  } catch (const DomainError& e) {
    out.warnings.emplace_back(std::string("log W_n not reported: ") + e.what());
  }
  std::optional<double> p2p;
  if (c.point_to_point) p2p = point_to_point_log_partition(run, *c.point_to_point);
  dir.write("summary.csv", [&](std::ostream& o) {
    {
      CsvRow h(o);
      h << "d" << "n" << "beta" << "seed" << "log_partition" << "free_energy" << "overlap" << "log_W";
      if (p2p) h << "p2p_log_partition";
    }
    CsvRow row(o);
    row << c.d << c.n << c.beta << static_cast<unsigned long long>(c.seed) << run.log_partition() << free_energy(run)
        << overlap << log_w;
    if (p2p) row << *p2p;
  });
  const LocalizationReport report = localization_report(endpoints, c.delta, c.K, c.localization_mode);
  dir.write("localization.csv", [&](std::ostream& o) { report.write_csv(o); });
  dir.write("localization.json", [&](std::ostream& o) { o << report.summary().dump(2) << '\n'; });
  out.summary = {{"log_partition", run.log_partition()}, {"free_energy", free_energy(run)}, {"overlap", overlap}};
  return finish(dir, std::move(out));
}

RunOutput run_msk_sweep(const MskConfig& c, int jobs) {
  OutputDir dir(c.output);
  RunOutput out;
  const MSKModel base = MSKModel::two_species(c.lambda1, c.d11, c.d22, c.d12, 1.0, 0.0);
  out.warnings = base.warnings();
  std::vector<double> betas = c.beta_grid, hs = c.h_grid;
  std::sort(betas.begin(), betas.end());
  std::sort(hs.begin(), hs.end());
  const Quadrature quad(c.quad_order);
  struct Row {
    double beta, h;
    double q1 = kNaN, q2 = kNaN, residual = kNaN, prs = kNaN, g1 = kNaN, g2 = kNaN, thr = kNaN, gap = kNaN;
    bool broken = false;
    std::string status = "ok";
  };
  std::vector<Row> rows;
  for (double b : betas)
    for (double h : hs) rows.push_back({b, h});
  parallel_for(rows.size(), jobs, [&](std::size_t k) {
    Row& r = rows[k];
    MSKModel m = base;
    m.beta = r.beta;
    m.h = r.h;
    RSOptions opt;
    opt.seed = c.seed;
    try {
      const RSResult rs = rs_fixed_point(m, quad, opt);
      const Eigen::VectorXd& q = rs.point.q;
      r.q1 = q(0);
      r.q2 = q(1);
      r.residual = rs.point.residual;
      r.prs = rs_free_energy(m, q, quad);
      const Eigen::VectorXd g = gamma_weights(m, q, quad);
      r.g1 = g(0);
      r.g2 = g(1);
      if (rs.all.size() > 1) r.status = "multiple_fixed_points";
      if (r.h > 0.0) {
        const ATCheck at = at_line_check(m, q, quad);
        r.thr = at.threshold_sq;
        r.broken = at.broken;
        if (at.broken && c.search) {
          const auto w = verify_symmetry_breaking(m, q, quad);
          if (w) r.gap = w->gap();
        }
      } else {
        r.status = "at_undefined_h0";
      }
    } catch (const ConvergenceError& e) {
      r.status = "nonconverged";
      if (e.last_iterate().size() == 2) {
        r.q1 = e.last_iterate()[0];
        r.q2 = e.last_iterate()[1];
      }
    }
  });
  int failures = 0;
  for (const auto& r : rows) failures += r.status == "nonconverged";
  if (failures > 0) out.warnings.push_back(std::to_string(failures) + " grid point(s) did not converge");
  dir.write("sweep.csv", [&](std::ostream& o) {
    CsvRow(o) << "beta" << "h" << "q1" << "q2" << "residual" << "P_RS" << "gamma1" << "gamma2" << "at_threshold_sq"
              << "broken" << "witness_gap" << "status";
    for (const auto& r : rows)
      CsvRow(o) << r.beta << r.h << r.q1 << r.q2 << r.residual << r.prs << r.g1 << r.g2 << r.thr << r.broken << r.gap
                << r.status;
  });
  out.summary = {{"uniqueness_threshold_sq", uniqueness_threshold(base)},
                 {"positive_definite", base.positive_definite()},
                 {"nonconverged_rows", failures}};
  return finish(dir, std::move(out));
}

RunOutput run_pspm(const PspmConfig& c, int jobs) {
  OutputDir dir(c.output);
  RunOutput out;
  const PSPM f = load_pspm(c);
  const WalkKernel walk = WalkKernel::simple(f.dim());
  dir.write("canonical.json", [&](std::ostream& o) { o << json(canonicalize(f)).dump(2) << '\n'; });
  const KeyedStream seeds(c.seed, 1);
  std::vector<PSPM> updates(static_cast<std::size_t>(c.samples), PSPM(f.dim()));
  parallel_for(updates.size(), jobs, [&](std::size_t s) {
    updates[s] = update_map_sample(f, c.beta, walk, c.dist, seeds.bits({static_cast<std::int64_t>(s)}));
  });
  dir.write("updates.csv", [&](std::ostream& o) {
    CsvRow(o) << "sample" << "norm" << "atoms" << "d_alpha_to_input";
    for (std::size_t s = 0; s < updates.size(); ++s)
      CsvRow(o) << static_cast<int>(s) << updates[s].norm() << static_cast<unsigned long long>(updates[s].atom_count())
                << d_alpha(updates[s], f, c.alpha, MetricMode::upper);
  });
  const Estimate R = R_functional(f, c.beta, walk, c.dist, c.n_mc, c.seed);
  dir.write("summary.csv", [&](std::ostream& o) {
    CsvRow(o) << "beta" << "norm" << "R" << "R_se";
    CsvRow(o) << c.beta << f.norm() << R.value << R.se;
  });
  out.summary = {{"R", R.value}, {"R_se", R.se}};
  if (c.polymer_n > 0) {
    const Environment env = sample_environment(c.dist, f.dim(), c.polymer_n, c.seed);
    const PolymerRun run = forward_measures(env, c.beta, walk, PolymerOptions{false});
    const EmpiricalMeasure rho = empirical_from_run(run);
    const Estimate W = wasserstein_update_proxy(rho, c.beta, walk, c.dist, c.alpha, c.repetitions, c.seed, jobs);
    dir.write("wasserstein.csv", [&](std::ostream& o) {
      CsvRow(o) << "n" << "W" << "se";
      CsvRow(o) << c.polymer_n << W.value << W.se;
    });
    out.summary["W"] = W.value;
  }
  return finish(dir, std::move(out));
}

RunOutput run_passage(const PassageConfig& c, int jobs) {
  OutputDir dir(c.output);
  RunOutput out;
  const FieldKind kind = c.lpp ? FieldKind::vertex : FieldKind::edge;
  out.warnings = percolation_warnings(c.dist, kind);
  const Box box = c.resolved_box();
  const Coord dst = c.resolved_dst();
  const KeyedStream seeds(c.seed, c.lpp ? 2 : 1);
  std::vector<PassageResult> results(static_cast<std::size_t>(c.replicas));
  parallel_for(results.size(), jobs, [&](std::size_t r) {
    const WeightField field = WeightField::sample(kind, box, c.dist, seeds.bits({static_cast<std::int64_t>(r)}));
    results[r] = c.lpp ? lpp_passage(field, c.src, dst) : fpp_passage(field, c.src, dst);
  });
  dir.write("passage.csv", [&](std::ostream& o) {
    CsvRow(o) << "replica" << "T" << "geodesic_steps";
    for (std::size_t r = 0; r < results.size(); ++r)
      CsvRow(o) << static_cast<int>(r) << results[r].time << static_cast<int>(results[r].geodesic.size() - 1);
  });
  dir.write("geodesics.csv", [&](std::ostream& o) {
    CsvRow(o) << "replica" << "step" << "x1" << "x2";
    for (std::size_t r = 0; r < results.size(); ++r)
      for (std::size_t s = 0; s < results[r].geodesic.size(); ++s)
        CsvRow(o) << static_cast<int>(r) << static_cast<int>(s) << results[r].geodesic[s][0] << results[r].geodesic[s][1];
  });
  return finish(dir, std::move(out));
}

RunOutput run_fluct(const FluctConfig& c, int jobs) {
  OutputDir dir(c.output);
  RunOutput out;
  FluctuationConfig cfg = c.experiment;
  cfg.jobs = jobs;
  const FluctuationStats stats = fluctuation_experiment(cfg);
  out.warnings = stats.warnings;
  dir.write("raw.csv", [&](std::ostream& o) { stats.write_raw_csv(o); });
  dir.write("summary.csv", [&](std::ostream& o) { stats.write_summary_csv(o); });
  double min_gap = std::numeric_limits<double>::infinity();
  for (const auto& r : stats.raw) min_gap = std::min(min_gap, r.gap);
  out.summary = {{"min_gap", min_gap}, {"mode", to_string(cfg.coupling_mode())}};
  return finish(dir, std::move(out));
}

RunOutput run_metric_selftest(const SelftestConfig& c, int jobs) {
  OutputDir dir(c.output);
  RunOutput out;
  const KeyedStream rng(c.seed, 3);
  struct Trial {
    double fg = 0, gf = 0, gh = 0, fh = 0, slack = 0, translated = 0, upper = 0;
    bool pass = false;
  };
  std::vector<Trial> trials(static_cast<std::size_t>(c.trials));
  parallel_for(trials.size(), jobs, [&](std::size_t t) {
    const auto tag = static_cast<std::int64_t>(3 * t);
    const PSPM f = random_pspm(rng, tag, c.max_atoms);
    const PSPM g = random_pspm(rng, tag + 1, c.max_atoms);
    const PSPM h = random_pspm(rng, tag + 2, c.max_atoms);
    Trial& r = trials[t];
    r.fg = d_alpha(f, g, c.alpha, MetricMode::exact_small);
    r.gf = d_alpha(g, f, c.alpha, MetricMode::exact_small);
    r.gh = d_alpha(g, h, c.alpha, MetricMode::exact_small);
    r.fh = d_alpha(f, h, c.alpha, MetricMode::exact_small);
    r.slack = r.fg + r.gh - r.fh;
    r.translated = d_alpha(f, translate_and_permute(f, rng, tag), c.alpha, MetricMode::exact_small);
    r.upper = d_alpha(f, g, c.alpha, MetricMode::upper);
    r.pass = r.fg == r.gf && r.slack >= -1e-12 && r.translated <= 1e-15 && r.upper >= r.fg - 1e-12;
  });
  int failed = 0;
  for (const auto& r : trials) failed += !r.pass;
  dir.write("selftest.csv", [&](std::ostream& o) {
    CsvRow(o) << "trial" << "d_fg" << "d_gf" << "d_gh" << "d_fh" << "triangle_slack" << "d_f_translated" << "upper_fg"
              << "pass";
    for (std::size_t t = 0; t < trials.size(); ++t) {
      const auto& r = trials[t];
      CsvRow(o) << static_cast<int>(t) << r.fg << r.gf << r.gh << r.fh << r.slack << r.translated << r.upper << r.pass;
    }
  });
  out.summary = {{"trials", c.trials}, {"failed", failed}};
  if (failed > 0) out.exit_code = kExitSelftestFailed;
  return finish(dir, std::move(out));
}

int execute(const std::string& subcommand, const json& raw, int jobs) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (jobs < 1) throw ConfigError("--jobs must be >= 1");
    const Schema& schema = schema_for(subcommand);
    json config = normalize_config(schema, raw);
    apply_seed_override(config);
    RunOutput out;
    if (subcommand == "polymer")
      out = run_polymer(PolymerConfig::from_json(config), jobs);
    else if (subcommand == "msk")
      out = run_msk_sweep(MskConfig::from_json(config), jobs);
    else if (subcommand == "pspm")
      out = run_pspm(PspmConfig::from_json(config), jobs);
    else if (subcommand == "fpp" || subcommand == "lpp")
      out = run_passage(PassageConfig::from_json(config, subcommand == "lpp"), jobs);
    else if (subcommand == "fluct")
      out = run_fluct(FluctConfig::from_json(config), jobs);
    else
      out = run_metric_selftest(SelftestConfig::from_json(config), jobs);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
    const json manifest = {{"subcommand", subcommand}, {"version", kVersion}, {"config", config},
                           {"files", out.files},       {"warnings", out.warnings}, {"summary", out.summary},
                           {"exit_code", out.exit_code}, {"wall_time_s", wall}};
    OutputDir dir(config.at("output").get<std::string>());
    dir.write("manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
    return out.exit_code;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: numerical non-convergence: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const IoError& e) {
    std::cerr << "error: I/O: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: I/O: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::logic_error& e) {
    // ParameterError, UnsupportedError, SizeError, DomainError
    std::cerr << "error: config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace quenchlab::cli
