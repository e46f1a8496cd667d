// Command-line front end: loads a declarative JSON config, runs the
// requested experiment, and writes deterministic CSV outputs.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 capacity route
// disagreement, 4 failed numerical check or sweep verdict.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mimocap/mimocap.hpp"

namespace {

using namespace mimocap;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> resolution;
  int jobs = 1;
};

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("MIMOCAP_OUT"); env && *env) return env;
  return "out";
}

RunConfig load_with_overrides(const CommonFlags& flags) {
  if (flags.config_path.empty()) throw ConfigError("missing required --config PATH");
  RunConfig cfg = load_run_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.resolution) {
    if (*flags.resolution < 1) throw ConfigError("--resolution must be >= 1");
    cfg.resolution = *flags.resolution;
    if (cfg.env_band > cfg.resolution - 1)
      throw ConfigError("env_band exceeds the exactness band of the overridden resolution");
  }
  return cfg;
}

struct Problem {
  QuadratureGrid grid;
  PatternSamples tx;
  PatternSamples rx;
  SpreadSamples spread;
  std::optional<ScattererSet> scatterers;
};

Problem assemble_problem(const RunConfig& cfg) {
  Problem p;
  p.grid = build_grid(cfg.resolution);
  const AntennaArray tx = make_array(cfg.tx_box, cfg.tx_count, cfg.scheme, cfg.k, cfg.polarization);
  const AntennaArray rx = make_array(cfg.rx_box, cfg.rx_count, cfg.scheme, cfg.k, cfg.polarization);
  p.tx = sample_pattern(tx, p.grid, Side::tx);
  p.rx = sample_pattern(rx, p.grid, Side::rx);
  if (cfg.smooth_env) {
    p.spread = sample_smooth(config_smooth(cfg), p.grid);
  } else {
    p.scatterers = config_scatterers(cfg);
    p.spread = sample_finite_rank(*p.scatterers, p.grid);
  }
  return p;
}

int cmd_capacity(const CommonFlags& flags) {
  const RunConfig cfg = load_with_overrides(flags);
  const std::string out = resolve_out_dir(flags.out_dir);
  const Problem p = assemble_problem(cfg);

  std::vector<CapacityResult> rows;
  for (Route route : cfg.routes) {
    if (route == Route::direct) {
      const ChannelMatrix h = build_H(p.tx, p.rx, p.spread);
      rows.push_back(capacity_direct(h, cfg.snr, cfg.tx_count, cfg.resolution));
    } else if (route == Route::fredholm) {
      const BlockOperator at = build_A(p.tx);
      const BlockOperator ar = build_A(p.rx);
      const BlockOperator k = build_K(at, ar, lift_kernel(p.spread));
      rows.push_back(capacity_fredholm(k, cfg.snr, cfg.tx_count, cfg.rx_count));
    } else {
      if (!p.scatterers)
        throw ConfigError("route 'finite_rank' requires environment = finite_rank");
      const BlockOperator at = build_A(p.tx);
      const BlockOperator ar = build_A(p.rx);
      const double a = double(cfg.rx_count) / double(cfg.tx_count);
      const FiniteRankData data =
          build_finite_rank_data(*p.scatterers, at, ar, cfg.tx_count, a, cfg.snr);
      rows.push_back(capacity_finite_rank(data, a, cfg.tx_count, cfg.snr));
    }
  }

  ensure_directory(out);
  write_text_atomic(out + "/capacity.csv", capacity_csv(rows));

  double worst = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const double a = rows[i].bits, b = rows[j].bits;
      const double rel = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
      worst = std::max(worst, rel);
    }
  }
  for (const auto& r : rows)
    std::printf("%s: %s bits\n", route_name(r.route), format_g17(r.bits).c_str());
  std::printf("max pairwise relative difference: %s\n", format_g17(worst).c_str());
  if (rows.size() > 1 && worst > 1e-6) {
    std::fprintf(stderr, "error: capacity routes disagree beyond 1e-6 relative\n");
    return 3;
  }
  return 0;
}

int cmd_sweep(const CommonFlags& flags) {
  const RunConfig cfg = load_with_overrides(flags);
  const std::string out = resolve_out_dir(flags.out_dir);
  const SweepSpec spec = to_sweep_spec(cfg);
  validate_sweep_spec(spec);
  const SweepResult res = run_sweep(spec);

  ensure_directory(out);
  write_text_atomic(out + "/sweep.csv", sweep_csv(res));
  write_text_atomic(out + "/plot.csv", plot_csv(res));
  write_text_atomic(out + "/verdict.txt", verdict_text(res));

  std::printf("%s", verdict_text(res).c_str());
  if (!res.verdict) {
    std::fprintf(stderr, "error: sweep verdict failed\n");
    return 4;
  }
  return 0;
}

struct CheckRow {
  std::string suite;
  std::string check;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

std::string checks_csv(const std::vector<CheckRow>& rows) {
  std::string out = "suite,check,value,bound,pass\n";
  for (const auto& r : rows) {
    out += r.suite + ',' + r.check + ',' + format_g17(r.value) + ',' + format_g17(r.bound) + ',' +
           (r.pass ? "1" : "0") + '\n';
  }
  return out;
}

Mat random_psd(Rng& rng, int n) {
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.cnormal();
  return hermitize(g * g.adjoint() / double(n));
}

Mat random_projector(Rng& rng, int n, int k) {
  Mat g(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) g(i, j) = rng.cnormal();
  Eigen::HouseholderQR<Mat> qr(g);
  const Mat q = qr.householderQ() * Mat::Identity(n, k);
  return hermitize(q * q.adjoint());
}

void verify_identity(std::uint64_t seed, int resolution, std::vector<CheckRow>& rows) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.resolution = resolution;
  cfg.tx_count = 3;
  cfg.rx_count = 4;
  cfg.tx_box.side = Vec3(0.4, 0.4, 0.4);
  cfg.rx_box.side = Vec3(0.45, 0.45, 0.45);
  cfg.env_rank = 3;
  cfg.env_band = 2;
  const Problem p = assemble_problem(cfg);

  const Mat b = build_B(build_H(p.tx, p.rx, p.spread));
  const BlockOperator at = build_A(p.tx);
  const BlockOperator ar = build_A(p.rx);
  const BlockOperator k = build_K(at, ar, lift_kernel(p.spread));

  const double norm_b = psd_eigenvalues(b, "verify: B").size() > 0
                            ? psd_eigenvalues(b, "verify: B")(0)
                            : 0.0;
  const double norm_k = operator_norm_psd(k, "verify: K");
  const double radius = 2.0 * std::max({norm_b, norm_k, 1e-6});

  std::vector<cplx> zs;
  for (int j = 0; j < 8; ++j) {
    const double th = 2.0 * kPi * double(j) / 8.0;
    zs.push_back(radius * cplx(std::cos(th), std::sin(th)));
  }
  const auto pairs = resolvent_trace_identity_many(b, k, zs);
  for (int j = 0; j < 8; ++j) {
    const auto& [lhs, rhs] = pairs[j];
    CheckRow row;
    row.suite = "identity";
    row.check = "z" + std::to_string(j);
    row.value = std::abs(lhs - rhs);
    row.bound = 1e-6 * (1.0 + std::abs(lhs));
    row.pass = row.value <= row.bound;
    rows.push_back(row);
  }
}

void verify_inequalities(std::uint64_t seed, std::vector<CheckRow>& rows) {
  Rng rng(seed);
  double min_contraction = 1e300, min_tangent = 1e300, min_berezin = 1e300;
  bool all_pass = true;
  const int trials = 60;
  for (int t = 0; t < trials; ++t) {
    const int n = int(rng.uniform_int(2, 40));
    const Mat t1 = random_psd(rng, n);
    const Mat t2 = random_psd(rng, n);
    const TraceIneqReport rep = check_trace_inequalities(t1, t2);
    min_contraction = std::min(min_contraction, rep.margin_contraction / rep.scale);
    min_tangent = std::min(min_tangent, rep.margin_tangent / rep.scale);
    all_pass = all_pass && rep.pass_contraction && rep.pass_tangent;

    const int kdim = int(rng.uniform_int(1, n - 1));
    const BerezinReport ber = berezin_split(random_psd(rng, n), random_projector(rng, n, kdim));
    min_berezin = std::min(min_berezin, ber.margin / ber.scale);
    all_pass = all_pass && ber.pass;
  }
  rows.push_back({"inequalities", "contraction_min_margin", min_contraction, -1e-10,
                  min_contraction >= -1e-10});
  rows.push_back(
      {"inequalities", "tangent_min_margin", min_tangent, -1e-10, min_tangent >= -1e-10});
  rows.push_back(
      {"inequalities", "berezin_min_margin", min_berezin, -1e-10, min_berezin >= -1e-10});
  if (!all_pass) rows.push_back({"inequalities", "all_trials", 0.0, 1.0, false});
}

void verify_weyl(std::vector<CheckRow>& rows) {
  for (double e : {100.0, 1000.0, 10000.0}) {
    const WeylCount wc = weyl_count(e);
    const double scalar_ratio = double(wc.scalar_dim) / e;
    const double six_ratio = double(wc.six_dim) / e;
    const bool strict = (e == 10000.0);
    rows.push_back({"weyl", "scalar_ratio_e" + std::to_string(int(e)), scalar_ratio,
                    strict ? 1.01 : 0.0,
                    strict ? (scalar_ratio >= 0.99 && scalar_ratio <= 1.01) : true});
    rows.push_back({"weyl", "six_ratio_e" + std::to_string(int(e)), six_ratio,
                    strict ? 6.06 : 0.0,
                    strict ? (six_ratio >= 5.94 && six_ratio <= 6.06) : true});
  }
}

int cmd_verify(const CommonFlags& flags, const std::string& suite) {
  if (suite != "inequalities" && suite != "identity" && suite != "weyl" && suite != "all")
    throw ConfigError("unknown verify suite '" + suite +
                      "' (expected inequalities | identity | weyl | all)");
  const std::uint64_t seed = flags.seed.value_or(1);
  const int resolution = flags.resolution.value_or(8);
  if (resolution < 1) throw ConfigError("--resolution must be >= 1");
  const std::string out = resolve_out_dir(flags.out_dir);

  std::vector<CheckRow> rows;
  if (suite == "identity" || suite == "all") verify_identity(seed, resolution, rows);
  if (suite == "inequalities" || suite == "all") verify_inequalities(seed, rows);
  if (suite == "weyl" || suite == "all") verify_weyl(rows);

  ensure_directory(out);
  write_text_atomic(out + "/verify.csv", checks_csv(rows));

  bool ok = true;
  for (const auto& r : rows) {
    std::printf("[%s] %-28s value=%s bound=%s %s\n", r.suite.c_str(), r.check.c_str(),
                format_g17(r.value).c_str(), format_g17(r.bound).c_str(),
                r.pass ? "pass" : "FAIL");
    ok = ok && r.pass;
  }
  if (!ok) {
    std::fprintf(stderr, "error: verify suite '%s' reported failures\n", suite.c_str());
    return 4;
  }
  return 0;
}

int cmd_weyl(const CommonFlags& flags, const std::vector<double>& band_limits) {
  const std::string out = resolve_out_dir(flags.out_dir);
  std::string csv = "e,l_max,scalar_dim,six_dim,scalar_ratio,six_ratio\n";
  for (double e : band_limits) {
    const WeylCount wc = weyl_count(e);
    csv += format_g17(e) + ',' + std::to_string(wc.l_max) + ',' + std::to_string(wc.scalar_dim) +
           ',' + std::to_string(wc.six_dim) + ',' + format_g17(double(wc.scalar_dim) / e) + ',' +
           format_g17(double(wc.six_dim) / e) + '\n';
  }
  ensure_directory(out);
  write_text_atomic(out + "/weyl.csv", csv);
  std::printf("%s", csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic MIMO channel capacity laboratory"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string suite = "all";
  std::vector<double> band_limits = {100.0, 1000.0, 10000.0};

  auto add_common = [&flags](CLI::App* cmd, bool with_config) {
    if (with_config) cmd->add_option("--config", flags.config_path, "path to a JSON config file");
    cmd->add_option("--out", flags.out_dir, "output directory (default: $MIMOCAP_OUT or ./out)");
    cmd->add_option("--seed", flags.seed, "override the random seed");
    cmd->add_option("--resolution", flags.resolution, "override the quadrature resolution");
    cmd->add_option("--jobs", flags.jobs, "worker thread cap")->check(CLI::PositiveNumber);
  };

  CLI::App* capacity = app.add_subcommand("capacity", "run the configured capacity routes");
  add_common(capacity, true);
  CLI::App* sweep = app.add_subcommand("sweep", "run the configured asymptotic regime sweep");
  add_common(sweep, true);
  CLI::App* verify = app.add_subcommand("verify", "run a property suite");
  add_common(verify, false);
  verify->add_option("--suite", suite, "inequalities | identity | weyl | all");
  CLI::App* weyl = app.add_subcommand("weyl", "enumerate truncation-space dimensions");
  add_common(weyl, false);
  weyl->add_option("--band-limit", band_limits, "band limit(s) E")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Eigen::setNbThreads(flags.jobs);

  try {
    if (capacity->parsed()) return cmd_capacity(flags);
    if (sweep->parsed()) return cmd_sweep(flags);
    if (verify->parsed()) return cmd_verify(flags, suite);
    if (weyl->parsed()) return cmd_weyl(flags, band_limits);
    return 2;
  } catch (const mimocap::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const mimocap::NumericalCheckError& e) {
    std::fprintf(stderr, "numerical check failed: %s\n", e.what());
    return 4;
  } catch (const mimocap::NotPsdError& e) {
    std::fprintf(stderr, "numerical check failed: %s\n", e.what());
    return 4;
  } catch (const mimocap::BandLimitError& e) {
    std::fprintf(stderr, "numerical check failed: %s\n", e.what());
    return 4;
  } catch (const mimocap::IllConditionedError& e) {
    std::fprintf(stderr, "numerical check failed: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
