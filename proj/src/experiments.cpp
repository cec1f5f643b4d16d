#include "so3sr/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <tuple>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "so3sr/certificate.hpp"
#include "so3sr/filter.hpp"
#include "so3sr/kernel.hpp"
#include "so3sr/recovery.hpp"
#include "so3sr/sampling.hpp"

namespace so3sr {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;

bool is_count(const std::string& s) {
  if (s.empty()) {
    return false;
  }
  for (char c : s) {
    if (c < '0' || c > '9') {
      return false;
    }
  }
  return true;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

void append_bound_row(std::string& csv, const BoundCheckRow& row) {
  csv += csv_quote(row.name) + ',';
  csv += row.applicable ? "1," : "0,";
  csv += fmt(row.worst_ratio) + ',' + fmt(row.measured) + ',' +
         fmt(row.bound) + ',' + csv_quote(row.where) + '\n';
}

ordered_json rotation_json(const Rotation& x) {
  const EulerZXZ e = euler_zxz_of(x);
  return ordered_json{{"alpha", e.alpha}, {"beta", e.beta}, {"gamma", e.gamma}};
}

ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j;
  j["subcommand"] = c.subcommand;
  j["s"] = c.s;
  j["N"] = c.N;
  j["nu"] = c.nu;
  j["b"] = c.b;
  j["M"] = c.M;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["patterns"] = c.patterns;
  j["near_mesh"] = c.near_mesh;
  j["far_samples"] = c.far_samples;
  j["margin"] = c.margin;
  j["eps"] = c.eps;
  j["resolution"] = c.resolution;
  j["lambda"] = c.lambda;
  j["iters"] = c.iters;
  return j;
}

void require(bool ok, const std::string& hypothesis) {
  if (!ok) {
    throw std::invalid_argument("invalid config: " + hypothesis);
  }
}

}  // namespace

ExperimentConfig with_defaults(ExperimentConfig config) {
  if (config.N == 0) {
    if (config.subcommand == "constants") {
      config.N = 20;
    } else if (config.subcommand == "verify-localization") {
      config.N = 64;
    } else if (config.subcommand == "recover") {
      config.N = 24;
    } else {
      config.N = 40;
    }
  }
  if (config.out.empty()) {
    if (config.subcommand == "constants") {
      config.out = "constants.csv";
    } else if (config.subcommand == "verify-localization") {
      config.out = "localization.csv";
    } else if (config.subcommand == "verify-offdiag") {
      config.out = "offdiag.csv";
    } else if (config.subcommand == "certificate") {
      config.out = "report.json";
    } else if (config.subcommand == "recover") {
      config.out = "result.json";
    }
  }
  return config;
}

void validate_config(const ExperimentConfig& c) {
  const bool known =
      c.subcommand == "constants" || c.subcommand == "verify-localization" ||
      c.subcommand == "verify-offdiag" || c.subcommand == "certificate" ||
      c.subcommand == "recover";
  require(known, "unknown subcommand '" + c.subcommand + "'");
  require(c.s >= 6 && c.s % 2 == 0,
          "filter order: s must be even and >= 6 (got s = " +
              std::to_string(c.s) + ")");

  if (c.subcommand == "recover") {
    require(c.N >= 4, "recovery: moment degree N >= 4 required");
    require(c.nu > 0.0, "recovery: separation scale nu must be positive");
    require(c.resolution > 0.0, "recovery: grid resolution must be positive");
    require(c.nu / (c.N + 1.0) > 2.0 * c.resolution,
            "recovery: clustering needs separation nu/(N+1) above twice the "
            "grid resolution");
    require(c.M >= 1, "recovery: at least one spike");
    require(c.iters >= 1, "l1 solver: at least one iteration");
    return;
  }

  require(c.N >= 2 * c.s,
          "kernel localization: N >= 2s required (got N = " +
              std::to_string(c.N) + ", s = " + std::to_string(c.s) + ")");

  if (c.subcommand == "constants") {
    return;
  }
  if (c.subcommand == "verify-localization") {
    require(c.samples >= 1, "localization suite: at least one sample");
    return;
  }
  if (c.subcommand == "verify-offdiag") {
    require(c.M >= 2, "off-diagonal sums: at least two support points");
    require(c.nu >= kPi,
            "off-diagonal sums: separation nu/(N+1) needs nu >= pi");
    require(c.eps >= 0.0 && c.eps <= 0.5,
            "off-diagonal sums: wobble eps in [0, 1/2]");
    require(c.samples >= 1, "off-diagonal sums: at least one probe");
    return;
  }
  // certificate
  require(c.s >= 8, "zero-derivative floor c_s: s >= 8 required");
  require(c.N >= 20, "certificate corollary: N >= 20 required");
  require(c.nu >= kPi, "interpolation: separation nu/(N+1) needs nu >= pi");
  require(c.b > 3.0, "invertibility cascade: b > 3 required");
  require(c.M >= 1 && c.M <= 20, "pattern sweep: M in 1..20");
  require(c.patterns == "all" || is_count(c.patterns),
          "patterns: 'all' or a positive count");
  require(c.margin > 0.0 && c.margin < 1.0, "far-field margin in (0, 1)");
  require(c.far_samples >= 0, "far samples must be nonnegative");
  const double mesh_cap = kPi / (8.0 * (c.N + 1.0));
  require(c.near_mesh == 0.0 || (c.near_mesh > 0.0 && c.near_mesh <= mesh_cap * (1.0 + 1e-9)),
          "near-ball mesh must resolve pi/(8(N+1))");
}

std::string constants_csv(const ExperimentConfig& config) {
  const FilterSpec spec = make_filter_spec(config.s, config.N);
  std::string csv = "name,value\n";
  for (const auto& [name, value] : constants_table(spec)) {
    csv += name + ',' + fmt(value) + '\n';
  }
  return csv;
}

std::pair<bool, std::string> localization_csv(const ExperimentConfig& config) {
  const ZonalKernel kernel(make_filter_spec(config.s, config.N));
  const LocalizationReport rep = verify_localization(
      kernel, config.samples, derive_seed(config.seed, "cli/localization"));
  std::string csv = "name,applicable,worst_ratio,measured,bound,where\n";
  for (const BoundCheckRow& row : rep.rows) {
    append_bound_row(csv, row);
  }
  return {rep.all_ok(), csv};
}

std::pair<bool, std::string> offdiag_csv(const ExperimentConfig& config) {
  const ZonalKernel kernel(make_filter_spec(config.s, config.N));
  Rng rng(derive_seed(config.seed, "cli/offdiag"));
  const SupportSet support =
      well_separated_support(config.M, config.nu / (config.N + 1.0), rng);
  // verify_offdiag_sums pins nu to the measured separation, so the probe
  // wobble allowance is eps * separation.
  const double reach = config.eps * support.separation();

  // Worst row per sum family over all probes.
  std::map<std::string, BoundCheckRow> worst;
  for (long p = 0; p < config.samples; ++p) {
    const std::size_t anchor = rng.uniform_index(support.size());
    Rotation x = support[anchor];
    if (config.eps > 0.0) {
      Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
      axis.normalize();
      x = x * rodrigues(axis, rng.uniform() * reach);
    }
    const OffdiagReport rep = verify_offdiag_sums(kernel, support, x, config.eps);
    for (const BoundCheckRow& row : rep.rows) {
      auto it = worst.find(row.name);
      if (it == worst.end() || row.worst_ratio > it->second.worst_ratio) {
        BoundCheckRow copy = row;
        copy.where = "probe " + std::to_string(p) + " anchor " +
                     std::to_string(rep.anchor) +
                     (copy.where.empty() ? "" : " " + copy.where);
        worst[row.name] = copy;
      }
    }
  }

  std::string csv = "name,applicable,worst_ratio,measured,bound,where\n";
  bool ok = true;
  for (const auto& [name, row] : worst) {
    append_bound_row(csv, row);
    ok = ok && row.worst_ratio <= 1.0;
  }
  return {ok, csv};
}

std::pair<bool, std::string> certificate_json(const ExperimentConfig& config,
                                              const std::string& timestamp) {
  const FilterSpec spec = make_filter_spec(config.s, config.N);
  const ZonalKernel kernel(spec);
  Rng rng(derive_seed(config.seed, "cli/certificate/support"));
  const SupportSet centers =
      well_separated_support(config.M, config.nu / (config.N + 1.0), rng);

  const InterpolationSystem system = assemble(centers, kernel);
  const SchurReport schur = check_schur_bounds(system, kernel, config.nu, config.b);

  const std::uint64_t limit =
      config.patterns == "all" ? (std::uint64_t{1} << config.M)
                               : std::stoull(config.patterns);
  const double mesh = config.near_mesh > 0.0
                          ? config.near_mesh
                          : kPi / (8.0 * (config.N + 1.0));
  const PatternSweep sweep = enumerate_sign_patterns(
      centers, spec, limit, mesh, config.far_samples, config.margin,
      derive_seed(config.seed, "cli/certificate/patterns"));

  const bool pass = schur.all_ok() && sweep.all_pass;

  ordered_json j;
  j["subcommand"] = "certificate";
  if (!timestamp.empty()) {
    j["timestamp"] = timestamp;
  }
  j["config"] = config_json(config);
  j["support"] = ordered_json{
      {"M", static_cast<int>(centers.size())},
      {"separation", centers.separation()},
      {"nu_effective", (config.N + 1.0) * centers.separation()}};
  ordered_json rows = ordered_json::array();
  for (const SchurRow& r : schur.rows) {
    rows.push_back(ordered_json{{"name", r.name},
                                {"measured", r.measured},
                                {"bound", r.bound},
                                {"ok", r.ok()}});
  }
  j["schur"] = ordered_json{{"nu", schur.nu},
                            {"b", schur.b},
                            {"c_s", schur.c_s},
                            {"rows", rows},
                            {"a1", schur.a1},
                            {"a2", schur.a2},
                            {"a3", schur.a3},
                            {"a4", schur.a4},
                            {"feasible", schur.feasible},
                            {"cascade_ok", schur.cascade_ok},
                            {"schur_inverse_bound", schur.schur_inverse_bound},
                            {"alpha0_bound", schur.alpha0_bound},
                            {"alpha_deriv_bound", schur.alpha_deriv_bound},
                            {"anchor_lower", schur.anchor_lower},
                            {"all_ok", schur.all_ok()}};
  ordered_json patterns = ordered_json::array();
  for (const PatternResult& r : sweep.results) {
    patterns.push_back(ordered_json{{"mask", r.mask},
                                    {"residual", r.residual},
                                    {"alpha0_inf", r.alpha0_inf},
                                    {"alpha_deriv_inf", r.alpha_deriv_inf},
                                    {"min_signed_q", r.min_signed_q},
                                    {"far_max_abs_q", r.far_max_abs_q},
                                    {"worst_band_excess", r.worst_band_excess},
                                    {"near_ok", r.near_ok},
                                    {"far_ok", r.far_ok},
                                    {"pass", r.pass}});
  }
  j["patterns"] = ordered_json{{"total", sweep.total_patterns},
                               {"evaluated", sweep.results.size()},
                               {"results", patterns},
                               {"all_pass", sweep.all_pass}};
  j["pass"] = pass;
  return {pass, j.dump(2) + "\n"};
}

std::pair<bool, std::string> recovery_json(const ExperimentConfig& config,
                                           const std::string& timestamp) {
  Rng rng(derive_seed(config.seed, "cli/recover/plant"));
  const SupportSet support =
      well_separated_support(config.M, config.nu / (config.N + 1.0), rng);
  PointMeasure truth;
  truth.coefficients.resize(config.M);
  for (int i = 0; i < config.M; ++i) {
    truth.centers.push_back(support[i]);
    truth.coefficients(i) = (i % 2 == 0) ? 1.0 : -2.0;
  }

  RecoveryConfig rc;
  rc.N = config.N;
  rc.resolution = config.resolution;
  rc.lambda = config.lambda;
  rc.iterations = config.iters;
  const RecoveryRun run = recover_and_score(truth, rc);

  const bool pass = run.scored.all_matched() &&
                    run.scored.max_geodesic_error() <= 1e-3 &&
                    run.scored.max_coefficient_error() <= 1e-2;

  ordered_json j;
  j["subcommand"] = "recover";
  if (!timestamp.empty()) {
    j["timestamp"] = timestamp;
  }
  j["config"] = config_json(config);
  ordered_json truth_j = ordered_json::array();
  for (int i = 0; i < truth.size(); ++i) {
    ordered_json spike = rotation_json(truth.centers[static_cast<std::size_t>(i)]);
    spike["coefficient"] = truth.coefficients(i);
    truth_j.push_back(spike);
  }
  j["truth"] = truth_j;
  ordered_json est_j = ordered_json::array();
  const PointMeasure& est = run.refine.measure;
  for (int i = 0; i < est.size(); ++i) {
    ordered_json spike = rotation_json(est.centers[static_cast<std::size_t>(i)]);
    spike["coefficient"] = est.coefficients(i);
    est_j.push_back(spike);
  }
  j["estimate"] = est_j;
  ordered_json matches = ordered_json::array();
  for (const SpikeMatch& m : run.scored.matches) {
    matches.push_back(ordered_json{{"truth_index", m.truth_index},
                                   {"estimate_index", m.estimate_index},
                                   {"geodesic_error", m.geodesic_error},
                                   {"coefficient_error", m.coefficient_error}});
  }
  j["matches"] = matches;
  j["unmatched_truth"] = run.scored.unmatched_truth;
  j["unmatched_estimate"] = run.scored.unmatched_estimate;
  j["l1"] = ordered_json{{"iterations", run.l1.iterations},
                         {"converged", run.l1.converged},
                         {"gap", run.l1.gap},
                         {"objective", run.l1.objective},
                         {"support_size", run.l1.support.size()}};
  j["refine"] = ordered_json{{"initial_residual", run.refine.initial_residual},
                             {"final_residual", run.refine.final_residual},
                             {"iterations", run.refine.iterations},
                             {"refined", run.refine.refined},
                             {"note", run.refine.note}};
  j["residual"] = run.scored.residual;
  j["max_geodesic_error"] = run.scored.max_geodesic_error();
  j["max_coefficient_error"] = run.scored.max_coefficient_error();
  j["pass"] = pass;
  return {pass, j.dump(2) + "\n"};
}

void write_atomic(const std::string& path, const std::string& payload) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open '" + tmp + "' for writing");
    }
    out << payload;
    out.flush();
    if (!out) {
      throw std::runtime_error("short write to '" + tmp + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

RunOutcome run_experiment(const ExperimentConfig& raw) {
  const ExperimentConfig config = with_defaults(raw);
  validate_config(config);

  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));

  bool ok = true;
  std::string payload;
  if (config.subcommand == "constants") {
    payload = constants_csv(config);
  } else if (config.subcommand == "verify-localization") {
    std::tie(ok, payload) = localization_csv(config);
  } else if (config.subcommand == "verify-offdiag") {
    std::tie(ok, payload) = offdiag_csv(config);
  } else if (config.subcommand == "certificate") {
    std::tie(ok, payload) = certificate_json(config, stamp);
  } else {
    std::tie(ok, payload) = recovery_json(config, stamp);
  }
  write_atomic(config.out, payload);
  return {ok ? 0 : 1, config.out};
}

}  // namespace so3sr
