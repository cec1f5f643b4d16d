#include "so3sr/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "so3sr/parallel.hpp"
#include "so3sr/sampling.hpp"

namespace so3sr {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kGridCap = 1000000;

// Row counts of the Euler net.  The alpha/gamma displacements act on the
// metric as ds^2 ~ (da sin b)^2 + (da cos b + dg)^2 + db^2, so a covering at
// `step` needs the alpha count scaled by sin(beta) while beta and gamma keep
// a flat spacing.  step = 0.92 * resolution leaves room for the sqrt(3)/2
// corner factor plus curvature at coarse resolutions.
struct NetShape {
  int nbeta = 0;
  int ngamma = 0;
  std::vector<int> nalpha;  // per beta row
  std::size_t size = 0;
};

NetShape net_shape(double resolution) {
  const double step = 0.92 * resolution;
  NetShape shape;
  shape.nbeta = std::max(1, static_cast<int>(std::ceil(kPi / step)));
  shape.ngamma = std::max(1, static_cast<int>(std::ceil(2.0 * kPi / step)));
  shape.nalpha.resize(shape.nbeta);
  for (int j = 0; j < shape.nbeta; ++j) {
    const double beta = (j + 0.5) * kPi / shape.nbeta;
    shape.nalpha[j] = std::max(
        1, static_cast<int>(std::ceil(2.0 * kPi * std::sin(beta) / step)));
    shape.size += static_cast<std::size_t>(shape.nalpha[j]) *
                  static_cast<std::size_t>(shape.ngamma);
  }
  return shape;
}

Eigen::VectorXcd delta_moments(const Rotation& x, int N) {
  const std::vector<Eigen::MatrixXcd> D = wigner_D_all(N, x);
  Eigen::VectorXcd col(MomentVector::count(N));
  Eigen::Index r = 0;
  for (int l = 0; l <= N; ++l) {
    for (int a = 0; a < 2 * l + 1; ++a) {
      for (int b = 0; b < 2 * l + 1; ++b) {
        col(r++) = D[static_cast<std::size_t>(l)](a, b);
      }
    }
  }
  return col;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t) {
  return v.array().sign() * (v.array().abs() - t).max(0.0);
}

}  // namespace

std::size_t grid_size_estimate(double resolution) {
  if (!(resolution > 0.0)) {
    throw std::domain_error("grid resolution must be positive");
  }
  return net_shape(resolution).size;
}

std::vector<Rotation> build_grid(double resolution) {
  if (!(resolution > 0.0)) {
    throw std::domain_error("grid resolution must be positive");
  }
  if (resolution < kPi / 256.0) {
    std::ostringstream msg;
    msg << "grid resolution " << resolution << " is below pi/256; the net "
        << "would need about " << grid_size_estimate(resolution) << " points";
    throw std::domain_error(msg.str());
  }
  const NetShape shape = net_shape(resolution);
  if (shape.size > kGridCap) {
    std::ostringstream msg;
    msg << "grid at resolution " << resolution << " would need " << shape.size
        << " points; supported up to " << kGridCap;
    throw std::length_error(msg.str());
  }
  std::vector<Rotation> grid;
  grid.reserve(shape.size);
  for (int j = 0; j < shape.nbeta; ++j) {
    const double beta = (j + 0.5) * kPi / shape.nbeta;
    for (int a = 0; a < shape.nalpha[j]; ++a) {
      const double alpha = (a + 0.5) * 2.0 * kPi / shape.nalpha[j];
      for (int g = 0; g < shape.ngamma; ++g) {
        const double gamma = (g + 0.5) * 2.0 * kPi / shape.ngamma;
        grid.push_back(from_euler_zxz(alpha, beta, gamma));
      }
    }
  }
  return grid;
}

double probe_covering_radius(const std::vector<Rotation>& grid, int probes,
                             std::uint64_t seed) {
  if (grid.empty()) {
    throw std::domain_error("covering probe needs a nonempty grid");
  }
  if (probes < 1) {
    throw std::domain_error("covering probe needs at least one sample");
  }
  Rng rng(seed);
  std::vector<Rotation> samples;
  samples.reserve(static_cast<std::size_t>(probes));
  for (int i = 0; i < probes; ++i) {
    samples.push_back(haar_sample(rng));
  }
  std::vector<double> gaps(static_cast<std::size_t>(probes), 0.0);
  parallel_for(probes, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const Rotation& g : grid) {
        best = std::min(best, geodesic_distance(samples[static_cast<std::size_t>(i)], g));
      }
      gaps[static_cast<std::size_t>(i)] = best;
    }
  });
  return *std::max_element(gaps.begin(), gaps.end());
}

MomentOperator MomentOperator::build(const std::vector<Rotation>& grid,
                                     int N) {
  if (N < 0) {
    throw std::domain_error("moment degree must be nonnegative");
  }
  if (grid.empty()) {
    throw std::domain_error("moment operator needs a nonempty grid");
  }
  MomentOperator op;
  op.N = N;
  op.grid = grid;
  op.design.resize(MomentVector::count(N),
                   static_cast<Eigen::Index>(grid.size()));
  parallel_for(static_cast<std::int64_t>(grid.size()),
               [&](std::int64_t lo, std::int64_t hi) {
                 for (std::int64_t j = lo; j < hi; ++j) {
                   op.design.col(j) =
                       delta_moments(grid[static_cast<std::size_t>(j)], N);
                 }
               });
  return op;
}

Eigen::MatrixXd gram_matrix(const MomentOperator& op) {
  const Eigen::Index G = op.columns();
  Eigen::MatrixXd K(G, G);
  parallel_for(G, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      for (std::int64_t j = 0; j <= i; ++j) {
        const double w = geodesic_distance(op.grid[static_cast<std::size_t>(i)],
                                           op.grid[static_cast<std::size_t>(j)]);
        double s = 0.0;
        for (int l = 0; l <= op.N; ++l) {
          s += addition_kernel(l, w);
        }
        K(i, j) = s;
        K(j, i) = s;
      }
    }
  });
  return K;
}

double l1_objective(const Eigen::VectorXd& c, const MomentOperator& op,
                    const MomentVector& b, double lambda) {
  if (c.size() != op.columns() || b.degree() != op.N) {
    throw std::domain_error("l1 objective: dimension mismatch");
  }
  const double gap = (op.design * c - b.raw()).norm();
  return 0.5 * gap * gap + lambda * c.lpNorm<1>();
}

L1Result l1_recover(const MomentVector& b, const MomentOperator& op,
                    double lambda, int iters) {
  if (b.degree() != op.N) {
    throw std::domain_error("l1 solve: moment degree does not match operator");
  }
  if (!(lambda > 0.0)) {
    throw std::domain_error("l1 solve: lambda must be positive");
  }
  if (iters < 1) {
    throw std::domain_error("l1 solve: need at least one iteration");
  }
  const Eigen::Index G = op.columns();
  const double rho = 1.0;

  const Eigen::MatrixXd K = gram_matrix(op);
  const Eigen::VectorXd h = (op.design.adjoint() * b.raw()).real();
  const double b2 = b.raw().squaredNorm();

  Eigen::MatrixXd Kr = K;
  Kr.diagonal().array() += rho;
  const Eigen::LLT<Eigen::MatrixXd> llt(Kr);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("l1 solve: Gram factorization failed");
  }

  // Composite objective through the Gram identity; the max(0, .) guards the
  // cancellation b2 - 2 z.h + z.K.z ~ 0 near an exact fit.
  const auto objective_of = [&](const Eigen::VectorXd& z) {
    const double gap2 = std::max(0.0, z.dot(K * z) - 2.0 * z.dot(h) + b2);
    return 0.5 * gap2 + lambda * z.lpNorm<1>();
  };

  Eigen::VectorXd c = Eigen::VectorXd::Zero(G);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(G);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(G);

  L1Result out;
  Eigen::VectorXd best = z;
  double best_obj = objective_of(z);
  const double eps = 1e-8;
  const double root_g = std::sqrt(static_cast<double>(G));
  for (int it = 1; it <= iters; ++it) {
    c = llt.solve(h + rho * (z - u));
    const Eigen::VectorXd z_prev = z;
    z = soft_threshold(c + u, lambda / rho);
    u += c - z;
    out.iterations = it;

    const double obj = objective_of(z);
    if (obj < best_obj) {
      best_obj = obj;
      best = z;
    }
    const double r_norm = (c - z).norm();
    const double s_norm = rho * (z - z_prev).norm();
    const double eps_pri =
        root_g * eps + eps * std::max(c.norm(), z.norm());
    const double eps_dual = root_g * eps + eps * (rho * u.norm());
    if (r_norm <= eps_pri && s_norm <= eps_dual) {
      out.converged = true;
      break;
    }
  }

  out.coefficients = best;
  out.l1_norm = best.lpNorm<1>();
  out.gap = (op.design * best - b.raw()).norm();
  out.objective = 0.5 * out.gap * out.gap + lambda * out.l1_norm;
  const double peak = best.cwiseAbs().maxCoeff();
  if (peak > 0.0) {
    for (Eigen::Index j = 0; j < G; ++j) {
      if (std::abs(best(j)) > 0.05 * peak) {
        out.support.push_back(j);
      }
    }
  }
  return out;
}

PointMeasure cluster_support(const L1Result& sol,
                             const std::vector<Rotation>& grid,
                             double radius) {
  if (!(radius > 0.0)) {
    throw std::domain_error("cluster radius must be positive");
  }
  std::vector<Eigen::Index> order = sol.support;
  for (Eigen::Index j : order) {
    if (j < 0 || j >= static_cast<Eigen::Index>(grid.size())) {
      throw std::domain_error("support index outside the grid");
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return std::abs(sol.coefficients(a)) >
                            std::abs(sol.coefficients(b));
                   });
  std::vector<Eigen::Index> reps;
  std::vector<double> sums;
  for (Eigen::Index j : order) {
    bool absorbed = false;
    for (std::size_t r = 0; r < reps.size(); ++r) {
      if (geodesic_distance(grid[static_cast<std::size_t>(j)],
                            grid[static_cast<std::size_t>(reps[r])]) <=
          radius) {
        sums[r] += sol.coefficients(j);
        absorbed = true;
        break;
      }
    }
    if (!absorbed) {
      reps.push_back(j);
      sums.push_back(sol.coefficients(j));
    }
  }
  PointMeasure mu;
  mu.coefficients.resize(static_cast<Eigen::Index>(reps.size()));
  for (std::size_t r = 0; r < reps.size(); ++r) {
    mu.centers.push_back(grid[static_cast<std::size_t>(reps[r])]);
    mu.coefficients(static_cast<Eigen::Index>(r)) = sums[r];
  }
  return mu;
}

double moment_residual(const PointMeasure& mu, const MomentVector& b) {
  return (moments(mu, b.degree()).raw() - b.raw()).norm();
}

namespace {

// Residual of mu against the head of b truncated at degree L, stacked
// real-over-imaginary.
Eigen::VectorXd stacked_residual(const PointMeasure& mu,
                                 const Eigen::VectorXcd& b_head, int L) {
  const Eigen::VectorXcd r = moments(mu, L).raw() - b_head;
  Eigen::VectorXd out(2 * r.size());
  out.head(r.size()) = r.real();
  out.tail(r.size()) = r.imag();
  return out;
}

PointMeasure step_measure(const PointMeasure& mu, const Eigen::VectorXd& p,
                          double scale) {
  const int M = mu.size();
  PointMeasure next = mu;
  for (int j = 0; j < M; ++j) {
    Eigen::Vector3d t(p(3 * j), p(3 * j + 1), p(3 * j + 2));
    t *= scale;
    const double w = t.norm();
    if (w > 0.0) {
      next.centers[static_cast<std::size_t>(j)] =
          mu.centers[static_cast<std::size_t>(j)] * rodrigues(t / w, w);
    }
    next.coefficients(j) += scale * p(3 * M + j);
  }
  return next;
}

}  // namespace

RefineResult local_refine(const PointMeasure& coarse, const MomentVector& b,
                          int N) {
  if (b.degree() != N) {
    throw std::domain_error("refine: moment degree does not match N");
  }
  coarse.validate();
  RefineResult out;
  out.measure = coarse;
  out.initial_residual = moment_residual(coarse, b);
  out.final_residual = out.initial_residual;
  const int M = coarse.size();
  if (M == 0) {
    out.note = "empty measure; nothing to refine";
    return out;
  }

  // Degree schedule: coarse stages have basins ~ pi/(L+1), wide enough to
  // capture grid-scale starting errors.
  std::vector<int> stages;
  for (int L = std::max(2, N / 4); L < N; L *= 2) {
    stages.push_back(L);
  }
  stages.push_back(N);

  const double fd = 1e-6;
  PointMeasure mu = coarse;
  for (int L : stages) {
    const Eigen::VectorXcd b_head = b.raw().head(MomentVector::count(L));
    Eigen::VectorXd r = stacked_residual(mu, b_head, L);
    const double floor = 1e-12 * (1.0 + b_head.norm());
    for (int step = 0; step < 40; ++step) {
      if (r.norm() < floor) {
        break;
      }
      Eigen::MatrixXd J(r.size(), 4 * M);
      for (int j = 0; j < M; ++j) {
        const Rotation& x = mu.centers[static_cast<std::size_t>(j)];
        for (int i = 1; i <= 3; ++i) {
          const Eigen::Vector3d axis = Eigen::Vector3d::Unit(i - 1);
          const Rotation xp = x * rodrigues(axis, fd);
          const Rotation xm = x * rodrigues(axis, -fd);
          const Eigen::VectorXcd d =
              (delta_moments(xp, L) - delta_moments(xm, L)) *
              (mu.coefficients(j) / (2.0 * fd));
          J.col(3 * j + (i - 1)).head(d.size()) = d.real();
          J.col(3 * j + (i - 1)).tail(d.size()) = d.imag();
        }
        const Eigen::VectorXcd col = delta_moments(x, L);
        J.col(3 * M + j).head(col.size()) = col.real();
        J.col(3 * M + j).tail(col.size()) = col.imag();
      }
      // Merged spikes leave the coefficient-difference direction expressible
      // through the rotation columns: the pivot ratio drops with the spike
      // distance, while well-separated supports stay near 1e-2.
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
      qr.setThreshold(1e-6);
      if (qr.rank() < 4 * M) {
        out.measure = coarse;
        out.final_residual = out.initial_residual;
        out.refined = false;
        out.note = "rank-deficient Jacobian; refinement skipped";
        return out;
      }
      const Eigen::VectorXd p = qr.solve(-r);
      double scale = 1.0;
      bool accepted = false;
      for (int half = 0; half < 30; ++half) {
        const PointMeasure trial = step_measure(mu, p, scale);
        const Eigen::VectorXd r_trial = stacked_residual(trial, b_head, L);
        if (r_trial.norm() < r.norm()) {
          mu = trial;
          r = r_trial;
          accepted = true;
          ++out.iterations;
          break;
        }
        scale *= 0.5;
      }
      if (!accepted) {
        break;  // step rejected; move on to the next stage
      }
      if (scale * p.lpNorm<Eigen::Infinity>() < 1e-12) {
        break;
      }
    }
  }

  const double final_res = moment_residual(mu, b);
  if (final_res <= out.initial_residual) {
    out.measure = mu;
    out.final_residual = final_res;
    out.refined = true;
  } else {
    out.note = "no residual improvement; keeping the input";
  }
  return out;
}

double RecoveryResult::max_geodesic_error() const {
  double m = 0.0;
  for (const SpikeMatch& s : matches) {
    m = std::max(m, s.geodesic_error);
  }
  return m;
}

double RecoveryResult::max_coefficient_error() const {
  double m = 0.0;
  for (const SpikeMatch& s : matches) {
    m = std::max(m, s.coefficient_error);
  }
  return m;
}

RecoveryResult score(const PointMeasure& truth, const PointMeasure& estimate,
                     double match_radius) {
  if (!(match_radius > 0.0)) {
    throw std::domain_error("match radius must be positive");
  }
  truth.validate();
  estimate.validate();
  RecoveryResult out;
  out.estimate = estimate;

  std::vector<std::tuple<double, int, int>> pairs;
  for (int i = 0; i < truth.size(); ++i) {
    for (int j = 0; j < estimate.size(); ++j) {
      const double d = geodesic_distance(truth.centers[static_cast<std::size_t>(i)],
                                         estimate.centers[static_cast<std::size_t>(j)]);
      if (d <= match_radius) {
        pairs.emplace_back(d, i, j);
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> truth_used(static_cast<std::size_t>(truth.size()), false);
  std::vector<bool> est_used(static_cast<std::size_t>(estimate.size()), false);
  for (const auto& [d, i, j] : pairs) {
    if (truth_used[static_cast<std::size_t>(i)] ||
        est_used[static_cast<std::size_t>(j)]) {
      continue;
    }
    truth_used[static_cast<std::size_t>(i)] = true;
    est_used[static_cast<std::size_t>(j)] = true;
    SpikeMatch m;
    m.truth_index = i;
    m.estimate_index = j;
    m.geodesic_error = d;
    m.coefficient_error =
        std::abs(truth.coefficients(i) - estimate.coefficients(j));
    out.matches.push_back(m);
  }
  std::sort(out.matches.begin(), out.matches.end(),
            [](const SpikeMatch& a, const SpikeMatch& b) {
              return a.truth_index < b.truth_index;
            });
  for (int i = 0; i < truth.size(); ++i) {
    if (!truth_used[static_cast<std::size_t>(i)]) {
      out.unmatched_truth.push_back(i);
    }
  }
  for (int j = 0; j < estimate.size(); ++j) {
    if (!est_used[static_cast<std::size_t>(j)]) {
      out.unmatched_estimate.push_back(j);
    }
  }
  return out;
}

namespace {

PointMeasure keep_spikes(const PointMeasure& mu,
                         const std::vector<int>& keep) {
  PointMeasure out;
  out.coefficients.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.centers.push_back(mu.centers[static_cast<std::size_t>(keep[r])]);
    out.coefficients(static_cast<Eigen::Index>(r)) = mu.coefficients(keep[r]);
  }
  return out;
}

PointMeasure drop_weak_spikes(const PointMeasure& mu, double rel_floor) {
  if (mu.size() == 0 || !(rel_floor > 0.0)) {
    return mu;
  }
  const double cut = rel_floor * mu.coefficients.cwiseAbs().maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < mu.size(); ++i) {
    if (std::abs(mu.coefficients(i)) >= cut) {
      keep.push_back(i);
    }
  }
  return keep_spikes(mu, keep);
}

PointMeasure drop_weakest_spike(const PointMeasure& mu) {
  int weakest = 0;
  for (int i = 1; i < mu.size(); ++i) {
    if (std::abs(mu.coefficients(i)) < std::abs(mu.coefficients(weakest))) {
      weakest = i;
    }
  }
  std::vector<int> keep;
  for (int i = 0; i < mu.size(); ++i) {
    if (i != weakest) {
      keep.push_back(i);
    }
  }
  return keep_spikes(mu, keep);
}

}  // namespace

RecoveryRun recover_and_score(const PointMeasure& truth,
                              const RecoveryConfig& config) {
  if (config.N < 1) {
    throw std::domain_error("recovery needs degree N >= 1");
  }
  truth.validate();
  RecoveryRun run;
  run.config = config;

  const MomentVector b = moments(truth, config.N);
  const std::vector<Rotation> grid = build_grid(config.resolution);
  const int L =
      config.l1_degree > 0
          ? std::min(config.l1_degree, config.N)
          : std::min(config.N,
                     static_cast<int>(std::ceil(4.0 / config.resolution)));
  const double lambda = config.lambda > 0.0
                            ? config.lambda
                            : 0.12 * (L + 1.0) * (L + 1.0);
  const MomentOperator op = MomentOperator::build(grid, L);
  MomentVector b_low(L);
  b_low.raw() = b.raw().head(MomentVector::count(L));

  run.l1 = l1_recover(b_low, op, lambda, config.iterations);
  run.coarse = drop_weak_spikes(
      cluster_support(run.l1, grid, config.resolution), config.cluster_floor);

  // Backward elimination around the Gauss-Newton stage: a spurious cluster
  // can trap the refinement in a stationary point (or, when the fit succeeds
  // anyway, survive as a near-zero spike).  While the fit is poor, drop the
  // weakest spike and retry; once it is good, drop clearly-null spikes and
  // refit without them.
  const double fit_tol = 1e-8 * std::max(1.0, b.raw().norm());
  run.refine = local_refine(run.coarse, b, config.N);
  int rounds = 0;
  while (run.refine.final_residual > fit_tol && run.refine.measure.size() > 1 &&
         rounds < 8) {
    const PointMeasure& cur = run.refine.measure;
    PointMeasure pruned = drop_weak_spikes(cur, config.cluster_floor);
    if (pruned.size() == cur.size()) {
      pruned = drop_weakest_spike(cur);
    }
    run.refine = local_refine(pruned, b, config.N);
    ++rounds;
  }
  if (run.refine.final_residual <= fit_tol) {
    const PointMeasure pruned = drop_weak_spikes(run.refine.measure, 1e-3);
    if (pruned.size() > 0 && pruned.size() < run.refine.measure.size()) {
      const RefineResult again = local_refine(pruned, b, config.N);
      if (again.final_residual <= fit_tol) {
        run.refine = again;
      }
    }
  }

  const double radius =
      config.match_radius > 0.0 ? config.match_radius : config.resolution;
  run.scored = score(truth, run.refine.measure, radius);
  run.scored.residual = run.refine.final_residual;
  run.scored.iterations = run.l1.iterations;
  run.scored.converged = run.l1.converged;
  return run;
}

}  // namespace so3sr
