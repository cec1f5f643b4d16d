#include "so3sr/certificate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "so3sr/parallel.hpp"
#include "so3sr/sampling.hpp"

namespace so3sr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Row/column index pairs of the six independent Hessian entries.
constexpr int kHessRC[6][2] = {{1, 1}, {2, 2}, {3, 3}, {1, 2}, {1, 3}, {2, 3}};

void require_signs(const std::vector<int>& signs, std::size_t M) {
  if (signs.size() != M)
    throw std::invalid_argument("sign pattern must have one entry per center");
  for (int u : signs)
    if (u != 1 && u != -1)
      throw std::invalid_argument("sign pattern entries must be +-1");
}

Eigen::VectorXd sign_rhs(const std::vector<int>& signs) {
  const auto M = static_cast<Eigen::Index>(signs.size());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(4 * M);
  for (Eigen::Index i = 0; i < M; ++i)
    rhs(i) = static_cast<double>(signs[static_cast<std::size_t>(i)]);
  return rhs;
}

struct LuSolve {
  Eigen::VectorXd alpha;
  double residual = 0.0;
};

// Solve with one step of iterative refinement; the caller supplies the
// factorization so pattern sweeps reuse it.
LuSolve refined_solve(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                      const Eigen::MatrixXd& K, const Eigen::VectorXd& rhs,
                      double rcond) {
  LuSolve out;
  out.alpha = lu.solve(rhs);
  const double tol = 1e-10 * rhs.lpNorm<Eigen::Infinity>();
  if (out.alpha.allFinite()) {
    Eigen::VectorXd r = rhs - K * out.alpha;
    out.residual = r.lpNorm<Eigen::Infinity>();
    if (out.residual > tol) {
      out.alpha += lu.solve(r);
      r = rhs - K * out.alpha;
      out.residual = r.lpNorm<Eigen::Infinity>();
    }
  } else {
    out.residual = kInf;
  }
  if (!(out.residual <= tol)) {
    std::ostringstream msg;
    msg << "certificate solve: residual " << out.residual
        << " exceeds 1e-10 ||rhs||; reciprocal condition estimate " << rcond;
    throw std::runtime_error(msg.str());
  }
  return out;
}

std::vector<Eigen::Vector3d> fibonacci_directions(int n) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(static_cast<std::size_t>(n));
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * k;
    out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return out;
}

// Precomputed evaluation weights: with the coefficient layout
// (alpha_0; alpha_1; alpha_2; alpha_3), q(x) = w(x) . alpha and each Hessian
// entry is h_p(x) . alpha, so a sign-pattern sweep reduces to matrix-vector
// products against one cached sample set.
class Verifier {
 public:
  Verifier(const ZonalKernel& kernel, const SupportSet& centers,
           double near_mesh, long far_samples, std::uint64_t seed)
      : kernel_(kernel),
        centers_(centers),
        mesh_(near_mesh),
        scale_(kernel.degree() + 1.0),
        radius_(M_PI / (2.0 * (kernel.degree() + 1.0))),
        M_(static_cast<int>(centers.size())) {
    build_near();
    build_far(far_samples, seed);
  }

  VerificationReport run(const Eigen::VectorXd& alpha,
                         const std::vector<int>& signs, double margin) const;

 private:
  void fill_q_column(const Rotation& x, Eigen::Ref<Eigen::VectorXd> w,
                     double* min_omega) const {
    double best = kInf;
    for (int j = 0; j < M_; ++j) {
      const KernelDerivatives d =
          kernel_.derivatives(x, centers_[static_cast<std::size_t>(j)]);
      best = std::min(best, d.jet.omega);
      w(j) = d.value;
      for (int k = 1; k <= 3; ++k) w(k * M_ + j) = d.grad_y(k - 1);
    }
    if (min_omega) *min_omega = best;
  }

  void build_near() {
    const int levels = static_cast<int>(std::ceil(radius_ / mesh_));
    const int ndir =
        static_cast<int>(std::ceil(std::pow(3.6 * radius_ / mesh_, 2)));
    const auto dirs = fibonacci_directions(ndir);
    std::vector<Rotation> xs;
    for (int m = 0; m < M_; ++m) {
      const Rotation& c = centers_[static_cast<std::size_t>(m)];
      xs.push_back(c);
      near_anchor_.push_back(m);
      for (int k = 1; k <= levels; ++k) {
        const double r = radius_ * k / levels;
        for (const auto& d : dirs) {
          xs.push_back(c * rodrigues(d, r));
          near_anchor_.push_back(m);
        }
      }
    }
    const auto n = static_cast<Eigen::Index>(xs.size());
    near_w_.resize(4 * M_, n);
    for (auto& h : near_h_) h.resize(4 * M_, n);
    parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        const Rotation& x = xs[static_cast<std::size_t>(i)];
        for (int j = 0; j < M_; ++j) {
          const KernelDerivatives d =
              kernel_.derivatives(x, centers_[static_cast<std::size_t>(j)]);
          near_w_(j, i) = d.value;
          for (int k = 1; k <= 3; ++k)
            near_w_(k * M_ + j, i) = d.grad_y(k - 1);
          for (int p = 0; p < 6; ++p) {
            const int r = kHessRC[p][0], c = kHessRC[p][1];
            near_h_[static_cast<std::size_t>(p)](j, i) = d.hessian_entry(r, c);
            for (int k = 1; k <= 3; ++k)
              near_h_[static_cast<std::size_t>(p)](k * M_ + j, i) =
                  d.hessian_grad_entry(r, c, k);
          }
        }
      }
    });
  }

  void build_far(long far_samples, std::uint64_t seed) {
    std::vector<Rotation> xs;
    // Deterministic annulus sweep around every center: scaled-distance steps
    // of pi/8 along 64 directions, out to t = 36 (or the injectivity radius).
    const auto dirs = fibonacci_directions(64);
    const double cap = scale_ * M_PI;
    for (int m = 0; m < M_; ++m) {
      const Rotation& c = centers_[static_cast<std::size_t>(m)];
      for (const BandCheck& band : band_table()) {
        const double lo = band.t_lo;
        const double hi = std::min(std::isfinite(band.t_hi) ? band.t_hi : 36.0,
                                   cap);
        if (hi <= lo) continue;
        const int nt = static_cast<int>(std::ceil((hi - lo) / (M_PI / 8.0)));
        for (int i = 0; i <= nt; ++i) {
          const double t = lo + (hi - lo) * i / nt;
          for (const auto& d : dirs) xs.push_back(c * rodrigues(d, t / scale_));
        }
      }
    }
    Rng rng = derive_stream(seed, "certificate/far-haar");
    for (long i = 0; i < far_samples; ++i) xs.push_back(haar_sample(rng));

    const auto n = static_cast<Eigen::Index>(xs.size());
    far_w_.resize(4 * M_, n);
    far_t_.assign(static_cast<std::size_t>(n), 0.0);
    far_band_.assign(static_cast<std::size_t>(n), -1);
    const auto bands = band_table();
    parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        double omega = kInf;
        fill_q_column(xs[static_cast<std::size_t>(i)], far_w_.col(i), &omega);
        const double t = scale_ * omega;
        far_t_[static_cast<std::size_t>(i)] = t;
        // Samples that land inside a near ball belong to the ball checks.
        if (t < M_PI / 2.0) continue;
        for (int b = 0; b < 4; ++b)
          if (t >= bands[static_cast<std::size_t>(b)].t_lo &&
              t < bands[static_cast<std::size_t>(b)].t_hi) {
            far_band_[static_cast<std::size_t>(i)] = b;
            break;
          }
      }
    });
  }

  const ZonalKernel& kernel_;
  const SupportSet& centers_;
  double mesh_ = 0.0;
  double scale_ = 0.0;
  double radius_ = 0.0;
  int M_ = 0;
  std::vector<int> near_anchor_;
  Eigen::MatrixXd near_w_;
  std::array<Eigen::MatrixXd, 6> near_h_;
  std::vector<double> far_t_;
  std::vector<int> far_band_;
  Eigen::MatrixXd far_w_;
};

VerificationReport Verifier::run(const Eigen::VectorXd& alpha,
                                 const std::vector<int>& signs,
                                 double margin) const {
  VerificationReport rep;
  rep.near_radius = radius_;
  rep.near_mesh = mesh_;
  rep.margin = margin;
  rep.reference_diag = -0.041 * scale_ * scale_;
  rep.reference_offdiag = 0.01 * scale_ * scale_;
  rep.bands = band_table();

  rep.near.resize(static_cast<std::size_t>(M_));
  for (int m = 0; m < M_; ++m) {
    auto& nc = rep.near[static_cast<std::size_t>(m)];
    nc.center = m;
    nc.sign = signs[static_cast<std::size_t>(m)];
    nc.min_signed_q = kInf;
    nc.worst_diag = -kInf;
    nc.worst_gersh_margin = kInf;
    nc.scaled_diag = -kInf;
    nc.scaled_offdiag = 0.0;
  }

  const Eigen::VectorXd qn = near_w_.transpose() * alpha;
  std::array<Eigen::VectorXd, 6> h;
  for (int p = 0; p < 6; ++p)
    h[static_cast<std::size_t>(p)] =
        near_h_[static_cast<std::size_t>(p)].transpose() * alpha;

  for (Eigen::Index i = 0; i < qn.size(); ++i) {
    const int m = near_anchor_[static_cast<std::size_t>(i)];
    auto& nc = rep.near[static_cast<std::size_t>(m)];
    const double u = nc.sign;
    ++nc.samples;
    nc.min_signed_q = std::min(nc.min_signed_q, u * qn(i));
    const double d1 = h[0](i), d2 = h[1](i), d3 = h[2](i);
    const double o12 = h[3](i), o13 = h[4](i), o23 = h[5](i);
    const double diag[3] = {d1, d2, d3};
    const double offsum[3] = {std::abs(o12) + std::abs(o13),
                              std::abs(o12) + std::abs(o23),
                              std::abs(o13) + std::abs(o23)};
    for (int r = 0; r < 3; ++r) {
      nc.worst_diag = std::max(nc.worst_diag, u * diag[r]);
      nc.worst_gersh_margin =
          std::min(nc.worst_gersh_margin, std::abs(diag[r]) - offsum[r]);
      nc.scaled_diag =
          std::max(nc.scaled_diag, u * diag[r] / (scale_ * scale_));
    }
    const double omax =
        std::max({std::abs(o12), std::abs(o13), std::abs(o23)});
    nc.scaled_offdiag = std::max(nc.scaled_offdiag, omax / (scale_ * scale_));
  }
  rep.near_ok = true;
  for (auto& nc : rep.near) {
    nc.hessian_ok = nc.worst_diag < 0.0 && nc.worst_gersh_margin > 0.0;
    nc.q_ok = nc.min_signed_q > 0.9;
    rep.near_ok = rep.near_ok && nc.ok();
  }

  const Eigen::VectorXd qf = far_w_.transpose() * alpha;
  rep.far_max_abs_q = 0.0;
  for (Eigen::Index i = 0; i < qf.size(); ++i) {
    const int b = far_band_[static_cast<std::size_t>(i)];
    if (b < 0) continue;
    const double a = std::abs(qf(i));
    auto& band = rep.bands[static_cast<std::size_t>(b)];
    band.measured = std::max(band.measured, a);
    ++band.samples;
    ++rep.far_samples;
    if (a > rep.far_max_abs_q) {
      rep.far_max_abs_q = a;
      rep.far_argmax_t = far_t_[static_cast<std::size_t>(i)];
    }
  }
  rep.far_ok = rep.far_max_abs_q <= 1.0 - margin;
  rep.pass = rep.near_ok && rep.far_ok;
  return rep;
}

}  // namespace

Eigen::Block<const Eigen::MatrixXd> InterpolationSystem::block(int r,
                                                               int c) const {
  const int M = block_size();
  return matrix.block(r * M, c * M, M, M);
}

InterpolationSystem assemble(const SupportSet& centers,
                             const ZonalKernel& kernel) {
  const auto M = static_cast<Eigen::Index>(centers.size());
  if (M == 0) throw std::invalid_argument("assemble: no centers");
  const double min_sep = M_PI / (kernel.degree() + 1.0);
  if (centers.separation() < min_sep)
    throw std::domain_error(
        "assemble: support separation below pi/(N+1); the interpolation "
        "problem needs centers at least one kernel width apart");

  InterpolationSystem sys;
  sys.centers = centers;
  sys.matrix.resize(4 * M, 4 * M);
  const double mixed_diag = -kernel.st2_zero();
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = 0; j < M; ++j) {
      if (i == j) {
        // Exact coincidence limits keep the structural identities sharp.
        sys.matrix(i, i) = 1.0;
        for (int k = 1; k <= 3; ++k) {
          sys.matrix(i, k * M + i) = 0.0;
          sys.matrix(k * M + i, i) = 0.0;
          for (int n = 1; n <= 3; ++n)
            sys.matrix(n * M + i, k * M + i) = (n == k) ? mixed_diag : 0.0;
        }
        continue;
      }
      const KernelDerivatives d =
          kernel.derivatives(centers[static_cast<std::size_t>(i)],
                             centers[static_cast<std::size_t>(j)]);
      sys.matrix(i, j) = d.value;
      for (int k = 1; k <= 3; ++k) {
        sys.matrix(i, k * M + j) = d.grad_y(k - 1);
        sys.matrix(k * M + i, j) = d.grad_x(k - 1);
        for (int n = 1; n <= 3; ++n)
          sys.matrix(n * M + i, k * M + j) = d.mixed_xy(n - 1, k - 1);
      }
    }
  }
  return sys;
}

QData Certificate::qdata() const { return QData{centers.points(), alpha}; }

Certificate solve_certificate(const InterpolationSystem& system,
                              std::shared_ptr<const ZonalKernel> kernel,
                              const std::vector<int>& signs) {
  if (!kernel) throw std::invalid_argument("solve_certificate: null kernel");
  const auto M = static_cast<std::size_t>(system.block_size());
  require_signs(signs, M);

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system.matrix);
  const double rcond = lu.rcond();
  const Eigen::VectorXd rhs = sign_rhs(signs);
  LuSolve sol = refined_solve(lu, system.matrix, rhs, rcond);

  Certificate cert;
  cert.kernel = std::move(kernel);
  cert.centers = system.centers;
  cert.signs = signs;
  cert.alpha = std::move(sol.alpha);
  cert.residual_inf = sol.residual;
  cert.rcond = rcond;
  const auto Mi = static_cast<Eigen::Index>(M);
  cert.alpha0_inf = cert.alpha.head(Mi).lpNorm<Eigen::Infinity>();
  cert.alpha_deriv_inf = cert.alpha.tail(3 * Mi).lpNorm<Eigen::Infinity>();

  // Re-evaluate the constraints through the independent kernel path.
  const QData qd = cert.qdata();
  for (std::size_t i = 0; i < M; ++i) {
    const QJet jet = evaluate_q(*cert.kernel, qd, cert.centers[i]);
    cert.value_err =
        std::max(cert.value_err, std::abs(jet.q - signs[i]));
    cert.grad_err =
        std::max(cert.grad_err, jet.grad.lpNorm<Eigen::Infinity>());
  }
  return cert;
}

Certificate solve_certificate(const SupportSet& centers,
                              const std::vector<int>& signs,
                              const FilterSpec& spec) {
  auto kernel = std::make_shared<const ZonalKernel>(spec);
  InterpolationSystem system = assemble(centers, *kernel);
  return solve_certificate(system, std::move(kernel), signs);
}

double eval_q(const Certificate& cert, const Rotation& x) {
  return evaluate_q(*cert.kernel, cert.qdata(), x).q;
}

Eigen::Vector3d eval_grad_q(const Certificate& cert, const Rotation& x) {
  return evaluate_q(*cert.kernel, cert.qdata(), x).grad;
}

bool SchurReport::rows_ok() const {
  for (const auto& r : rows)
    if (!r.ok()) return false;
  return true;
}

SchurReport check_schur_bounds(const InterpolationSystem& system,
                               const ZonalKernel& kernel, double nu,
                               double b) {
  const int s = kernel.order();
  const int N = kernel.degree();
  if (nu <= 0.0) throw std::domain_error("Schur bounds: nu must be positive");
  if (b <= 3.0) throw std::domain_error("Schur bounds: b must exceed 3");
  if (system.centers.separation() < nu / (N + 1.0))
    throw std::domain_error(
        "Schur bounds: support separation below nu/(N+1)");

  SchurReport rep;
  rep.nu = nu;
  rep.b = b;
  // Second-derivative floor |sigma~''(0)| >= c_s (N+1)^2; same constant as
  // ZeroDerivativeBounds.c_lo, valid for every even order s >= 6.
  rep.c_s = 0.999 / (2.0 * (s + 1));
  const double nus = std::pow(nu, s);
  const OffdiagConstants& C = kernel.spec().offdiag;
  const double scale = N + 1.0;
  const int M = system.block_size();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(M, M);

  auto push = [&rep](const std::string& name, double measured, double bound) {
    rep.rows.push_back(SchurRow{name, measured, bound});
  };
  auto inf_norm = [](const Eigen::MatrixXd& m) {
    return m.cwiseAbs().rowwise().sum().maxCoeff();
  };

  push("I - sigma_00", inf_norm(eye - system.block(0, 0)), C.C0 / nus);
  for (int i = 1; i <= 3; ++i) {
    const double bound1 = C.C1 * scale / nus;
    push("sigma_0" + std::to_string(i), inf_norm(system.block(0, i)), bound1);
    push("sigma_" + std::to_string(i) + "0", inf_norm(system.block(i, 0)),
         bound1);
  }
  const double bound2 = C.C2 * scale * scale / nus;
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j) {
      if (i == j) continue;
      push("sigma_" + std::to_string(i) + std::to_string(j),
           inf_norm(system.block(i, j)), bound2);
    }
  for (int i = 1; i <= 3; ++i)
    push("sigma_" + std::to_string(i) + std::to_string(i) + " + sigma''(0) I",
         inf_norm(system.block(i, i) + kernel.st2_zero() * eye), bound2);

  rep.a1 = C.C2 / (rep.c_s * nus);
  rep.a2 = rep.a1 < 1.0 ? rep.a1 / (1.0 - rep.a1) : kInf;
  rep.a3 = rep.a1 < 0.5 ? rep.a1 / (1.0 - 2.0 * rep.a1) : kInf;
  rep.a4 = rep.a1 < 1.0 / 3.0
               ? C.C0 / nus + std::pow(C.C1 / nus, 2) * 3.0 /
                                  (rep.c_s * (1.0 - 3.0 * rep.a1))
               : kInf;
  rep.cascade_ok = rep.a1 < 1.0 / 3.0 && rep.a4 < 1.0;
  rep.feasible = b > 3.0 + rep.c_s / 4.0 && nus > b * C.C2 / rep.c_s;
  rep.schur_inverse_bound = rep.a4 < 1.0 ? 1.0 / (1.0 - rep.a4) : kInf;
  const double denom = 4.0 * (b - 3.0) - rep.c_s;
  rep.alpha0_bound = 1.0 + rep.c_s / denom;
  rep.alpha_deriv_bound = 2.0 / (denom * scale);
  rep.anchor_lower = 1.0 - rep.c_s / denom;
  return rep;
}

std::vector<BandCheck> band_table() {
  const double t0 = 2.0 * std::sqrt(10.0 * 1.001 / 0.999);
  std::vector<BandCheck> bands(4);
  bands[0] = BandCheck{"first_lobe", M_PI / 2.0, t0, 0.96, 0.0, 0};
  bands[1] = BandCheck{"trough", t0, 2.45 * M_PI, 0.60, 0.0, 0};
  bands[2] = BandCheck{"ripple", 2.45 * M_PI, 18.0, 0.99, 0.0, 0};
  bands[3] = BandCheck{"outer", 18.0, kInf, 0.032, 0.0, 0};
  return bands;
}

bool VerificationReport::bands_ok(double slack) const {
  for (const auto& b : bands)
    if (!b.ok(slack)) return false;
  return true;
}

VerificationReport verify_certificate(const Certificate& cert,
                                      double near_mesh, long far_samples,
                                      double margin, std::uint64_t seed) {
  if (!cert.kernel)
    throw std::invalid_argument("verify_certificate: certificate not solved");
  const double scale = cert.kernel->degree() + 1.0;
  if (!(near_mesh > 0.0) || near_mesh > M_PI / (8.0 * scale) * (1.0 + 1e-9))
    throw std::domain_error(
        "verify_certificate: near mesh must lie in (0, pi/(8(N+1))]");
  if (!(margin > 0.0 && margin < 1.0))
    throw std::domain_error("verify_certificate: margin must lie in (0, 1)");
  if (far_samples < 0)
    throw std::invalid_argument("verify_certificate: negative sample count");

  Verifier verifier(*cert.kernel, cert.centers, near_mesh, far_samples, seed);
  return verifier.run(cert.alpha, cert.signs, margin);
}

PatternSweep enumerate_sign_patterns(const SupportSet& centers,
                                     const FilterSpec& spec,
                                     std::uint64_t pattern_limit,
                                     double near_mesh, long far_samples,
                                     double margin, std::uint64_t seed) {
  const auto M = static_cast<int>(centers.size());
  if (M < 1 || M > 20)
    throw std::invalid_argument("pattern sweep supports 1 <= M <= 20");
  if (pattern_limit == 0)
    throw std::invalid_argument("pattern sweep: zero pattern limit");

  const ZonalKernel kernel(spec);
  const InterpolationSystem system = assemble(centers, kernel);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system.matrix);
  const double rcond = lu.rcond();
  Verifier verifier(kernel, centers, near_mesh, far_samples, seed);

  PatternSweep sweep;
  sweep.M = M;
  sweep.total_patterns = std::uint64_t{1} << M;

  std::vector<std::uint32_t> masks;
  if (sweep.total_patterns <= pattern_limit) {
    masks.resize(sweep.total_patterns);
    for (std::uint64_t m = 0; m < sweep.total_patterns; ++m)
      masks[m] = static_cast<std::uint32_t>(m);
  } else {
    Rng rng = derive_stream(seed, "certificate/patterns");
    std::unordered_set<std::uint32_t> seen;
    while (masks.size() < pattern_limit) {
      const auto m =
          static_cast<std::uint32_t>(rng.uniform_index(sweep.total_patterns));
      if (seen.insert(m).second) masks.push_back(m);
    }
  }

  sweep.all_pass = true;
  for (std::uint32_t mask : masks) {
    std::vector<int> signs(static_cast<std::size_t>(M));
    for (int j = 0; j < M; ++j)
      signs[static_cast<std::size_t>(j)] = (mask >> j) & 1u ? -1 : 1;
    const LuSolve sol =
        refined_solve(lu, system.matrix, sign_rhs(signs), rcond);
    const VerificationReport rep = verifier.run(sol.alpha, signs, margin);

    PatternResult res;
    res.mask = mask;
    res.residual = sol.residual;
    res.alpha0_inf = sol.alpha.head(M).lpNorm<Eigen::Infinity>();
    res.alpha_deriv_inf = sol.alpha.tail(3 * M).lpNorm<Eigen::Infinity>();
    res.min_signed_q = kInf;
    for (const auto& nc : rep.near)
      res.min_signed_q = std::min(res.min_signed_q, nc.min_signed_q);
    res.far_max_abs_q = rep.far_max_abs_q;
    res.worst_band_excess = -kInf;
    for (const auto& band : rep.bands)
      if (band.samples > 0)
        res.worst_band_excess =
            std::max(res.worst_band_excess, band.measured - band.ceiling);
    res.near_ok = rep.near_ok;
    res.far_ok = rep.far_ok;
    res.pass = rep.pass;
    sweep.all_pass = sweep.all_pass && res.pass;
    sweep.results.push_back(res);
  }
  return sweep;
}

}  // namespace so3sr
