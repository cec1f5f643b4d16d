#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "so3sr/filter.hpp"
#include "so3sr/kernel.hpp"
#include "so3sr/rotation.hpp"

namespace so3sr {

// Hermite interpolation system for the dual certificate
//   q(x) = sum_j alpha_{0,j} sigma_N(x, c_j)
//        + sum_{n,j} alpha_{n,j} X_n^y sigma_N(x, c_j)
// subject to q(c_i) = u_i and X_n q(c_i) = 0.  The 4M x 4M matrix stores
// row/column blocks in the order (sigma, X_1, X_2, X_3): row block 0 holds
// the value constraints, row block n the derivative constraints, so the
// unknown is (alpha_0; alpha_1; alpha_2; alpha_3) against the right-hand
// side (u; 0; 0; 0).
struct InterpolationSystem {
  SupportSet centers;
  Eigen::MatrixXd matrix;

  int block_size() const { return static_cast<int>(centers.size()); }
  // M x M view of block (r, c) for r, c in 0..3.
  Eigen::Block<const Eigen::MatrixXd> block(int r, int c) const;
};

// Fills the matrix from the kernel derivative set.  Coincident pairs (i == j)
// are written from the exact limits sigma = 1, X sigma = 0,
// X_i^x X_n^y sigma = -sigma~''(0) delta_{in}, so the structural identities
// (unit value diagonal, zero gradient diagonals, -sigma~''(0) on the
// derivative-block diagonal) hold exactly.  Requires
// separation(centers) >= pi/(N+1); throws std::domain_error below that.
InterpolationSystem assemble(const SupportSet& centers,
                             const ZonalKernel& kernel);

// Solved certificate for one sign pattern, with the solve diagnostics the
// checks downstream consume.
struct Certificate {
  std::shared_ptr<const ZonalKernel> kernel;
  SupportSet centers;
  std::vector<int> signs;  // u_i = +-1
  Eigen::VectorXd alpha;   // 4M, blocks (alpha_0; alpha_1; alpha_2; alpha_3)

  double residual_inf = 0.0;     // ||K alpha - rhs||_inf, ||rhs||_inf = 1
  double rcond = 0.0;            // LU reciprocal condition estimate
  double value_err = 0.0;        // max_i |q(c_i) - u_i|, re-evaluated
  double grad_err = 0.0;         // max_{i,n} |X_n q(c_i)|, re-evaluated
  double alpha0_inf = 0.0;       // ||alpha_0||_inf
  double alpha_deriv_inf = 0.0;  // max_{n >= 1} ||alpha_n||_inf

  QData qdata() const;
};

// Dense LU with partial pivoting on the assembled system.  Applies one step
// of iterative refinement if needed; throws std::runtime_error (message
// carries the reciprocal condition estimate) when the factorization is
// singular or the residual stays above 1e-10 ||rhs||_inf.
Certificate solve_certificate(const InterpolationSystem& system,
                              std::shared_ptr<const ZonalKernel> kernel,
                              const std::vector<int>& signs);
// Convenience wrapper: builds the kernel and system from the filter spec.
Certificate solve_certificate(const SupportSet& centers,
                              const std::vector<int>& signs,
                              const FilterSpec& spec);

double eval_q(const Certificate& cert, const Rotation& x);
Eigen::Vector3d eval_grad_q(const Certificate& cert, const Rotation& x);

// One measured block norm against its localization bound.
struct SchurRow {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool ok() const { return measured <= bound; }
};

// Block-norm estimates of the interpolation matrix at separation nu/(N+1),
// the invertibility cascade a1..a4 of the derivative-block Schur complement,
// and the coefficient bounds they imply.
struct SchurReport {
  double nu = 0.0;
  double b = 0.0;
  double c_s = 0.0;  // second-derivative floor constant 0.999 / (2(s+1))
  std::vector<SchurRow> rows;
  double a1 = 0.0;  // C_2 / (c_s nu^s)
  double a2 = 0.0;  // a1 / (1 - a1)
  double a3 = 0.0;  // a1 / (1 - 2 a1)
  double a4 = 0.0;  // C_0/nu^s + (C_1/nu^s)^2 * 3/(c_s (1 - 3 a1))
  bool feasible = false;    // b > 3 + c_s/4 and nu^s > b C_2 / c_s
  bool cascade_ok = false;  // a1 < 1/3 and a4 < 1
  double schur_inverse_bound = 0.0;  // 1 / (1 - a4)
  double alpha0_bound = 0.0;         // 1 + c_s / (4(b-3) - c_s)
  double alpha_deriv_bound = 0.0;    // 2 / ((4(b-3) - c_s)(N+1))
  double anchor_lower = 0.0;         // 1 - c_s / (4(b-3) - c_s)

  bool rows_ok() const;
  bool all_ok() const { return rows_ok() && feasible && cascade_ok; }
};

// Measures ||I - B_00||_inf, the gradient blocks against C_1 (N+1)/nu^s, the
// mixed blocks against C_2 (N+1)^2/nu^s, and the derivative-diagonal
// deviation ||B_ii + sigma~''(0) I||_inf, then evaluates the cascade.
// Requires separation(centers) >= nu/(N+1) and b > 3; throws
// std::domain_error when either hypothesis fails.
SchurReport check_schur_bounds(const InterpolationSystem& system,
                               const ZonalKernel& kernel, double nu, double b);

// Sampled check on the ball omega(c_m^{-1} x) <= pi/(2(N+1)) around one
// center: sign-adjusted Hessian diagonal dominance (Gerschgorin) and the
// floor u_m q > 0.9.  scaled_diag / scaled_offdiag record the measured
// extremes in units of (N+1)^2 next to the reference levels -0.041 and 0.01.
struct NearCenterCheck {
  int center = -1;
  int sign = 1;
  long samples = 0;
  double min_signed_q = 0.0;        // min over the ball of u_m q
  double worst_diag = 0.0;          // max over ball and axes of u_m H_ii
  double worst_gersh_margin = 0.0;  // min of |H_ii| - sum_{j != i} |H_ij|
  double scaled_diag = 0.0;         // max u_m H_ii / (N+1)^2
  double scaled_offdiag = 0.0;      // max |H_ij| / (N+1)^2, i != j
  bool hessian_ok = false;
  bool q_ok = false;
  bool ok() const { return hessian_ok && q_ok; }
};

// Measured maximum of |q| over one annulus in scaled distance
// t = (N+1) min_m omega(c_m^{-1} x).
struct BandCheck {
  std::string name;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double ceiling = 0.0;
  double measured = 0.0;
  long samples = 0;
  bool ok(double slack = 0.0) const {
    return samples == 0 || measured <= ceiling + slack;
  }
};

// The four annulus ceilings: 0.96 on [pi/2, t0] with
// t0 = 2 sqrt(10 * 1.001/0.999), 0.60 on [t0, 2.45 pi], 0.99 on
// [2.45 pi, 18], and 0.032 once every center is at least t = 18 away.
std::vector<BandCheck> band_table();

struct VerificationReport {
  double near_radius = 0.0;  // pi / (2(N+1))
  double near_mesh = 0.0;
  double margin = 0.0;
  std::vector<NearCenterCheck> near;
  std::vector<BandCheck> bands;
  long far_samples = 0;         // band sweep + accepted Haar draws
  double far_max_abs_q = 0.0;   // max |q| outside the near balls
  double far_argmax_t = 0.0;    // scaled distance of that maximum
  double reference_diag = 0.0;  // -0.041 (N+1)^2, logged next to measurements
  double reference_offdiag = 0.0;  // 0.01 (N+1)^2
  bool near_ok = false;
  bool far_ok = false;  // far_max_abs_q <= 1 - margin
  bool pass = false;    // near_ok && far_ok

  bool bands_ok(double slack = 0.0) const;
};

// Samples the certificate: exponential-map grids of mesh <= near_mesh on the
// ball around each center (radius pi/(2(N+1))), plus a deterministic sweep
// of every annulus around every center and far_samples Haar draws for the
// far region.  Requires near_mesh <= pi/(8(N+1)) and margin in (0, 1).
VerificationReport verify_certificate(const Certificate& cert,
                                      double near_mesh, long far_samples,
                                      double margin = 1e-3,
                                      std::uint64_t seed = 0);

// One solve + verify for a sign pattern encoded as a bit mask
// (bit j set <=> u_j = -1).
struct PatternResult {
  std::uint32_t mask = 0;
  double residual = 0.0;
  double alpha0_inf = 0.0;
  double alpha_deriv_inf = 0.0;
  double min_signed_q = 0.0;
  double far_max_abs_q = 0.0;
  double worst_band_excess = 0.0;  // max over bands of measured - ceiling
  bool near_ok = false;
  bool far_ok = false;
  bool pass = false;
};

struct PatternSweep {
  int M = 0;
  std::uint64_t total_patterns = 0;  // 2^M
  std::vector<PatternResult> results;
  bool all_pass = false;
};

// Solves and verifies sign patterns on a fixed support, reusing one matrix
// factorization and one sample cache.  All 2^M patterns when that count is
// within pattern_limit, otherwise pattern_limit distinct masks drawn
// uniformly from the seed.  Requires M <= 20.
PatternSweep enumerate_sign_patterns(const SupportSet& centers,
                                     const FilterSpec& spec,
                                     std::uint64_t pattern_limit,
                                     double near_mesh, long far_samples,
                                     double margin, std::uint64_t seed);

}  // namespace so3sr
