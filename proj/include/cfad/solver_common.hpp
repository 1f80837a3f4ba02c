#pragma once

#include "cfad/simkit.hpp"
#include "cfad/specfun.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cfad::solver {

// Shared prior hyperparameters of the hierarchical model. The all-1e-6
// defaults make every prior non-informative; eta0_init seeds the positive
// rate variable of the variance prior.
struct Hyperparams {
  double lambda0 = 1e-6;  // variance-prior shape
  double psi0 = 1e-6;     // variance-prior inverse scale
  double kappa1 = 1e-6;   // rate-prior shape
  double kappa2 = 1e-6;   // rate-prior rate
  double c = 1e-6;        // noise-precision prior shape
  double d = 1e-6;        // noise-precision prior rate
  double eta0_init = 1e-6;
};

struct SolverOptions {
  int max_outer_iters = 200;
  int max_eta_iters = 50;   // inner ascent budget per user
  double alpha = 1e-2;      // initial ascent step for the rate updates
  double rel_tol = 1e-4;    // stop when the reconstruction moves less
  double rho = 1.0;         // decision threshold; the harness sweeps it
  std::uint64_t seed = 0;   // channel-mean initialization draw
  specfun::InvMeanConvention inv_mean = specfun::InvMeanConvention::standard;
};

struct IterationRecord {
  int iter = 0;
  std::optional<double> objective;  // tracked by the point estimator only
  double rel_change = 0.0;
};

struct SolverTrace {
  std::vector<IterationRecord> records;
  bool converged = false;
  bool aborted = false;
  std::string abort_reason;
};

// K matrices of M x N complex normal entries, unit variance per entry.
std::vector<Eigen::MatrixXcd> draw_init_vectors(int K, int M, int N,
                                                std::uint64_t seed);

// sqrt(sum_k ||cur_k - prev_k||_F^2) / sqrt(sum_k ||prev_k||_F^2), with a
// zero-over-zero guard returning 0 and a nonzero-over-zero guard returning
// +infinity.
double relative_change(const std::vector<Eigen::MatrixXcd>& cur,
                       const std::vector<Eigen::MatrixXcd>& prev);

namespace detail {

// Running residual Y_k - sum_n coef(k,n) s_n vec(k,n)^T, maintained by rank-1
// corrections as single coordinates move. Rebuilt fresh at sweep boundaries
// so float drift never accumulates across iterations.
struct ResidualWorkspace {
  std::vector<Eigen::MatrixXcd> residual;  // K of L x M
  Eigen::VectorXd pilot_sq;                // per-user squared pilot norm
};

ResidualWorkspace make_residual(const simkit::ReceivedSignals& signals,
                                const simkit::PilotMatrix& pilots,
                                const Eigen::MatrixXd& coef,
                                const std::vector<Eigen::MatrixXcd>& vecs);

// Applies the rank-1 change after coef(k,n) moved from old_coef while the
// vector stayed fixed.
void shift_coef(ResidualWorkspace& ws, const simkit::PilotMatrix& pilots,
                const Eigen::MatrixXcd& vecs_k, int k, int n, double old_coef,
                double new_coef);

// Applies the rank-1 change after vec(k,n) moved from old_vec at fixed coef.
void shift_vec(ResidualWorkspace& ws, const simkit::PilotMatrix& pilots,
               double coef, int k, int n, const Eigen::VectorXcd& old_vec,
               const Eigen::VectorXcd& new_vec);

// Current reconstructions X_k = Y_k - residual_k.
std::vector<Eigen::MatrixXcd> reconstruction(
    const simkit::ReceivedSignals& signals, const ResidualWorkspace& ws);

}  // namespace detail

}  // namespace cfad::solver
