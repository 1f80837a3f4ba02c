#pragma once

#include "cfad/solver_common.hpp"

namespace cfad::ghvi {

using solver::Hyperparams;
using solver::SolverOptions;
using solver::SolverTrace;

// Factorized posterior surrogate. Each gamma_kn gets a real Gaussian
// (mu_gamma, var_gamma), each g_kn a circular complex Gaussian with isotropic
// covariance cov_g_scale * I, each z_n a generalized inverse Gaussian, each
// eta0_n and tau a Gamma. The mean_* members cache the moments the sweeps
// consume so they are computed once per block update, not once per use.
struct VariationalState {
  Eigen::MatrixXd mu_gamma;         // K x N
  Eigen::MatrixXd var_gamma;        // K x N, floored at 1e-15 once updated
  std::vector<Eigen::MatrixXcd> mu_g;  // K of M x N
  Eigen::MatrixXd cov_g_scale;      // K x N, isotropic covariance scale
  std::vector<specfun::GigParams> z_post;      // N
  std::vector<specfun::GammaParams> eta0_post;  // N
  specfun::GammaParams tau_post;

  Eigen::VectorXd mean_z;      // N, cached <z_n>
  Eigen::VectorXd mean_inv_z;  // N, cached <1/z_n>
  Eigen::VectorXd mean_eta0;   // N, cached <eta0_n>
  double mean_tau = 1.0;

  specfun::InvMeanConvention inv_mean = specfun::InvMeanConvention::standard;
};

// Fresh moment view computed from the posterior parameters (the caches above
// must agree with this right after the corresponding block update).
struct Moments {
  Eigen::MatrixXd mean_gamma;     // <gamma>
  Eigen::MatrixXd mean_gamma_sq;  // <gamma^2> = mu^2 + var
  std::vector<Eigen::MatrixXcd> mean_g;
  Eigen::MatrixXd mean_g_normsq;  // <g^H g> = ||mu||^2 + M * scale
  Eigen::VectorXd mean_z;
  Eigen::VectorXd mean_inv_z;
  Eigen::VectorXd mean_eta0;
  double mean_tau = 1.0;
};

// Names one variational block for the partial objective below.
struct CoordId {
  enum class Kind { gamma, g, z, eta0, tau };
  Kind kind = Kind::gamma;
  int k = 0;
  int n = 0;
};

struct GhviResult {
  Eigen::VectorXd scores;  // <z_n>, thresholded downstream
  VariationalState state;
  SolverTrace trace;
};

// Initialization mirroring the point estimator: gamma means 0 (variances 0
// until first updated), g means drawn complex normal from opts.seed with
// zero covariance scale, and moment caches <z> = <1/z> = 1,
// <eta0> = hyper.eta0_init, <tau> = KLM / sum_k ||Y_k||_F^2. Posterior
// parameter placeholders are filled consistently with those caches.
VariationalState init_state(const simkit::ReceivedSignals& signals,
                            const simkit::PilotMatrix& pilots,
                            const SolverOptions& opts,
                            const Hyperparams& hyper);

// Block sweeps in fixed order; each visits every coordinate k-major and uses
// the freshest moments of the other blocks.
void update_q_gamma(VariationalState& state,
                    const simkit::ReceivedSignals& signals,
                    const simkit::PilotMatrix& pilots);
void update_q_g(VariationalState& state,
                const simkit::ReceivedSignals& signals,
                const simkit::PilotMatrix& pilots);
void update_q_z(VariationalState& state, const Hyperparams& hyper);
void update_q_eta(VariationalState& state, const Hyperparams& hyper);
void update_q_tau(VariationalState& state,
                  const simkit::ReceivedSignals& signals,
                  const simkit::PilotMatrix& pilots, const Hyperparams& hyper);

// Single-coordinate versions against a mean-residual workspace.
void update_q_gamma_at(VariationalState& state,
                       solver::detail::ResidualWorkspace& ws,
                       const simkit::PilotMatrix& pilots, int k, int n);
void update_q_g_at(VariationalState& state,
                   solver::detail::ResidualWorkspace& ws,
                   const simkit::PilotMatrix& pilots, int k, int n);
void update_q_z_at(VariationalState& state, const Hyperparams& hyper, int n);
void update_q_eta_at(VariationalState& state, const Hyperparams& hyper, int n);

Moments compute_moments(const VariationalState& state);

// All terms of the expected log joint that involve the named block's
// variational parameters, in closed form. Scalar moments of the other blocks
// come from the caches; log-moments come from the posterior parameters
// (digamma for the Gamma factors, a central difference in the order for the
// GIG factor). The eta0 terms keep only the conjugate part (shape and rate),
// matching the Gamma update; see the z-prior normalizer note in update_q_eta.
double partial_expected_log_joint(const CoordId& coord,
                                  const VariationalState& state,
                                  const simkit::ReceivedSignals& signals,
                                  const simkit::PilotMatrix& pilots,
                                  const Hyperparams& hyper);

// Expected residual energy E||Y_k - sum_n gamma_kn s_n g_kn^T||_F^2 under the
// current factors, for one access point.
double expected_residual_energy(const VariationalState& state,
                                const simkit::ReceivedSignals& signals,
                                const simkit::PilotMatrix& pilots, int k);

// Mean log of the GIG and Gamma factors, used by the partial objective.
double gig_mean_log(const specfun::GigParams& p);
double gamma_mean_log(const specfun::GammaParams& p);

// Sweeps Q(gamma), Q(g), Q(z), Q(eta0), Q(tau) until the mean reconstruction
// moves by less than opts.rel_tol or the budget runs out; scores are <z_n>.
// Validity of the eta0 factor requires kappa1 > -lambda0/2 and kappa2 > 0,
// checked up front. Non-finite state aborts with the trace flagged.
GhviResult run_ghvi(const simkit::ReceivedSignals& signals,
                    const simkit::PilotMatrix& pilots,
                    const SolverOptions& opts, const Hyperparams& hyper);
GhviResult run_ghvi_from(VariationalState state,
                         const simkit::ReceivedSignals& signals,
                         const simkit::PilotMatrix& pilots,
                         const SolverOptions& opts, const Hyperparams& hyper);

}  // namespace cfad::ghvi
