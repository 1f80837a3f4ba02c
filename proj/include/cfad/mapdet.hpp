#pragma once

#include "cfad/solver_common.hpp"

namespace cfad::mapdet {

using solver::Hyperparams;
using solver::SolverOptions;
using solver::SolverTrace;

// Point estimates of the joint model. gamma(k,n) is the combined activity
// and large-scale amplitude (sign may go negative; the sign can always be
// absorbed into g), g[k].col(n) the per-link fast-fading vector, z(n) the
// shared per-user variance, eta0(n) its rate hyperparameter, tau the noise
// precision.
struct MapState {
  Eigen::MatrixXd gamma;            // K x N
  std::vector<Eigen::MatrixXcd> g;  // K of M x N
  Eigen::VectorXd z;                // N, > 0
  Eigen::VectorXd eta0;             // N, > 0
  double tau = 1.0;                 // > 0
};

struct MapResult {
  Eigen::VectorXd scores;  // final z, thresholded downstream
  MapState state;
  SolverTrace trace;
};

// Log joint density of (signals, state), dropping additive constants that
// involve only fixed hyperparameters:
//   (KLM + c - 1) ln tau - tau (d + sum_k ||Y_k - X_k||_F^2)
//   - sum_{k,n} ||g_kn||^2 - sum_{k,n} gamma_kn^2/(2 z_n) - (K/2) sum_n ln z_n
//   + sum_n [(lambda0 - 1) ln z_n - (eta0_n z_n + psi0/z_n)/2]
//   + sum_n [(lambda0/2)(ln eta0_n - ln psi0) - ln K_{lambda0}(sqrt(eta0_n psi0))]
//   + sum_n [(kappa1 - 1) ln eta0_n - kappa2 eta0_n]
// where X_k is the reconstruction sum_n gamma_kn s_n g_kn^T.
double map_objective(const MapState& state,
                     const simkit::ReceivedSignals& signals,
                     const simkit::PilotMatrix& pilots,
                     const Hyperparams& hyper);

// Full coordinate sweeps, each visiting every (k, n) in k-major order and
// consuming the freshest values of all other coordinates.
void update_gamma_map(MapState& state, const simkit::ReceivedSignals& signals,
                      const simkit::PilotMatrix& pilots);
void update_g_map(MapState& state, const simkit::ReceivedSignals& signals,
                  const simkit::PilotMatrix& pilots);
void update_z_map(MapState& state, const Hyperparams& hyper);
void update_eta_map(MapState& state, const Hyperparams& hyper,
                    const SolverOptions& opts);
void update_tau_map(MapState& state, const simkit::ReceivedSignals& signals,
                    const simkit::PilotMatrix& pilots,
                    const Hyperparams& hyper);

// Single-coordinate versions running against a residual workspace; the sweep
// functions are thin loops over these. Exposed so tests can pin each closed
// form against a line-search oracle.
double update_gamma_map_at(MapState& state,
                           solver::detail::ResidualWorkspace& ws,
                           const simkit::PilotMatrix& pilots, int k, int n);
void update_g_map_at(MapState& state, solver::detail::ResidualWorkspace& ws,
                     const simkit::PilotMatrix& pilots, int k, int n);
double update_z_map_at(MapState& state, const Hyperparams& hyper, int n);
double update_eta_map_at(MapState& state, const Hyperparams& hyper,
                         const SolverOptions& opts, int n);

// Gradient of the eta0_n terms of the objective at fixed z_n, and those terms
// themselves; the ascent loop and its oracle both build on these.
double eta_gradient(double eta, double z, const Hyperparams& hyper);
double eta_objective_terms(double eta, double z, const Hyperparams& hyper);

// Deterministic initialization: gamma = 0, g drawn complex normal from
// opts.seed, z = 1, eta0 = hyper.eta0_init, tau = KLM / sum_k ||Y_k||_F^2.
MapState init_map_state(const simkit::ReceivedSignals& signals,
                        const simkit::PilotMatrix& pilots,
                        const SolverOptions& opts, const Hyperparams& hyper);

// Cyclic sweeps (gamma, g, z, eta0, tau) until the reconstruction moves by
// less than opts.rel_tol or the iteration budget runs out. Non-finite state
// aborts with the trace flagged instead of throwing.
MapResult run_map(const simkit::ReceivedSignals& signals,
                  const simkit::PilotMatrix& pilots, const SolverOptions& opts,
                  const Hyperparams& hyper);
MapResult run_map_from(MapState state, const simkit::ReceivedSignals& signals,
                       const simkit::PilotMatrix& pilots,
                       const SolverOptions& opts, const Hyperparams& hyper);

}  // namespace cfad::mapdet
