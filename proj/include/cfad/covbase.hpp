#pragma once

#include "cfad/simkit.hpp"
#include "cfad/solver_common.hpp"

namespace cfad::covbase {

// The knowledge this baseline consumes: assumed per-link gains (true or
// perturbed), assumed noise variance, and the pilot book. Gains and noise are
// in the same noise-normalized units as the received signals.
struct CovKnowledge {
  Eigen::MatrixXd beta;  // K x N
  double noise_var = 1.0;
  simkit::PilotMatrix pilots;
};

struct CovOptions {
  int max_sweeps = 50;
  double rel_tol = 1e-6;
};

// Relaxed activity estimate plus the per-AP caches that make coordinate
// steps cheap: model-covariance inverses, sample covariances, running log
// determinants and trace terms.
struct CovState {
  Eigen::VectorXd a;                         // N, >= 0
  std::vector<Eigen::MatrixXcd> q_inv;       // K of L x L
  std::vector<Eigen::MatrixXcd> sample_cov;  // K of L x L, Y_k Y_k^H / M
  Eigen::VectorXd log_det;                   // K, ln|Q_k|
  Eigen::VectorXd trace_term;                // K, Tr(Q_k^{-1} sample_cov_k)
  int updates_since_refresh = 0;
};

struct CovResult {
  Eigen::VectorXd scores;  // final a, thresholded downstream
  solver::SolverTrace trace;
};

// a = 0 with caches matching the pure-noise model covariance.
CovState init_cov_state(const simkit::ReceivedSignals& signals,
                        const CovKnowledge& knowledge);

// sum_k [ln|Q_k| + Tr(Q_k^{-1} Y_k Y_k^H / M)] with
// Q_k = sum_n a_n beta_kn s_n s_n^H + noise_var I, evaluated fresh by
// factorization from state.a; never reads the rank-1 caches.
double cov_objective(const CovState& state, const CovKnowledge& knowledge,
                     const simkit::ReceivedSignals& signals);

// The same objective from the running caches (what the solver descends on).
double cached_objective(const CovState& state);

// Exact 1D minimization of the objective over a_n >= 0 (coarse bracket, then
// golden-section), applied through rank-1 downdates of every per-AP cache.
// A step is taken only if it does not increase the objective. Returns the
// new a_n.
double cov_coord_update(CovState& state, const CovKnowledge& knowledge, int n);

// Rebuilds all caches from scratch (factorization path); called periodically
// to stop rank-1 drift from accumulating.
void refresh_caches(CovState& state, const CovKnowledge& knowledge);

// Cyclic sweeps over users until the relative objective change drops below
// opts.rel_tol or the sweep budget runs out.
CovResult run_cov(const simkit::ReceivedSignals& signals,
                  const CovKnowledge& knowledge, const CovOptions& opts);

}  // namespace cfad::covbase
