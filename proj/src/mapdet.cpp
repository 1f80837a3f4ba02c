#include "cfad/mapdet.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfad::mapdet {

namespace {

using solver::detail::ResidualWorkspace;

void check_positive(const MapState& state) {
  if (!(state.tau > 0.0) || (state.z.array() <= 0.0).any() ||
      (state.eta0.array() <= 0.0).any()) {
    throw std::domain_error("z, eta0 and tau must stay strictly positive");
  }
}

bool state_finite(const MapState& state) {
  if (!state.gamma.allFinite() || !state.z.allFinite() ||
      !state.eta0.allFinite() || !std::isfinite(state.tau)) {
    return false;
  }
  for (const auto& gk : state.g) {
    if (!gk.allFinite()) return false;
  }
  return true;
}

double dims_klm(const simkit::ReceivedSignals& signals) {
  const auto K = static_cast<double>(signals.y.size());
  const auto L = static_cast<double>(signals.y[0].rows());
  const auto M = static_cast<double>(signals.y[0].cols());
  return K * L * M;
}

}  // namespace

double map_objective(const MapState& state,
                     const simkit::ReceivedSignals& signals,
                     const simkit::PilotMatrix& pilots,
                     const Hyperparams& hyper) {
  check_positive(state);
  const int K = static_cast<int>(signals.y.size());
  const int N = static_cast<int>(pilots.s.cols());

  const ResidualWorkspace ws =
      solver::detail::make_residual(signals, pilots, state.gamma, state.g);
  double residual_sq = 0.0;
  for (const auto& r : ws.residual) residual_sq += r.squaredNorm();

  double obj = (dims_klm(signals) + hyper.c - 1.0) * std::log(state.tau) -
               state.tau * (hyper.d + residual_sq);

  for (int k = 0; k < K; ++k) {
    obj -= state.g[static_cast<std::size_t>(k)].squaredNorm();
    for (int n = 0; n < N; ++n) {
      obj -= state.gamma(k, n) * state.gamma(k, n) / (2.0 * state.z(n));
    }
  }

  const double log_psi0 = std::log(hyper.psi0);
  for (int n = 0; n < N; ++n) {
    const double zn = state.z(n);
    const double eta = state.eta0(n);
    obj -= 0.5 * K * std::log(zn);
    obj += (hyper.lambda0 - 1.0) * std::log(zn) -
           0.5 * (eta * zn + hyper.psi0 / zn);
    obj += 0.5 * hyper.lambda0 * (std::log(eta) - log_psi0) -
           specfun::log_bessel_k(hyper.lambda0, std::sqrt(eta * hyper.psi0));
    obj += (hyper.kappa1 - 1.0) * std::log(eta) - hyper.kappa2 * eta;
  }
  return obj;
}

double update_gamma_map_at(MapState& state, ResidualWorkspace& ws,
                           const simkit::PilotMatrix& pilots, int k, int n) {
  const auto ku = static_cast<std::size_t>(k);
  const double old_gamma = state.gamma(k, n);
  const Eigen::VectorXcd g = state.g[ku].col(n);
  const double gnorm_sq = g.squaredNorm();
  const double sns = ws.pilot_sq(n);

  // Correlation of the pilot-and-channel dyad with the residual that would
  // remain if this coordinate were zeroed.
  const std::complex<double> corr =
      pilots.s.col(n).dot(ws.residual[ku] * g.conjugate());
  const double numer =
      state.tau * (corr.real() + old_gamma * sns * gnorm_sq);
  const double denom =
      state.tau * sns * gnorm_sq + 0.5 / state.z(n);
  const double new_gamma = numer / denom;

  solver::detail::shift_coef(ws, pilots, state.g[ku], k, n, old_gamma,
                             new_gamma);
  state.gamma(k, n) = new_gamma;
  return new_gamma;
}

void update_g_map_at(MapState& state, ResidualWorkspace& ws,
                     const simkit::PilotMatrix& pilots, int k, int n) {
  const auto ku = static_cast<std::size_t>(k);
  const double gamma = state.gamma(k, n);
  const double sns = ws.pilot_sq(n);
  const Eigen::VectorXcd old_g = state.g[ku].col(n);

  // residual^T conj(s) plus the stripped own-term contribution.
  Eigen::VectorXcd lead =
      ws.residual[ku].transpose() * pilots.s.col(n).conjugate();
  lead += gamma * sns * old_g;
  const Eigen::VectorXcd new_g =
      (state.tau * gamma / (state.tau * gamma * gamma * sns + 1.0)) * lead;

  solver::detail::shift_vec(ws, pilots, gamma, k, n, old_g, new_g);
  state.g[ku].col(n) = new_g;
}

double update_z_map_at(MapState& state, const Hyperparams& hyper, int n) {
  const auto K = static_cast<double>(state.gamma.rows());
  const double eta = std::max(state.eta0(n), specfun::kParamFloor);
  const double lambda_hat = hyper.lambda0 - K / 2.0 - 1.0;
  const double s = hyper.psi0 + state.gamma.col(n).squaredNorm();
  const double root = std::sqrt(lambda_hat * lambda_hat + eta * s);
  // Positive root of eta z^2 - 2 lambda_hat z - s = 0; the rationalized form
  // avoids cancellation when lambda_hat < 0 (always the case for small
  // lambda0, since lambda_hat = lambda0 - K/2 - 1).
  const double z = lambda_hat >= 0.0 ? (lambda_hat + root) / eta
                                     : s / (root - lambda_hat);
  state.z(n) = std::max(z, specfun::kParamFloor);
  return state.z(n);
}

double eta_gradient(double eta, double z, const Hyperparams& hyper) {
  const double u = std::sqrt(eta * hyper.psi0);
  const double log_ratio = specfun::log_bessel_k(hyper.lambda0 + 1.0, u) -
                           specfun::log_bessel_k(hyper.lambda0, u);
  return (hyper.kappa1 - 1.0) / eta - hyper.kappa2 - 0.5 * z +
         hyper.psi0 / (2.0 * u) * std::exp(log_ratio);
}

double eta_objective_terms(double eta, double z, const Hyperparams& hyper) {
  const double u = std::sqrt(eta * hyper.psi0);
  return (0.5 * hyper.lambda0 + hyper.kappa1 - 1.0) * std::log(eta) -
         (hyper.kappa2 + 0.5 * z) * eta - specfun::log_bessel_k(hyper.lambda0, u);
}

double update_eta_map_at(MapState& state, const Hyperparams& hyper,
                         const SolverOptions& opts, int n) {
  const double z = state.z(n);
  double eta = state.eta0(n);
  double alpha = opts.alpha;
  for (int j = 0; j < opts.max_eta_iters; ++j) {
    const double grad = eta_gradient(eta, z, hyper);
    if (std::abs(grad) < opts.rel_tol) break;
    const double f0 = eta_objective_terms(eta, z, hyper);
    bool stepped = false;
    for (int h = 0; h < 40; ++h) {
      const double trial = std::max(eta + alpha * grad, specfun::kParamFloor);
      if (trial == eta) break;  // pinned at the positivity floor
      const double f1 = eta_objective_terms(trial, z, hyper);
      if (f1 >= f0 - 1e-12 * std::abs(f0)) {
        eta = trial;
        stepped = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!stepped) break;
  }
  state.eta0(n) = eta;
  return eta;
}

void update_gamma_map(MapState& state, const simkit::ReceivedSignals& signals,
                      const simkit::PilotMatrix& pilots) {
  ResidualWorkspace ws =
      solver::detail::make_residual(signals, pilots, state.gamma, state.g);
  const int K = static_cast<int>(signals.y.size());
  const int N = static_cast<int>(pilots.s.cols());
  for (int k = 0; k < K; ++k) {
    for (int n = 0; n < N; ++n) update_gamma_map_at(state, ws, pilots, k, n);
  }
}

void update_g_map(MapState& state, const simkit::ReceivedSignals& signals,
                  const simkit::PilotMatrix& pilots) {
  ResidualWorkspace ws =
      solver::detail::make_residual(signals, pilots, state.gamma, state.g);
  const int K = static_cast<int>(signals.y.size());
  const int N = static_cast<int>(pilots.s.cols());
  for (int k = 0; k < K; ++k) {
    for (int n = 0; n < N; ++n) update_g_map_at(state, ws, pilots, k, n);
  }
}

void update_z_map(MapState& state, const Hyperparams& hyper) {
  for (int n = 0; n < state.z.size(); ++n) update_z_map_at(state, hyper, n);
}

void update_eta_map(MapState& state, const Hyperparams& hyper,
                    const SolverOptions& opts) {
  for (int n = 0; n < state.eta0.size(); ++n) {
    update_eta_map_at(state, hyper, opts, n);
  }
}

void update_tau_map(MapState& state, const simkit::ReceivedSignals& signals,
                    const simkit::PilotMatrix& pilots,
                    const Hyperparams& hyper) {
  const double klm = dims_klm(signals);
  if (klm + hyper.c <= 1.0) {
    throw std::invalid_argument("noise precision update needs KLM + c > 1");
  }
  const ResidualWorkspace ws =
      solver::detail::make_residual(signals, pilots, state.gamma, state.g);
  double residual_sq = 0.0;
  for (const auto& r : ws.residual) residual_sq += r.squaredNorm();
  state.tau = (klm + hyper.c - 1.0) / (residual_sq + hyper.d);
}

MapState init_map_state(const simkit::ReceivedSignals& signals,
                        const simkit::PilotMatrix& pilots,
                        const SolverOptions& opts, const Hyperparams& hyper) {
  const int K = static_cast<int>(signals.y.size());
  const int L = static_cast<int>(signals.y[0].rows());
  const int M = static_cast<int>(signals.y[0].cols());
  const int N = static_cast<int>(pilots.s.cols());
  if (pilots.s.rows() != L) {
    throw std::invalid_argument("pilot length disagrees with signals");
  }

  MapState state;
  state.gamma = Eigen::MatrixXd::Zero(K, N);
  state.g = solver::draw_init_vectors(K, M, N, opts.seed);
  state.z = Eigen::VectorXd::Ones(N);
  state.eta0 = Eigen::VectorXd::Constant(N, hyper.eta0_init);
  double energy = 0.0;
  for (const auto& yk : signals.y) energy += yk.squaredNorm();
  state.tau = energy > 0.0 ? dims_klm(signals) / energy : 1.0;
  return state;
}

MapResult run_map_from(MapState state, const simkit::ReceivedSignals& signals,
                       const simkit::PilotMatrix& pilots,
                       const SolverOptions& opts, const Hyperparams& hyper) {
  MapResult res;
  res.trace.converged = false;

  const int K = static_cast<int>(signals.y.size());
  const int N = static_cast<int>(pilots.s.cols());

  std::vector<Eigen::MatrixXcd> prev_recon(
      static_cast<std::size_t>(K),
      Eigen::MatrixXcd::Zero(signals.y[0].rows(), signals.y[0].cols()));

  for (int iter = 1; iter <= opts.max_outer_iters; ++iter) {
    ResidualWorkspace ws =
        solver::detail::make_residual(signals, pilots, state.gamma, state.g);
    for (int k = 0; k < K; ++k) {
      for (int n = 0; n < N; ++n) update_gamma_map_at(state, ws, pilots, k, n);
    }
    for (int k = 0; k < K; ++k) {
      for (int n = 0; n < N; ++n) update_g_map_at(state, ws, pilots, k, n);
    }
    for (int n = 0; n < N; ++n) update_z_map_at(state, hyper, n);
    for (int n = 0; n < N; ++n) update_eta_map_at(state, hyper, opts, n);

    double residual_sq = 0.0;
    for (const auto& r : ws.residual) residual_sq += r.squaredNorm();
    state.tau =
        (dims_klm(signals) + hyper.c - 1.0) / (residual_sq + hyper.d);

    if (!state_finite(state)) {
      res.trace.aborted = true;
      res.trace.abort_reason =
          "non-finite state at iteration " + std::to_string(iter);
      break;
    }

    const std::vector<Eigen::MatrixXcd> recon =
        solver::detail::reconstruction(signals, ws);
    const double rel = solver::relative_change(recon, prev_recon);
    prev_recon = recon;

    IterationRecord rec;
    rec.iter = iter;
    rec.objective = map_objective(state, signals, pilots, hyper);
    rec.rel_change = rel;
    res.trace.records.push_back(rec);

    if (rel < opts.rel_tol) {
      res.trace.converged = true;
      break;
    }
  }

  res.scores = state.z;
  res.state = std::move(state);
  return res;
}

MapResult run_map(const simkit::ReceivedSignals& signals,
                  const simkit::PilotMatrix& pilots, const SolverOptions& opts,
                  const Hyperparams& hyper) {
  return run_map_from(init_map_state(signals, pilots, opts, hyper), signals,
                      pilots, opts, hyper);
}

}  // namespace cfad::mapdet
