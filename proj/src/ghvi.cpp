#include "cfad/ghvi.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cfad::ghvi {

namespace {

using solver::detail::ResidualWorkspace;

constexpr double kVarFloor = 1e-15;
constexpr double kPsiFloor = 1e-12;

double dims_klm(const simkit::ReceivedSignals& signals) {
  const auto K = static_cast<double>(signals.y.size());
  const auto L = static_cast<double>(signals.y[0].rows());
  const auto M = static_cast<double>(signals.y[0].cols());
  return K * L * M;
}

// Variance part of the expected residual energy for one access point:
// sum_n (s_n^H s_n) [var ||mu_g||^2 + (mu^2 + var) M scale].
double residual_variance_terms(const VariationalState& state,
                               const Eigen::VectorXd& pilot_sq, int k) {
  const auto ku = static_cast<std::size_t>(k);
  const auto M = static_cast<double>(state.mu_g[ku].rows());
  const int N = static_cast<int>(state.mu_gamma.cols());
  double sum = 0.0;
  for (int n = 0; n < N; ++n) {
    const double mu = state.mu_gamma(k, n);
    const double var = state.var_gamma(k, n);
    const double mug_sq = state.mu_g[ku].col(n).squaredNorm();
    sum += pilot_sq(n) * (var * mug_sq +
                          (mu * mu + var) * M * state.cov_g_scale(k, n));
  }
  return sum;
}

void refresh_z_cache(VariationalState& state, int n) {
  const specfun::GigMoments mom =
      specfun::gig_moments(state.z_post[static_cast<std::size_t>(n)],
                           state.inv_mean);
  state.mean_z(n) = mom.mean;
  state.mean_inv_z(n) = mom.inv_mean;
}

void update_q_tau_with_ws(VariationalState& state,
                          const simkit::ReceivedSignals& signals,
                          const ResidualWorkspace& ws,
                          const Hyperparams& hyper) {
  const int K = static_cast<int>(signals.y.size());
  double expected_energy = 0.0;
  for (int k = 0; k < K; ++k) {
    expected_energy += ws.residual[static_cast<std::size_t>(k)].squaredNorm();
    expected_energy += residual_variance_terms(state, ws.pilot_sq, k);
  }
  state.tau_post.shape = dims_klm(signals) + hyper.c;
  state.tau_post.rate = hyper.d + expected_energy;
  state.mean_tau = state.tau_post.shape / state.tau_post.rate;
}

bool state_finite(const VariationalState& state) {
  if (!state.mu_gamma.allFinite() || !state.var_gamma.allFinite() ||
      !state.cov_g_scale.allFinite() || !state.mean_z.allFinite() ||
      !state.mean_inv_z.allFinite() || !state.mean_eta0.allFinite() ||
      !std::isfinite(state.mean_tau)) {
    return false;
  }
  for (const auto& mk : state.mu_g) {
    if (!mk.allFinite()) return false;
  }
  return true;
}

}  // namespace

VariationalState init_state(const simkit::ReceivedSignals& signals,
                            const simkit::PilotMatrix& pilots,
                            const SolverOptions& opts,
                            const Hyperparams& hyper) {
  const int K = static_cast<int>(signals.y.size());
  const int L = static_cast<int>(signals.y[0].rows());
  const int M = static_cast<int>(signals.y[0].cols());
  const int N = static_cast<int>(pilots.s.cols());
  if (pilots.s.rows() != L) {
    throw std::invalid_argument("pilot length disagrees with signals");
  }

  VariationalState st;
  st.inv_mean = opts.inv_mean;
  st.mu_gamma = Eigen::MatrixXd::Zero(K, N);
  st.var_gamma = Eigen::MatrixXd::Zero(K, N);
  st.mu_g = solver::draw_init_vectors(K, M, N, opts.seed);
  st.cov_g_scale = Eigen::MatrixXd::Zero(K, N);

  const double lambda_hat = hyper.lambda0 - 0.5 * K;
  st.z_post.assign(static_cast<std::size_t>(N),
                   specfun::GigParams{1.0, 1.0, lambda_hat});
  const double k1_hat = hyper.kappa1 + 0.5 * hyper.lambda0;
  st.eta0_post.assign(static_cast<std::size_t>(N),
                      specfun::GammaParams{k1_hat, k1_hat / hyper.eta0_init});

  st.mean_z = Eigen::VectorXd::Ones(N);
  st.mean_inv_z = Eigen::VectorXd::Ones(N);
  st.mean_eta0 = Eigen::VectorXd::Constant(N, hyper.eta0_init);

  double energy = 0.0;
  for (const auto& yk : signals.y) energy += yk.squaredNorm();
  st.mean_tau = energy > 0.0 ? dims_klm(signals) / energy : 1.0;
  st.tau_post.shape = dims_klm(signals) + hyper.c;
  st.tau_post.rate = st.tau_post.shape / st.mean_tau;
  return st;
}

void update_q_gamma_at(VariationalState& state, ResidualWorkspace& ws,
                       const simkit::PilotMatrix& pilots, int k, int n) {
  const auto ku = static_cast<std::size_t>(k);
  const auto M = static_cast<double>(state.mu_g[ku].rows());
  const double sns = ws.pilot_sq(n);
  const Eigen::VectorXcd mu_g = state.mu_g[ku].col(n);
  const double mug_sq = mu_g.squaredNorm();
  const double g_normsq = mug_sq + M * state.cov_g_scale(k, n);

  const double sigma = std::max(
      0.5 / (state.mean_tau * sns * g_normsq + 0.5 * state.mean_inv_z(n)),
      kVarFloor);
  const double old_mu = state.mu_gamma(k, n);
  const std::complex<double> corr =
      pilots.s.col(n).dot(ws.residual[ku] * mu_g.conjugate());
  const double new_mu =
      2.0 * state.mean_tau * sigma * (corr.real() + old_mu * sns * mug_sq);

  solver::detail::shift_coef(ws, pilots, state.mu_g[ku], k, n, old_mu, new_mu);
  state.mu_gamma(k, n) = new_mu;
  state.var_gamma(k, n) = sigma;
}

void update_q_g_at(VariationalState& state, ResidualWorkspace& ws,
                   const simkit::PilotMatrix& pilots, int k, int n) {
  const auto ku = static_cast<std::size_t>(k);
  const double sns = ws.pilot_sq(n);
  const double mu = state.mu_gamma(k, n);
  const double gamma_sq = mu * mu + state.var_gamma(k, n);
  const double scale =
      std::max(1.0 / (state.mean_tau * gamma_sq * sns + 1.0), kVarFloor);

  const Eigen::VectorXcd old_g = state.mu_g[ku].col(n);
  Eigen::VectorXcd lead =
      ws.residual[ku].transpose() * pilots.s.col(n).conjugate();
  lead += mu * sns * old_g;
  const Eigen::VectorXcd new_g = (state.mean_tau * mu * scale) * lead;

  solver::detail::shift_vec(ws, pilots, mu, k, n, old_g, new_g);
  state.mu_g[ku].col(n) = new_g;
  state.cov_g_scale(k, n) = scale;
}

void update_q_z_at(VariationalState& state, const Hyperparams& hyper, int n) {
  const auto K = static_cast<double>(state.mu_gamma.rows());
  double gamma_sq_sum = 0.0;
  for (int k = 0; k < state.mu_gamma.rows(); ++k) {
    gamma_sq_sum +=
        state.mu_gamma(k, n) * state.mu_gamma(k, n) + state.var_gamma(k, n);
  }
  auto& post = state.z_post[static_cast<std::size_t>(n)];
  post.eta = state.mean_eta0(n);
  post.psi = std::max(hyper.psi0 + gamma_sq_sum, kPsiFloor);
  post.lambda = hyper.lambda0 - 0.5 * K;
  refresh_z_cache(state, n);
}

void update_q_eta_at(VariationalState& state, const Hyperparams& hyper,
                     int n) {
  auto& post = state.eta0_post[static_cast<std::size_t>(n)];
  post.shape = hyper.kappa1 + 0.5 * hyper.lambda0;
  post.rate = hyper.kappa2 + 0.5 * state.mean_z(n);
  state.mean_eta0(n) = post.shape / post.rate;
}

void update_q_gamma(VariationalState& state,
                    const simkit::ReceivedSignals& signals,
                    const simkit::PilotMatrix& pilots) {
  ResidualWorkspace ws = solver::detail::make_residual(
      signals, pilots, state.mu_gamma, state.mu_g);
  const int K = static_cast<int>(signals.y.size());
  const int N = static_cast<int>(pilots.s.cols());
  for (int k = 0; k < K; ++k) {
    for (int n = 0; n < N; ++n) update_q_gamma_at(state, ws, pilots, k, n);
  }
}

void update_q_g(VariationalState& state, const simkit::ReceivedSignals& signals,
                const simkit::PilotMatrix& pilots) {
  ResidualWorkspace ws = solver::detail::make_residual(
      signals, pilots, state.mu_gamma, state.mu_g);
  const int K = static_cast<int>(signals.y.size());
  const int N = static_cast<int>(pilots.s.cols());
  for (int k = 0; k < K; ++k) {
    for (int n = 0; n < N; ++n) update_q_g_at(state, ws, pilots, k, n);
  }
}

void update_q_z(VariationalState& state, const Hyperparams& hyper) {
  for (int n = 0; n < state.mean_z.size(); ++n) {
    update_q_z_at(state, hyper, n);
  }
}

void update_q_eta(VariationalState& state, const Hyperparams& hyper) {
  for (int n = 0; n < state.mean_eta0.size(); ++n) {
    update_q_eta_at(state, hyper, n);
  }
}

void update_q_tau(VariationalState& state,
                  const simkit::ReceivedSignals& signals,
                  const simkit::PilotMatrix& pilots,
                  const Hyperparams& hyper) {
  const ResidualWorkspace ws = solver::detail::make_residual(
      signals, pilots, state.mu_gamma, state.mu_g);
  update_q_tau_with_ws(state, signals, ws, hyper);
}

Moments compute_moments(const VariationalState& state) {
  const int N = static_cast<int>(state.mu_gamma.cols());
  Moments m;
  m.mean_gamma = state.mu_gamma;
  m.mean_gamma_sq =
      state.mu_gamma.array().square() + state.var_gamma.array();
  m.mean_g = state.mu_g;
  m.mean_g_normsq.resize(state.mu_gamma.rows(), N);
  for (int k = 0; k < state.mu_gamma.rows(); ++k) {
    const auto& mg = state.mu_g[static_cast<std::size_t>(k)];
    for (int n = 0; n < N; ++n) {
      m.mean_g_normsq(k, n) = mg.col(n).squaredNorm() +
                              mg.rows() * state.cov_g_scale(k, n);
    }
  }
  m.mean_z.resize(N);
  m.mean_inv_z.resize(N);
  m.mean_eta0.resize(N);
  for (int n = 0; n < N; ++n) {
    const specfun::GigMoments gm = specfun::gig_moments(
        state.z_post[static_cast<std::size_t>(n)], state.inv_mean);
    m.mean_z(n) = gm.mean;
    m.mean_inv_z(n) = gm.inv_mean;
    const auto& ep = state.eta0_post[static_cast<std::size_t>(n)];
    m.mean_eta0(n) = ep.shape / ep.rate;
  }
  m.mean_tau = state.tau_post.shape / state.tau_post.rate;
  return m;
}

double gig_mean_log(const specfun::GigParams& p) {
  const double x = std::sqrt(p.eta * p.psi);
  const double h = 1e-5;
  const double dnu = (specfun::log_bessel_k(p.lambda + h, x) -
                      specfun::log_bessel_k(p.lambda - h, x)) /
                     (2.0 * h);
  return 0.5 * (std::log(p.psi) - std::log(p.eta)) + dnu;
}

double gamma_mean_log(const specfun::GammaParams& p) {
  return specfun::digamma(p.shape) - std::log(p.rate);
}

double expected_residual_energy(const VariationalState& state,
                                const simkit::ReceivedSignals& signals,
                                const simkit::PilotMatrix& pilots, int k) {
  const auto ku = static_cast<std::size_t>(k);
  const int N = static_cast<int>(pilots.s.cols());
  Eigen::MatrixXcd r = signals.y[ku];
  for (int n = 0; n < N; ++n) {
    const double mu = state.mu_gamma(k, n);
    if (mu == 0.0) continue;
    r.noalias() -= mu * pilots.s.col(n) * state.mu_g[ku].col(n).transpose();
  }
  Eigen::VectorXd pilot_sq(N);
  for (int n = 0; n < N; ++n) pilot_sq(n) = pilots.s.col(n).squaredNorm();
  return r.squaredNorm() + residual_variance_terms(state, pilot_sq, k);
}

double partial_expected_log_joint(const CoordId& coord,
                                  const VariationalState& state,
                                  const simkit::ReceivedSignals& signals,
                                  const simkit::PilotMatrix& pilots,
                                  const Hyperparams& hyper) {
  const int K = static_cast<int>(signals.y.size());
  switch (coord.kind) {
    case CoordId::Kind::gamma: {
      const double e_res =
          expected_residual_energy(state, signals, pilots, coord.k);
      const double gamma_sq =
          state.mu_gamma(coord.k, coord.n) * state.mu_gamma(coord.k, coord.n) +
          state.var_gamma(coord.k, coord.n);
      const double ln_z =
          gig_mean_log(state.z_post[static_cast<std::size_t>(coord.n)]);
      return -state.mean_tau * e_res +
             0.5 * (-ln_z - state.mean_inv_z(coord.n) * gamma_sq);
    }
    case CoordId::Kind::g: {
      const double e_res =
          expected_residual_energy(state, signals, pilots, coord.k);
      const auto ku = static_cast<std::size_t>(coord.k);
      const double g_normsq =
          state.mu_g[ku].col(coord.n).squaredNorm() +
          state.mu_g[ku].rows() * state.cov_g_scale(coord.k, coord.n);
      return -state.mean_tau * e_res - g_normsq;
    }
    case CoordId::Kind::z: {
      const auto& post = state.z_post[static_cast<std::size_t>(coord.n)];
      const specfun::GigMoments mom =
          specfun::gig_moments(post, state.inv_mean);
      const double ln_z = gig_mean_log(post);
      double val = 0.0;
      for (int k = 0; k < K; ++k) {
        const double gamma_sq =
            state.mu_gamma(k, coord.n) * state.mu_gamma(k, coord.n) +
            state.var_gamma(k, coord.n);
        val += 0.5 * (-ln_z - mom.inv_mean * gamma_sq);
      }
      val += (hyper.lambda0 - 1.0) * ln_z -
             0.5 * (state.mean_eta0(coord.n) * mom.mean +
                    hyper.psi0 * mom.inv_mean);
      return val;
    }
    case CoordId::Kind::eta0: {
      const auto& post = state.eta0_post[static_cast<std::size_t>(coord.n)];
      const double mean_eta = post.shape / post.rate;
      const double ln_eta = gamma_mean_log(post);
      // Conjugate terms only: the shape part of the variance prior plus the
      // rate prior. The order-dependent Bessel normalizer is left out, in
      // line with the Gamma-form coordinate update.
      return (0.5 * hyper.lambda0 + hyper.kappa1 - 1.0) * ln_eta -
             (hyper.kappa2 + 0.5 * state.mean_z(coord.n)) * mean_eta;
    }
    case CoordId::Kind::tau: {
      const double mean_tau = state.tau_post.shape / state.tau_post.rate;
      const double ln_tau = gamma_mean_log(state.tau_post);
      double e_res = 0.0;
      for (int k = 0; k < K; ++k) {
        e_res += expected_residual_energy(state, signals, pilots, k);
      }
      return (dims_klm(signals) + hyper.c - 1.0) * ln_tau -
             mean_tau * (hyper.d + e_res);
    }
  }
  throw std::invalid_argument("unknown coordinate kind");
}

GhviResult run_ghvi_from(VariationalState state,
                         const simkit::ReceivedSignals& signals,
                         const simkit::PilotMatrix& pilots,
                         const SolverOptions& opts, const Hyperparams& hyper) {
  if (!(hyper.kappa1 > -0.5 * hyper.lambda0) || !(hyper.kappa2 > 0.0)) {
    throw std::invalid_argument(
        "rate-prior validity needs kappa1 > -lambda0/2 and kappa2 > 0");
  }

  GhviResult res;
  const int K = static_cast<int>(signals.y.size());
  const int N = static_cast<int>(pilots.s.cols());

  std::vector<Eigen::MatrixXcd> prev_recon(
      static_cast<std::size_t>(K),
      Eigen::MatrixXcd::Zero(signals.y[0].rows(), signals.y[0].cols()));

  for (int iter = 1; iter <= opts.max_outer_iters; ++iter) {
    ResidualWorkspace ws = solver::detail::make_residual(
        signals, pilots, state.mu_gamma, state.mu_g);
    for (int k = 0; k < K; ++k) {
      for (int n = 0; n < N; ++n) update_q_gamma_at(state, ws, pilots, k, n);
    }
    for (int k = 0; k < K; ++k) {
      for (int n = 0; n < N; ++n) update_q_g_at(state, ws, pilots, k, n);
    }
    for (int n = 0; n < N; ++n) update_q_z_at(state, hyper, n);
    for (int n = 0; n < N; ++n) update_q_eta_at(state, hyper, n);
    update_q_tau_with_ws(state, signals, ws, hyper);

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

    solver::IterationRecord rec;
    rec.iter = iter;
    rec.rel_change = rel;
    res.trace.records.push_back(rec);

    if (rel < opts.rel_tol) {
      res.trace.converged = true;
      break;
    }
  }

  res.scores = state.mean_z;
  res.state = std::move(state);
  return res;
}

GhviResult run_ghvi(const simkit::ReceivedSignals& signals,
                    const simkit::PilotMatrix& pilots,
                    const SolverOptions& opts, const Hyperparams& hyper) {
  return run_ghvi_from(init_state(signals, pilots, opts, hyper), signals,
                       pilots, opts, hyper);
}

}  // namespace cfad::ghvi
