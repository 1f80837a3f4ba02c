#include "cfad/covbase.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfad::covbase {

namespace {

constexpr int kGridPoints = 24;
constexpr int kGoldenIters = 80;
constexpr int kRefreshEvery = 100;

void check_inputs(const simkit::ReceivedSignals& signals,
                  const CovKnowledge& knowledge) {
  const int K = static_cast<int>(signals.y.size());
  if (knowledge.beta.rows() != K ||
      knowledge.beta.cols() != knowledge.pilots.s.cols() ||
      knowledge.pilots.s.rows() != signals.y[0].rows()) {
    throw std::invalid_argument("knowledge dimensions disagree with signals");
  }
  if (!(knowledge.noise_var > 0.0) || (knowledge.beta.array() <= 0.0).any()) {
    throw std::invalid_argument("gains and noise variance must be positive");
  }
}

// Model covariance for one access point built directly from a.
Eigen::MatrixXcd build_q(const CovState& state, const CovKnowledge& knowledge,
                         int k) {
  const int L = static_cast<int>(knowledge.pilots.s.rows());
  const int N = static_cast<int>(knowledge.pilots.s.cols());
  Eigen::VectorXcd weights(N);
  for (int n = 0; n < N; ++n) weights(n) = state.a(n) * knowledge.beta(k, n);
  Eigen::MatrixXcd q = knowledge.pilots.s * weights.asDiagonal() *
                       knowledge.pilots.s.adjoint();
  q += knowledge.noise_var *
       Eigen::MatrixXcd::Identity(L, L);
  return q;
}

struct FreshTerms {
  double log_det = 0.0;
  double trace_term = 0.0;
  Eigen::MatrixXcd q_inv;
};

FreshTerms fresh_terms(const CovState& state, const CovKnowledge& knowledge,
                       int k) {
  const Eigen::MatrixXcd q = build_q(state, knowledge, k);
  const Eigen::LLT<Eigen::MatrixXcd> llt(q);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("model covariance lost positive definiteness");
  }
  FreshTerms out;
  const auto& lmat = llt.matrixLLT();
  for (int i = 0; i < q.rows(); ++i) {
    out.log_det += 2.0 * std::log(lmat(i, i).real());
  }
  out.q_inv = llt.solve(
      Eigen::MatrixXcd::Identity(q.rows(), q.cols()));
  out.trace_term =
      (out.q_inv * state.sample_cov[static_cast<std::size_t>(k)])
          .trace()
          .real();
  return out;
}

// Objective change along coordinate n as a function of the shift delta,
// expressed through the cached quadratic forms: u_k = s^H Q^{-1} s,
// w_k = (Q^{-1}s)^H S (Q^{-1}s).
double delta_objective(const Eigen::VectorXd& b, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& w, double delta) {
  double val = 0.0;
  for (int k = 0; k < b.size(); ++k) {
    const double t = delta * b(k);
    const double denom = 1.0 + t * u(k);
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    val += std::log1p(t * u(k)) - t * w(k) / denom;
  }
  return val;
}

double golden_minimize(const std::function<double(double)>& f, double a,
                       double b) {
  const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < kGoldenIters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace

CovState init_cov_state(const simkit::ReceivedSignals& signals,
                        const CovKnowledge& knowledge) {
  check_inputs(signals, knowledge);
  const int K = static_cast<int>(signals.y.size());
  const int L = static_cast<int>(signals.y[0].rows());
  const auto M = static_cast<double>(signals.y[0].cols());
  const int N = static_cast<int>(knowledge.pilots.s.cols());

  CovState st;
  st.a = Eigen::VectorXd::Zero(N);
  st.q_inv.assign(static_cast<std::size_t>(K),
                  Eigen::MatrixXcd::Identity(L, L) / knowledge.noise_var);
  st.sample_cov.reserve(static_cast<std::size_t>(K));
  st.log_det.resize(K);
  st.trace_term.resize(K);
  for (int k = 0; k < K; ++k) {
    const auto& yk = signals.y[static_cast<std::size_t>(k)];
    st.sample_cov.push_back(yk * yk.adjoint() / M);
    st.log_det(k) = L * std::log(knowledge.noise_var);
    st.trace_term(k) =
        st.sample_cov.back().trace().real() / knowledge.noise_var;
  }
  return st;
}

double cached_objective(const CovState& state) {
  return state.log_det.sum() + state.trace_term.sum();
}

double cov_objective(const CovState& state, const CovKnowledge& knowledge,
                     const simkit::ReceivedSignals& signals) {
  (void)signals;
  double total = 0.0;
  for (int k = 0; k < static_cast<int>(state.sample_cov.size()); ++k) {
    const FreshTerms ft = fresh_terms(state, knowledge, k);
    total += ft.log_det + ft.trace_term;
  }
  return total;
}

void refresh_caches(CovState& state, const CovKnowledge& knowledge) {
  for (int k = 0; k < static_cast<int>(state.sample_cov.size()); ++k) {
    FreshTerms ft = fresh_terms(state, knowledge, k);
    state.q_inv[static_cast<std::size_t>(k)] = std::move(ft.q_inv);
    state.log_det(k) = ft.log_det;
    state.trace_term(k) = ft.trace_term;
  }
  state.updates_since_refresh = 0;
}

double cov_coord_update(CovState& state, const CovKnowledge& knowledge,
                        int n) {
  const int K = static_cast<int>(state.sample_cov.size());
  const Eigen::VectorXcd s = knowledge.pilots.s.col(n);

  Eigen::VectorXd b(K);
  Eigen::VectorXd u(K);
  Eigen::VectorXd w(K);
  std::vector<Eigen::VectorXcd> v(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    b(k) = knowledge.beta(k, n);
    v[ku] = state.q_inv[ku] * s;
    u(k) = std::real(s.dot(v[ku]));
    w(k) = std::real(v[ku].dot(state.sample_cov[ku] * v[ku]));
  }

  const double lo = -state.a(n);
  // Each per-AP term is minimized at (w/u - 1)/(b u); the sum's minimizer
  // lies between the smallest and largest of these, intersected with the
  // nonnegativity constraint.
  double hi = lo;
  for (int k = 0; k < K; ++k) {
    hi = std::max(hi, (w(k) / u(k) - 1.0) / (b(k) * u(k)));
  }
  hi = std::max(hi, 0.0);

  auto f = [&](double delta) { return delta_objective(b, u, w, delta); };

  double best_delta = 0.0;
  double best_val = 0.0;  // f(0) = 0 by construction
  if (hi > lo) {
    int best_idx = 0;
    double best_grid = std::numeric_limits<double>::infinity();
    double grid[kGridPoints];
    for (int i = 0; i < kGridPoints; ++i) {
      const double t = static_cast<double>(i) / (kGridPoints - 1);
      grid[i] = lo + (hi - lo) * t * t;
      const double val = f(grid[i]);
      if (val < best_grid) {
        best_grid = val;
        best_idx = i;
      }
    }
    const double bracket_lo = grid[std::max(best_idx - 1, 0)];
    const double bracket_hi = grid[std::min(best_idx + 1, kGridPoints - 1)];
    const double refined = golden_minimize(f, bracket_lo, bracket_hi);
    const double refined_val = f(refined);
    if (refined_val < best_val) {
      best_val = refined_val;
      best_delta = refined;
    }
    if (best_grid < best_val) {
      best_val = best_grid;
      best_delta = grid[best_idx];
    }
  } else if (lo < 0.0) {
    const double val = f(lo);
    if (val < best_val) {
      best_val = val;
      best_delta = lo;
    }
  }

  if (best_delta == 0.0) return state.a(n);

  for (int k = 0; k < K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double t = best_delta * b(k);
    const double denom = 1.0 + t * u(k);
    state.q_inv[ku].noalias() -=
        (t / denom) * (v[ku] * v[ku].adjoint());
    state.log_det(k) += std::log1p(t * u(k));
    state.trace_term(k) -= t * w(k) / denom;
  }
  state.a(n) = std::max(state.a(n) + best_delta, 0.0);
  if (++state.updates_since_refresh >= kRefreshEvery) {
    refresh_caches(state, knowledge);
  }
  return state.a(n);
}

CovResult run_cov(const simkit::ReceivedSignals& signals,
                  const CovKnowledge& knowledge, const CovOptions& opts) {
  CovState state = init_cov_state(signals, knowledge);
  const int N = static_cast<int>(knowledge.pilots.s.cols());

  CovResult res;
  double prev_obj = cached_objective(state);
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    for (int n = 0; n < N; ++n) cov_coord_update(state, knowledge, n);
    const double obj = cached_objective(state);

    if (!std::isfinite(obj) || !state.a.allFinite()) {
      res.trace.aborted = true;
      res.trace.abort_reason =
          "non-finite objective at sweep " + std::to_string(sweep);
      break;
    }

    const double rel =
        std::abs(obj - prev_obj) / std::max(std::abs(prev_obj), 1e-300);
    solver::IterationRecord rec;
    rec.iter = sweep;
    rec.objective = obj;
    rec.rel_change = rel;
    res.trace.records.push_back(rec);
    prev_obj = obj;

    if (rel < opts.rel_tol) {
      res.trace.converged = true;
      break;
    }
  }
  res.scores = state.a;
  return res;
}

}  // namespace cfad::covbase
