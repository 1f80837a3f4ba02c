#include "cfad/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace cfad::simkit {

namespace {

constexpr double kMinDistanceKm = 1e-3;  // 1 m

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

void check_config(const SystemConfig& cfg) {
  if (cfg.K < 1 || cfg.M < 1 || cfg.N < 1 || cfg.L < 1) {
    throw std::invalid_argument("system dimensions must be at least 1");
  }
  if (!(cfg.epsilon > 0.0) || !(cfg.epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  }
  if (!(cfg.area_km > 0.0)) {
    throw std::invalid_argument("area_km must be positive");
  }
  if (cfg.rician_fraction < 0.0 || cfg.rician_fraction > 1.0) {
    throw std::invalid_argument("rician_fraction must lie in [0, 1]");
  }
  if (cfg.rician_factor_max < 0.0) {
    throw std::invalid_argument("rician_factor_max must be nonnegative");
  }
}

// One unit-variance complex normal sample (variance 1/2 per component).
std::complex<double> complex_normal(Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double re = n01(rng);
  const double im = n01(rng);
  return {re / std::numbers::sqrt2, im / std::numbers::sqrt2};
}

}  // namespace

double pathloss_db(double d_km) {
  return -128.1 - 36.7 * std::log10(d_km);
}

Scenario build_scenario(const SystemConfig& cfg, Rng& rng) {
  check_config(cfg);
  const int K = cfg.K;
  const int N = cfg.N;

  Scenario sc;
  sc.ap_positions.resize(K, 2);
  sc.user_positions.resize(N, 2);
  sc.distances.resize(K, N);
  sc.beta.resize(K, N);
  sc.shadowing.resize(K, N);
  sc.tx_power.resize(N);
  sc.effective_beta.resize(K, N);

  // Access points on a near-square grid of cell centers, row-major.
  const int rows = std::max(1, static_cast<int>(std::floor(std::sqrt(
                                    static_cast<double>(K)))));
  const int cols = (K + rows - 1) / rows;
  for (int k = 0; k < K; ++k) {
    const int r = k / cols;
    const int c = k % cols;
    sc.ap_positions(k, 0) = (c + 0.5) * cfg.area_km / cols;
    sc.ap_positions(k, 1) = (r + 0.5) * cfg.area_km / rows;
  }

  std::uniform_real_distribution<double> unif(0.0, cfg.area_km);
  std::normal_distribution<double> shadow(0.0, 4.0);

  for (int n = 0; n < N; ++n) {
    // Redraw until the user clears every access point by 1 m.
    for (;;) {
      const double x = unif(rng);
      const double y = unif(rng);
      bool ok = true;
      for (int k = 0; k < K; ++k) {
        const double dx = x - sc.ap_positions(k, 0);
        const double dy = y - sc.ap_positions(k, 1);
        if (std::hypot(dx, dy) < kMinDistanceKm) {
          ok = false;
          break;
        }
      }
      if (ok) {
        sc.user_positions(n, 0) = x;
        sc.user_positions(n, 1) = y;
        break;
      }
    }
    for (int k = 0; k < K; ++k) {
      const double dx = sc.user_positions(n, 0) - sc.ap_positions(k, 0);
      const double dy = sc.user_positions(n, 1) - sc.ap_positions(k, 1);
      sc.distances(k, n) = std::hypot(dx, dy);
      sc.shadowing(k, n) = shadow(rng);
      sc.beta(k, n) =
          db_to_linear(pathloss_db(sc.distances(k, n)) + sc.shadowing(k, n));
    }
  }

  // Per-user power control against the strongest link, with a hard cap.
  // effective_beta is expressed relative to the noise power, so it reads as
  // the per-link SNR and the strongest link of an uncapped user sits exactly
  // at the target.
  const double noise_w = db_to_linear(cfg.noise_power_dbm - 30.0);
  const double cap_w = db_to_linear(cfg.max_tx_power_dbm - 30.0);
  const double snr_lin = db_to_linear(cfg.snr_target_db);
  for (int n = 0; n < N; ++n) {
    const double best = sc.beta.col(n).maxCoeff();
    sc.tx_power(n) = std::min(cap_w, snr_lin * noise_w / best);
    sc.effective_beta.col(n) = sc.tx_power(n) / noise_w * sc.beta.col(n);
  }
  sc.assumed_noise = 1.0;
  return sc;
}

std::vector<std::uint8_t> draw_activity(const SystemConfig& cfg, Rng& rng) {
  check_config(cfg);
  std::bernoulli_distribution flip(cfg.epsilon);
  std::vector<std::uint8_t> a(static_cast<std::size_t>(cfg.N));
  for (auto& bit : a) bit = flip(rng) ? 1 : 0;
  return a;
}

ChannelRealization draw_channels(const Scenario& sc, const SystemConfig& cfg,
                                 const std::vector<std::uint8_t>& activity,
                                 Rng& rng) {
  check_config(cfg);
  const int K = cfg.K;
  const int M = cfg.M;
  const int N = cfg.N;
  if (sc.effective_beta.rows() != K || sc.effective_beta.cols() != N ||
      static_cast<int>(activity.size()) != N) {
    throw std::invalid_argument("scenario/activity dimensions disagree");
  }

  ChannelRealization ch;
  ch.activity = activity;
  ch.rician_factor = Eigen::MatrixXd::Zero(K, N);
  ch.los_angle = Eigen::MatrixXd::Zero(K, N);
  ch.g.assign(static_cast<std::size_t>(K), Eigen::MatrixXcd(M, N));

  // Pick which users carry a line-of-sight part: a sorted sample without
  // replacement of round(fraction * N) indices.
  const int n_los = static_cast<int>(std::lround(cfg.rician_fraction * N));
  std::vector<int> idx(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) idx[static_cast<std::size_t>(n)] = n;
  for (int i = 0; i < n_los; ++i) {
    std::uniform_int_distribution<int> pick(i, N - 1);
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<std::uint8_t> has_los(static_cast<std::size_t>(N), 0);
  for (int i = 0; i < n_los; ++i) has_los[static_cast<std::size_t>(idx[i])] = 1;

  std::uniform_real_distribution<double> factor(0.0, cfg.rician_factor_max);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);

  for (int k = 0; k < K; ++k) {
    for (int n = 0; n < N; ++n) {
      Eigen::VectorXcd scatter(M);
      for (int m = 0; m < M; ++m) scatter(m) = complex_normal(rng);
      if (has_los[static_cast<std::size_t>(n)]) {
        const double kr = factor(rng);
        const double th = angle(rng);
        ch.rician_factor(k, n) = kr;
        ch.los_angle(k, n) = th;
        Eigen::VectorXcd steer(M);
        for (int m = 0; m < M; ++m) {
          steer(m) = std::polar(1.0, th * m);
        }
        ch.g[static_cast<std::size_t>(k)].col(n) =
            std::sqrt(kr / (kr + 1.0)) * steer +
            std::sqrt(1.0 / (kr + 1.0)) * scatter;
      } else {
        ch.g[static_cast<std::size_t>(k)].col(n) = scatter;
      }
    }
  }
  return ch;
}

PilotMatrix generate_pilots(const SystemConfig& cfg, Rng& rng) {
  check_config(cfg);
  PilotMatrix p;
  p.s.resize(cfg.L, cfg.N);
  for (int n = 0; n < cfg.N; ++n) {
    for (int l = 0; l < cfg.L; ++l) p.s(l, n) = complex_normal(rng);
    const double norm = p.s.col(n).norm();
    p.s.col(n) *= std::sqrt(static_cast<double>(cfg.L)) / norm;
  }
  return p;
}

ReceivedSignals synthesize(const Scenario& sc, const ChannelRealization& ch,
                           const PilotMatrix& pilots, const SystemConfig& cfg,
                           Rng& rng) {
  check_config(cfg);
  const int K = cfg.K;
  const int M = cfg.M;
  const int N = cfg.N;
  const int L = cfg.L;
  if (pilots.s.rows() != L || pilots.s.cols() != N ||
      static_cast<int>(ch.g.size()) != K || ch.g[0].rows() != M ||
      ch.g[0].cols() != N || sc.effective_beta.rows() != K) {
    throw std::invalid_argument("signal synthesis dimensions disagree");
  }

  ReceivedSignals out;
  out.noise_power = 1.0;
  out.y.assign(static_cast<std::size_t>(K), Eigen::MatrixXcd::Zero(L, M));
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXcd& yk = out.y[static_cast<std::size_t>(k)];
    for (int n = 0; n < N; ++n) {
      if (!ch.activity[static_cast<std::size_t>(n)]) continue;
      const double amp = std::sqrt(sc.effective_beta(k, n));
      yk.noalias() += amp * pilots.s.col(n) *
                      ch.g[static_cast<std::size_t>(k)].col(n).transpose();
    }
    for (int m = 0; m < M; ++m) {
      for (int l = 0; l < L; ++l) yk(l, m) += complex_normal(rng);
    }
  }
  return out;
}

Scenario perturb_knowledge(const Scenario& sc, const PerturbationSpec& spec,
                           Rng& rng) {
  if (spec.pathloss_error_db < 0.0 || spec.noise_error_std_dbm < 0.0) {
    throw std::invalid_argument("perturbation magnitudes must be nonnegative");
  }
  Scenario out = sc;
  if (spec.pathloss_error_db > 0.0) {
    std::uniform_real_distribution<double> err(0.0, spec.pathloss_error_db);
    for (int k = 0; k < sc.beta.rows(); ++k) {
      for (int n = 0; n < sc.beta.cols(); ++n) {
        const double factor = db_to_linear(err(rng));
        out.beta(k, n) *= factor;
        out.effective_beta(k, n) *= factor;
      }
    }
  }
  if (spec.noise_error_std_dbm > 0.0) {
    std::normal_distribution<double> err(0.0, spec.noise_error_std_dbm);
    out.assumed_noise = sc.assumed_noise * db_to_linear(err(rng));
  }
  return out;
}

}  // namespace cfad::simkit
