#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace cfad::simkit {

using Rng = std::mt19937_64;

// System-level knobs. The defaults are the reduced scale used by the Monte
// Carlo test batches; the full-scale setting of interest is K=12, M=8, N=200,
// L=30 over a 3 km by 3 km area.
struct SystemConfig {
  int K = 4;    // access points
  int M = 4;    // antennas per access point
  int N = 50;   // users
  int L = 20;   // pilot length in symbols
  double epsilon = 0.1;            // per-user activity probability
  double snr_target_db = 6.0;      // largest per-link SNR after power control
  double max_tx_power_dbm = 23.0;  // transmit power cap
  double noise_power_dbm = -109.0;
  double area_km = 3.0;            // square side length
  double rician_fraction = 0.0;    // share of users with a line-of-sight part
  double rician_factor_max = 0.6;  // per-link factor drawn from U(0, this)
  std::uint64_t seed = 1;
};

// Geometry and large-scale gains for one drop. All signal synthesis happens
// in noise-normalized units: effective_beta(k,n) = tx_power(n) * beta(k,n) /
// noise watts is the per-link SNR, and receiver noise has unit variance.
struct Scenario {
  Eigen::MatrixX2d ap_positions;    // K x 2, km
  Eigen::MatrixX2d user_positions;  // N x 2, km
  Eigen::MatrixXd distances;        // K x N, km
  Eigen::MatrixXd beta;             // K x N linear gain, pathloss + shadowing
  Eigen::MatrixXd shadowing;        // K x N, dB
  Eigen::VectorXd tx_power;         // N, watts
  Eigen::MatrixXd effective_beta;   // K x N, noise-normalized received gain
  double assumed_noise = 1.0;       // noise level handed to baselines, same
                                    // normalized units as effective_beta
};

// L x N pilot matrix; every column is scaled to squared norm L.
struct PilotMatrix {
  Eigen::MatrixXcd s;
};

// Small-scale channels for one drop. g[k] is M x N with column n the channel
// from user n to access point k; E[|g|^2] = M per link with or without the
// line-of-sight component.
struct ChannelRealization {
  std::vector<Eigen::MatrixXcd> g;
  std::vector<std::uint8_t> activity;  // N, 1 = transmitting
  Eigen::MatrixXd rician_factor;       // K x N, 0 = pure scattering
  Eigen::MatrixXd los_angle;           // K x N, radians
};

// Antenna-domain observations, y[k] is L x M. noise_power is the linear
// receiver noise variance in the synthesis units (1 after normalization).
struct ReceivedSignals {
  std::vector<Eigen::MatrixXcd> y;
  double noise_power = 1.0;
};

// Knowledge-perturbation protocol: each assumed pathloss gains an independent
// U(0, pathloss_error_db) dB offset and the assumed noise power an independent
// N(0, noise_error_std_dbm^2) dBm offset. The optional overrides let trial
// batches violate the nominal activity and scattering assumptions.
struct PerturbationSpec {
  double pathloss_error_db = 0.0;
  double noise_error_std_dbm = 0.0;
  std::optional<double> rician_fraction_override;
  std::optional<std::pair<double, double>> epsilon_range;
};

// Free-space reference pathloss in dB at distance d_km kilometers.
double pathloss_db(double d_km);

// Draws user positions uniformly over the area (re-drawn until every access
// point is at least 1 m away), puts the access points on a near-square grid,
// applies log-normal shadowing with 4 dB deviation, and runs per-user power
// control: the strongest link of each user hits snr_target_db unless the
// power cap binds first.
Scenario build_scenario(const SystemConfig& cfg, Rng& rng);

// Independent activity bits with probability epsilon.
std::vector<std::uint8_t> draw_activity(const SystemConfig& cfg, Rng& rng);

// Draws small-scale channels. A rician_fraction share of users, chosen
// uniformly, gets per-link factors U(0, rician_factor_max) mixing a uniform
// linear array steering vector with the scattered part.
ChannelRealization draw_channels(const Scenario& sc, const SystemConfig& cfg,
                                 const std::vector<std::uint8_t>& activity,
                                 Rng& rng);

// Independent complex normal pilot entries, columns rescaled to norm sqrt(L).
PilotMatrix generate_pilots(const SystemConfig& cfg, Rng& rng);

// y[k] = sum_n a_n sqrt(effective_beta(k,n)) s_n g_{kn}^T + unit-variance
// complex Gaussian noise.
ReceivedSignals synthesize(const Scenario& sc, const ChannelRealization& ch,
                           const PilotMatrix& pilots, const SystemConfig& cfg,
                           Rng& rng);

// Returns a copy of the scenario whose beta/effective_beta and assumed noise
// carry the knowledge errors of `spec`. Ground truth inputs stay untouched.
Scenario perturb_knowledge(const Scenario& sc, const PerturbationSpec& spec,
                           Rng& rng);

}  // namespace cfad::simkit
