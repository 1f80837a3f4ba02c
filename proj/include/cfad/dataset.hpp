#pragma once

#include "cfad/simkit.hpp"
#include "cfad/tomlmini.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace cfad::dataset {

// On-disk bundle for one simulated drop.
//
// Layout of a dataset directory:
//   meta        key/value metadata: [system] holds every SystemConfig field,
//               [perturbation] appears when any knowledge error is configured
//   pilots.csv  L rows, 2N columns, re/im interleaved per user
//   Y_<k>.csv   per access point, L rows, 2M columns, re/im interleaved
//   truth.csv   header row, then one row per user:
//               user, activity, effective_beta_0 .. effective_beta_{K-1}
//
// All reals are written with enough digits to round-trip exactly.
struct Dataset {
  simkit::SystemConfig config;
  simkit::PerturbationSpec perturbation;  // all-zero when none configured
  simkit::PilotMatrix pilots;
  simkit::ReceivedSignals signals;
  std::vector<std::uint8_t> activity;
  Eigen::MatrixXd effective_beta;  // K x N ground truth
};

void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& dir);

// Codecs between config tables and the simulator types; key names mirror the
// struct fields. Shared by the dataset metadata and the experiment configs.
void encode_system(tomlmini::Table& t, const simkit::SystemConfig& cfg);
simkit::SystemConfig decode_system(const tomlmini::Table& t);
void encode_perturbation(tomlmini::Table& t,
                         const simkit::PerturbationSpec& spec);
simkit::PerturbationSpec decode_perturbation(const tomlmini::Table& t);

// %.17g rendering used by every CSV writer, so that reading a file back
// reproduces the doubles bit for bit.
std::string format_real(double v);

}  // namespace cfad::dataset
