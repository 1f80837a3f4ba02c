#include "cfad/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cfad::dataset {

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return in;
}

std::vector<double> parse_row(const std::string& line,
                              const std::filesystem::path& p) {
  std::vector<double> row;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) comma = line.size();
    const std::string cell = line.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      row.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw std::runtime_error("bad numeric cell '" + cell + "' in " +
                               p.string());
    }
    pos = comma + 1;
    if (comma == line.size()) break;
  }
  return row;
}

void write_complex_csv(const std::filesystem::path& p,
                       const Eigen::MatrixXcd& m) {
  std::ofstream out = open_out(p);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_real(m(r, c).real()) << ',' << format_real(m(r, c).imag());
    }
    out << '\n';
  }
}

Eigen::MatrixXcd read_complex_csv(const std::filesystem::path& p,
                                  Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in = open_in(p);
  Eigen::MatrixXcd m(rows, cols);
  std::string line;
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("truncated file " + p.string());
    }
    const std::vector<double> row = parse_row(line, p);
    if (static_cast<Eigen::Index>(row.size()) != 2 * cols) {
      throw std::runtime_error("row width mismatch in " + p.string());
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = {row[static_cast<std::size_t>(2 * c)],
                 row[static_cast<std::size_t>(2 * c + 1)]};
    }
  }
  return m;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void encode_system(tomlmini::Table& t, const simkit::SystemConfig& cfg) {
  t.set_int("system", "K", cfg.K);
  t.set_int("system", "M", cfg.M);
  t.set_int("system", "N", cfg.N);
  t.set_int("system", "L", cfg.L);
  t.set_real("system", "epsilon", cfg.epsilon);
  t.set_real("system", "snr_target_db", cfg.snr_target_db);
  t.set_real("system", "max_tx_power_dbm", cfg.max_tx_power_dbm);
  t.set_real("system", "noise_power_dbm", cfg.noise_power_dbm);
  t.set_real("system", "area_km", cfg.area_km);
  t.set_real("system", "rician_fraction", cfg.rician_fraction);
  t.set_real("system", "rician_factor_max", cfg.rician_factor_max);
  t.set_int("system", "seed", static_cast<std::int64_t>(cfg.seed));
}

simkit::SystemConfig decode_system(const tomlmini::Table& t) {
  simkit::SystemConfig cfg;
  cfg.K = static_cast<int>(t.get_int("system", "K", cfg.K));
  cfg.M = static_cast<int>(t.get_int("system", "M", cfg.M));
  cfg.N = static_cast<int>(t.get_int("system", "N", cfg.N));
  cfg.L = static_cast<int>(t.get_int("system", "L", cfg.L));
  cfg.epsilon = t.get_real("system", "epsilon", cfg.epsilon);
  cfg.snr_target_db = t.get_real("system", "snr_target_db", cfg.snr_target_db);
  cfg.max_tx_power_dbm =
      t.get_real("system", "max_tx_power_dbm", cfg.max_tx_power_dbm);
  cfg.noise_power_dbm =
      t.get_real("system", "noise_power_dbm", cfg.noise_power_dbm);
  cfg.area_km = t.get_real("system", "area_km", cfg.area_km);
  cfg.rician_fraction =
      t.get_real("system", "rician_fraction", cfg.rician_fraction);
  cfg.rician_factor_max =
      t.get_real("system", "rician_factor_max", cfg.rician_factor_max);
  cfg.seed = static_cast<std::uint64_t>(
      t.get_int("system", "seed", static_cast<std::int64_t>(cfg.seed)));
  return cfg;
}

void encode_perturbation(tomlmini::Table& t,
                         const simkit::PerturbationSpec& spec) {
  t.set_real("perturbation", "pathloss_error_db", spec.pathloss_error_db);
  t.set_real("perturbation", "noise_error_std_dbm", spec.noise_error_std_dbm);
  if (spec.rician_fraction_override) {
    t.set_real("perturbation", "rician_fraction_override",
               *spec.rician_fraction_override);
  }
  if (spec.epsilon_range) {
    t.set_real("perturbation", "epsilon_min", spec.epsilon_range->first);
    t.set_real("perturbation", "epsilon_max", spec.epsilon_range->second);
  }
}

simkit::PerturbationSpec decode_perturbation(const tomlmini::Table& t) {
  simkit::PerturbationSpec spec;
  spec.pathloss_error_db =
      t.get_real("perturbation", "pathloss_error_db", 0.0);
  spec.noise_error_std_dbm =
      t.get_real("perturbation", "noise_error_std_dbm", 0.0);
  if (t.has("perturbation", "rician_fraction_override")) {
    spec.rician_fraction_override =
        t.get_real("perturbation", "rician_fraction_override");
  }
  if (t.has("perturbation", "epsilon_min") ||
      t.has("perturbation", "epsilon_max")) {
    spec.epsilon_range = {t.get_real("perturbation", "epsilon_min"),
                          t.get_real("perturbation", "epsilon_max")};
  }
  return spec;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  const int K = ds.config.K;
  const int N = ds.config.N;
  if (static_cast<int>(ds.signals.y.size()) != K ||
      static_cast<int>(ds.activity.size()) != N ||
      ds.effective_beta.rows() != K || ds.effective_beta.cols() != N) {
    throw std::invalid_argument("dataset dimensions disagree with its config");
  }
  std::filesystem::create_directories(dir);

  tomlmini::Table meta;
  encode_system(meta, ds.config);
  const bool perturbed = ds.perturbation.pathloss_error_db > 0.0 ||
                         ds.perturbation.noise_error_std_dbm > 0.0 ||
                         ds.perturbation.rician_fraction_override.has_value() ||
                         ds.perturbation.epsilon_range.has_value();
  if (perturbed) encode_perturbation(meta, ds.perturbation);
  open_out(dir / "meta") << meta.serialize();

  write_complex_csv(dir / "pilots.csv", ds.pilots.s);
  for (int k = 0; k < K; ++k) {
    write_complex_csv(dir / ("Y_" + std::to_string(k) + ".csv"),
                      ds.signals.y[static_cast<std::size_t>(k)]);
  }

  std::ofstream truth = open_out(dir / "truth.csv");
  truth << "user,activity";
  for (int k = 0; k < K; ++k) truth << ",effective_beta_" << k;
  truth << '\n';
  for (int n = 0; n < N; ++n) {
    truth << n << ',' << int(ds.activity[static_cast<std::size_t>(n)]);
    for (int k = 0; k < K; ++k) {
      truth << ',' << format_real(ds.effective_beta(k, n));
    }
    truth << '\n';
  }
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  const tomlmini::Table meta = tomlmini::Table::parse_file(dir / "meta");
  ds.config = decode_system(meta);
  ds.perturbation = decode_perturbation(meta);

  const int K = ds.config.K;
  const int M = ds.config.M;
  const int N = ds.config.N;
  const int L = ds.config.L;

  ds.pilots.s = read_complex_csv(dir / "pilots.csv", L, N);
  ds.signals.noise_power = 1.0;
  ds.signals.y.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    ds.signals.y.push_back(
        read_complex_csv(dir / ("Y_" + std::to_string(k) + ".csv"), L, M));
  }

  std::ifstream truth = open_in(dir / "truth.csv");
  std::string line;
  if (!std::getline(truth, line)) {
    throw std::runtime_error("empty truth.csv in " + dir.string());
  }
  ds.activity.resize(static_cast<std::size_t>(N));
  ds.effective_beta.resize(K, N);
  for (int n = 0; n < N; ++n) {
    if (!std::getline(truth, line)) {
      throw std::runtime_error("truncated truth.csv in " + dir.string());
    }
    const std::vector<double> row = parse_row(line, dir / "truth.csv");
    if (static_cast<int>(row.size()) != 2 + K) {
      throw std::runtime_error("row width mismatch in truth.csv");
    }
    if (static_cast<int>(row[0]) != n) {
      throw std::runtime_error("user index out of order in truth.csv");
    }
    ds.activity[static_cast<std::size_t>(n)] =
        row[1] != 0.0 ? std::uint8_t{1} : std::uint8_t{0};
    for (int k = 0; k < K; ++k) {
      ds.effective_beta(k, n) = row[static_cast<std::size_t>(2 + k)];
    }
  }
  return ds;
}

}  // namespace cfad::dataset
