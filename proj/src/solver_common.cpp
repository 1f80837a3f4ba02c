#include "cfad/solver_common.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace cfad::solver {

std::vector<Eigen::MatrixXcd> draw_init_vectors(int K, int M, int N,
                                                std::uint64_t seed) {
  simkit::Rng rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Eigen::MatrixXcd> out(static_cast<std::size_t>(K));
  const double scale = 1.0 / std::sqrt(2.0);
  for (auto& mat : out) {
    mat.resize(M, N);
    for (int n = 0; n < N; ++n) {
      for (int m = 0; m < M; ++m) {
        const double re = n01(rng);
        const double im = n01(rng);
        mat(m, n) = std::complex<double>(re * scale, im * scale);
      }
    }
  }
  return out;
}

double relative_change(const std::vector<Eigen::MatrixXcd>& cur,
                       const std::vector<Eigen::MatrixXcd>& prev) {
  if (cur.size() != prev.size()) {
    throw std::invalid_argument("reconstruction sizes disagree");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < cur.size(); ++k) {
    num += (cur[k] - prev[k]).squaredNorm();
    den += prev[k].squaredNorm();
  }
  if (den == 0.0) {
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::sqrt(num / den);
}

namespace detail {

ResidualWorkspace make_residual(const simkit::ReceivedSignals& signals,
                                const simkit::PilotMatrix& pilots,
                                const Eigen::MatrixXd& coef,
                                const std::vector<Eigen::MatrixXcd>& vecs) {
  const int K = static_cast<int>(signals.y.size());
  const int N = static_cast<int>(pilots.s.cols());
  if (coef.rows() != K || coef.cols() != N ||
      static_cast<int>(vecs.size()) != K) {
    throw std::invalid_argument("residual inputs disagree in shape");
  }
  ResidualWorkspace ws;
  ws.pilot_sq.resize(N);
  for (int n = 0; n < N; ++n) ws.pilot_sq(n) = pilots.s.col(n).squaredNorm();
  ws.residual.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXcd r = signals.y[static_cast<std::size_t>(k)];
    for (int n = 0; n < N; ++n) {
      const double c = coef(k, n);
      if (c == 0.0) continue;
      r.noalias() -= c * pilots.s.col(n) *
                     vecs[static_cast<std::size_t>(k)].col(n).transpose();
    }
    ws.residual.push_back(std::move(r));
  }
  return ws;
}

void shift_coef(ResidualWorkspace& ws, const simkit::PilotMatrix& pilots,
                const Eigen::MatrixXcd& vecs_k, int k, int n, double old_coef,
                double new_coef) {
  const double delta = new_coef - old_coef;
  if (delta == 0.0) return;
  ws.residual[static_cast<std::size_t>(k)].noalias() -=
      delta * pilots.s.col(n) * vecs_k.col(n).transpose();
}

void shift_vec(ResidualWorkspace& ws, const simkit::PilotMatrix& pilots,
               double coef, int k, int n, const Eigen::VectorXcd& old_vec,
               const Eigen::VectorXcd& new_vec) {
  if (coef == 0.0) return;
  ws.residual[static_cast<std::size_t>(k)].noalias() -=
      coef * pilots.s.col(n) * (new_vec - old_vec).transpose();
}

std::vector<Eigen::MatrixXcd> reconstruction(
    const simkit::ReceivedSignals& signals, const ResidualWorkspace& ws) {
  std::vector<Eigen::MatrixXcd> x;
  x.reserve(ws.residual.size());
  for (std::size_t k = 0; k < ws.residual.size(); ++k) {
    x.push_back(signals.y[k] - ws.residual[k]);
  }
  return x;
}

}  // namespace detail

}  // namespace cfad::solver
