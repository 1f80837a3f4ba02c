#pragma once

namespace cfad::specfun {

// Scale parameters this small are clamped up before any Bessel evaluation so
// ratios of K_nu stay representable.
inline constexpr double kParamFloor = 1e-12;

// Generalized inverse Gaussian parameter triple:
//   p(z) propto z^(lambda-1) * exp(-(eta*z + psi/z)/2),  z > 0.
// eta and psi must be positive and finite; lambda is any finite real.
struct GigParams {
  double eta = 1.0;
  double psi = 1.0;
  double lambda = 0.0;
};

// Gamma distribution in shape/rate form, mean = shape/rate.
struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;
};

// Hyper-parameters of the scalar Gaussian scale mixture whose mixing density
// is GigParams{eta0, psi0, lambda0}.
struct GhHyper {
  double eta0 = 1.0;
  double psi0 = 1.0;
  double lambda0 = 0.0;
};

struct GigMoments {
  double mean = 0.0;      // E[z]
  double inv_mean = 0.0;  // E[1/z]
};

// Bessel index convention for E[1/z]. `standard` uses K_{lambda-1}/K_lambda.
// `shifted` uses K_{lambda+1}/K_lambda instead and exceeds the standard value
// by exactly 2*lambda/psi; it is kept selectable so both can be benchmarked.
enum class InvMeanConvention { standard, shifted };

// ln K_nu(x) for real order nu and x > 0, evaluated in the log domain so that
// large orders and small arguments do not overflow. Uses K_{-nu} = K_nu, a
// series for x <= 2 and a continued fraction for x > 2 on the base order in
// [-1/2, 1/2], then an upward order recurrence on log values. Orders with
// |nu| > 1e4 are rejected as outside the supported range.
double log_bessel_k(double nu, double x);

// E[z] and E[1/z] of a GIG distribution via Bessel ratios. eta and psi are
// clamped to kParamFloor before evaluation.
GigMoments gig_moments(const GigParams& p,
                       InvMeanConvention conv = InvMeanConvention::standard);

// Normalized log-density of the GIG distribution at z > 0.
double gig_logpdf(double z, const GigParams& p);

// Log-density of the scalar marginal obtained by integrating a zero-mean
// Gaussian with variance z against the GIG mixing density:
//   ln p(gamma) = ln(eta)/4 - (lambda0/2) ln(psi0)
//              + (lambda0/2 - 1/4) ln(psi0 + gamma^2)
//              + ln K_{lambda0-1/2}(sqrt(eta0 (psi0 + gamma^2)))
//              - ln K_{lambda0}(sqrt(eta0 psi0)) - ln(2 pi)/2.
double gh_marginal_logpdf(double gamma, const GhHyper& h);

// Logarithmic derivative of the gamma function, x > 0.
double digamma(double x);

}  // namespace cfad::specfun
