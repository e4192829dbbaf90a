#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coxperc/measures.hpp"

namespace coxperc {

struct EstimateWithCI {
  double mean = 0.0;
  double std_error = 0.0;
  int replicates = 0;
  /// Sum of Palm weights; equals `replicates` for unweighted estimates.
  double effective_weight_sum = 0.0;
  std::uint64_t seed = 0;
  bool flagged = false;
};

/// sum(w y) / sum(w) with delta-method standard error. Throws
/// kUndefinedEstimate when all weights vanish.
EstimateWithCI WeightedRatioEstimate(std::span<const double> w, std::span<const double> y, std::uint64_t seed);

/// Mean of 0/1 outcomes with a Wilson-style standard error (never 0).
EstimateWithCI ProportionEstimate(std::span<const double> y, std::uint64_t seed);

/// Sample mean with standard error sd / sqrt(n).
EstimateWithCI MeanEstimate(std::span<const double> y, std::uint64_t seed);

/// sqrt(a.se^2 + b.se^2).
double CombinedSe(const EstimateWithCI& a, const EstimateWithCI& b);

/// Thinning-coupled replicates: every replicate is sampled once at
/// lambda_max; `threshold` is the retention level above which the origin
/// reaches the boundary (see OriginReachThreshold). The estimate at any
/// lambda <= lambda_max is read off without resampling, so curves are
/// monotone in lambda.
struct CoupledSample {
  double lambda_max = 0.0;
  std::uint64_t seed = 0;
  bool weighted = true;
  std::vector<double> weights;
  std::vector<double> thresholds;
};

/// Palm Cox replicates for box side K and radius r.
CoupledSample SampleCoupledCox(const MeasureSpec& spec, double lambda_max, double r, double K, int replicates,
                               std::uint64_t seed, int workers = 1);

/// Origin plus homogeneous Poisson(rho_max) in Q_K, radius r.
CoupledSample SampleCoupledPoisson(double rho_max, double K, int replicates, std::uint64_t seed, int workers = 1,
                                   int dim = 2, double r = 1.0);

/// Weighted samples get the proportion floor 1/(4 n_eff^2) on the variance,
/// n_eff = (sum w)^2 / sum w^2.
EstimateWithCI ThetaAt(const CoupledSample& sample, double lambda);

/// Palm-weighted estimate of P(o <-> boundary of Q_K) at (lambda, r).
EstimateWithCI EstimateTheta(const MeasureSpec& spec, double lambda, double r, double K, int replicates,
                             std::uint64_t seed, int workers = 1);

/// Poisson reference at radius 1.
EstimateWithCI EstimateThetaPoisson(double rho, double K, int replicates, std::uint64_t seed, int workers = 1,
                                    int dim = 2);

struct ResultRow {
  std::string series;
  double lambda = 0.0;
  double r = 0.0;
  double K = 0.0;
  EstimateWithCI estimate;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<ResultRow> rows;
  std::vector<std::string> notes;
};

/// Coupled curve over lambda_grid (sampled once at its maximum).
ExperimentResult SweepLambda(const MeasureSpec& spec, double r, std::span<const double> lambda_grid, double K,
                             int replicates, std::uint64_t seed, int workers = 1);

struct KConvergence {
  EstimateWithCI at_k;
  EstimateWithCI at_2k;
  bool flagged = false;  // |difference| > 3 combined SE
};
KConvergence CheckKConvergence(const MeasureSpec& spec, double lambda, double r, double K, int replicates,
                               std::uint64_t seed, int workers = 1);

struct ThresholdResult {
  double lambda = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool flagged = false;  // target already met at lambda_lo
};

/// Finite-window pseudo-critical intensity: bisection on the coupled curve
/// until the bracket is narrower than 2% relative. Throws kParameter when
/// the target is not reached at lambda_hi.
ThresholdResult FindLambdaThreshold(const MeasureSpec& spec, double r, double theta0, double K, int replicates,
                                    std::uint64_t seed, double lambda_lo, double lambda_hi, int workers = 1);

/// Same bisection on an existing coupled sample.
ThresholdResult FindLambdaThreshold(const CoupledSample& sample, double theta0, double lambda_lo, double lambda_hi);

struct LaplaceResult {
  EstimateWithCI transform;  // E exp(-lambda Lambda(Q_r))
  double log_mean = 0.0;
  double rate = 0.0;  // r^{-d} log_mean
  double rate_se = 0.0;  // jackknife
};
LaplaceResult LaplaceTransform(const MeasureSpec& spec, double lambda, double r, int replicates, std::uint64_t seed,
                               int workers = 1);

/// lambda_S (e^{-lambda K} - 1) with K the kernel integral.
double ShotNoiseRateClosedForm(double center_intensity, double lambda, double kernel_integral);

/// Palm-weighted E exp(-lambda Lambda*(B_r(o))).
EstimateWithCI IsolationLowerBound(const MeasureSpec& spec, double lambda, double r, int replicates,
                                   std::uint64_t seed, int workers = 1);

/// Critical intensity of the planar (3d) Poisson Gilbert graph at radius 1.
double PoissonCriticalIntensity(int dim);

/// lambda = rho / r^d, box side K r, compared with the Poisson reference at
/// radius 1 and side K. Series: <kind>, poisson, <kind>:deviation.
ExperimentResult CoupledLimitLargeRadius(const MeasureSpec& spec, double rho, std::span<const double> r_list,
                                         double K, int replicates, std::uint64_t seed, int workers = 1);

/// For each lambda: mu = lambda * w (w the mass per unit length), r from
/// mu e^{-mu r} = c. Cox, gap model and bond model share the environment
/// and Palm point; Cox and gap model share the points. Series: <kind>,
/// <kind>:gap, <kind>:ber, <kind>:cox-ber (difference, paired SE).
ExperimentResult CoupledLimitSingular(const MeasureSpec& spec, double c, std::span<const double> lambda_list,
                                      double K, int replicates, std::uint64_t seed, int workers = 1);

/// Substream key derived from a parameter value, so results for one grid
/// point do not depend on the rest of the grid.
std::uint64_t ParameterSeed(std::uint64_t seed, double value);

/// Modulated Boolean spec, r = (rho / lambda)^{1/d}. Reference
/// E[theta_bar(rho l*_o) 1{superlevel set reaches the boundary of Q_K}],
/// theta_bar from a coupled Poisson run in Q_{reference_K}. Series: <kind>,
/// <kind>:reference.
ExperimentResult CoupledLimitAc(const MeasureSpec& spec, double rho, std::span<const double> lambda_list, double K,
                                int replicates, std::uint64_t seed, int workers = 1, double reference_K = 20.0);

}  // namespace coxperc
