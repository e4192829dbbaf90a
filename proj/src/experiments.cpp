#include "coxperc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "coxperc/cox.hpp"
#include "coxperc/parallel.hpp"
#include "coxperc/percolation.hpp"
#include "coxperc/rng.hpp"

namespace coxperc {
namespace {

void RequireReplicates(int replicates) {
  if (replicates < 1) throw Error(ErrorKind::kParameter, "replicates must be >= 1");
}

void RequireBox(double K, double r) {
  if (!(r > 0.0)) throw Error(ErrorKind::kParameter, "r must be > 0");
  if (!(K > 4.0 * r)) throw Error(ErrorKind::kParameter, "K must exceed 4r");
}

std::uint64_t ReplicateSeed(std::uint64_t seed, std::size_t i) { return StreamKey({seed, static_cast<std::uint64_t>(i)}); }

double Threshold(const std::vector<Point>& points, std::uint64_t seed, double r, double K) {
  std::vector<double> marks(points.size(), 0.0);
  for (std::size_t j = 1; j < points.size(); ++j) marks[j] = ThinningMark(seed, j);
  return OriginReachThreshold(points, marks, r, K);
}

std::string SeriesName(const MeasureSpec& spec, const char* suffix = nullptr) {
  std::string s = spec.Kind();
  if (suffix) s += std::string(":") + suffix;
  return s;
}

}  // namespace

EstimateWithCI WeightedRatioEstimate(std::span<const double> w, std::span<const double> y, std::uint64_t seed) {
  if (w.size() != y.size() || w.empty()) throw Error(ErrorKind::kParameter, "weights and outcomes must align");
  EstimateWithCI out;
  out.seed = seed;
  out.replicates = static_cast<int>(w.size());
  double sw = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    sw += w[i];
    swy += w[i] * y[i];
  }
  out.effective_weight_sum = sw;
  if (!(sw > 0.0)) throw Error(ErrorKind::kUndefinedEstimate, "all Palm weights are zero");
  out.mean = swy / sw;
  if (w.size() < 2) {
    out.flagged = true;
    return out;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = w[i] * (y[i] - out.mean);
    acc += d * d;
  }
  const double n = static_cast<double>(w.size());
  out.std_error = std::sqrt(n / (n - 1.0) * acc) / sw;
  return out;
}

EstimateWithCI ProportionEstimate(std::span<const double> y, std::uint64_t seed) {
  if (y.empty()) throw Error(ErrorKind::kParameter, "no outcomes");
  EstimateWithCI out;
  out.seed = seed;
  out.replicates = static_cast<int>(y.size());
  out.effective_weight_sum = static_cast<double>(y.size());
  const double n = static_cast<double>(y.size());
  const double p = std::accumulate(y.begin(), y.end(), 0.0) / n;
  out.mean = p;
  out.std_error = std::sqrt(p * (1.0 - p) / n + 1.0 / (4.0 * n * n)) / (1.0 + 1.0 / n);
  return out;
}

EstimateWithCI MeanEstimate(std::span<const double> y, std::uint64_t seed) {
  if (y.empty()) throw Error(ErrorKind::kParameter, "no outcomes");
  EstimateWithCI out;
  out.seed = seed;
  out.replicates = static_cast<int>(y.size());
  out.effective_weight_sum = static_cast<double>(y.size());
  const double n = static_cast<double>(y.size());
  out.mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  if (y.size() < 2) {
    out.flagged = true;
    return out;
  }
  double acc = 0.0;
  for (double v : y) acc += (v - out.mean) * (v - out.mean);
  out.std_error = std::sqrt(acc / (n - 1.0) / n);
  return out;
}

std::uint64_t ParameterSeed(std::uint64_t seed, double value) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof bits);
  return StreamKey({seed, bits});
}

double CombinedSe(const EstimateWithCI& a, const EstimateWithCI& b) {
  return std::hypot(a.std_error, b.std_error);
}

CoupledSample SampleCoupledCox(const MeasureSpec& spec, double lambda_max, double r, double K, int replicates,
                               std::uint64_t seed, int workers) {
  RequireReplicates(replicates);
  RequireBox(K, r);
  if (!(lambda_max >= 0.0)) throw Error(ErrorKind::kParameter, "lambda must be >= 0");
  CoupledSample out;
  out.lambda_max = lambda_max;
  out.seed = seed;
  out.weights.resize(static_cast<std::size_t>(replicates));
  out.thresholds.resize(static_cast<std::size_t>(replicates));
  ParallelFor(out.weights.size(), workers, [&](std::size_t i) {
    const std::uint64_t s = ReplicateSeed(seed, i);
    const PalmSample palm = SampleCoxPalm(spec, lambda_max, K, s);
    out.weights[i] = palm.weight;
    out.thresholds[i] = palm.weight > 0.0 ? Threshold(palm.pattern.points, s, r, K) : 2.0;
  });
  return out;
}

CoupledSample SampleCoupledPoisson(double rho_max, double K, int replicates, std::uint64_t seed, int workers, int dim,
                                   double r) {
  RequireReplicates(replicates);
  RequireBox(K, r);
  CoupledSample out;
  out.lambda_max = rho_max;
  out.seed = seed;
  out.weighted = false;
  out.weights.assign(static_cast<std::size_t>(replicates), 1.0);
  out.thresholds.resize(static_cast<std::size_t>(replicates));
  const BoxWindow box = BoxWindow::Centered(K, dim);
  ParallelFor(out.thresholds.size(), workers, [&](std::size_t i) {
    const std::uint64_t s = ReplicateSeed(seed, i);
    PointPattern pattern = SamplePoisson(rho_max, box, s);
    std::vector<Point> points;
    points.reserve(pattern.size() + 1);
    points.push_back(Point{});
    points.insert(points.end(), pattern.points.begin(), pattern.points.end());
    out.thresholds[i] = Threshold(points, s, r, K);
  });
  return out;
}

EstimateWithCI ThetaAt(const CoupledSample& sample, double lambda) {
  if (!(lambda >= 0.0) || lambda > sample.lambda_max * (1.0 + 1e-12)) {
    throw Error(ErrorKind::kParameter, "lambda outside [0, lambda_max]");
  }
  const double level = sample.lambda_max > 0.0 ? std::min(1.0, lambda / sample.lambda_max) : 0.0;
  std::vector<double> y(sample.thresholds.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = sample.thresholds[i] < level ? 1.0 : 0.0;
  if (!sample.weighted) return ProportionEstimate(y, sample.seed);
  EstimateWithCI out = WeightedRatioEstimate(sample.weights, y, sample.seed);
  // Same floor as the unweighted proportion, at the effective sample size,
  // so an all-equal outcome vector does not report zero error.
  double sw2 = 0.0;
  for (double w : sample.weights) sw2 += w * w;
  const double n_eff = out.effective_weight_sum * out.effective_weight_sum / sw2;
  out.std_error = std::sqrt(out.std_error * out.std_error + 1.0 / (4.0 * n_eff * n_eff));
  return out;
}

EstimateWithCI EstimateTheta(const MeasureSpec& spec, double lambda, double r, double K, int replicates,
                             std::uint64_t seed, int workers) {
  return ThetaAt(SampleCoupledCox(spec, lambda, r, K, replicates, seed, workers), lambda);
}

EstimateWithCI EstimateThetaPoisson(double rho, double K, int replicates, std::uint64_t seed, int workers, int dim) {
  return ThetaAt(SampleCoupledPoisson(rho, K, replicates, seed, workers, dim), rho);
}

ExperimentResult SweepLambda(const MeasureSpec& spec, double r, std::span<const double> lambda_grid, double K,
                             int replicates, std::uint64_t seed, int workers) {
  if (lambda_grid.empty()) throw Error(ErrorKind::kParameter, "empty lambda grid");
  const double lambda_max = *std::max_element(lambda_grid.begin(), lambda_grid.end());
  const CoupledSample sample = SampleCoupledCox(spec, lambda_max, r, K, replicates, seed, workers);
  ExperimentResult out;
  out.experiment = "sweep";
  for (double lambda : lambda_grid) out.rows.push_back({SeriesName(spec), lambda, r, K, ThetaAt(sample, lambda)});
  return out;
}

KConvergence CheckKConvergence(const MeasureSpec& spec, double lambda, double r, double K, int replicates,
                               std::uint64_t seed, int workers) {
  KConvergence out;
  out.at_k = EstimateTheta(spec, lambda, r, K, replicates, seed, workers);
  out.at_2k = EstimateTheta(spec, lambda, r, 2.0 * K, replicates, StreamKey({seed, 2}), workers);
  out.flagged = std::abs(out.at_k.mean - out.at_2k.mean) > 3.0 * CombinedSe(out.at_k, out.at_2k);
  return out;
}

ThresholdResult FindLambdaThreshold(const CoupledSample& sample, double theta0, double lambda_lo,
                                    double lambda_hi) {
  if (!(theta0 > 0.0 && theta0 < 1.0)) throw Error(ErrorKind::kParameter, "target must lie in (0, 1)");
  if (!(lambda_lo >= 0.0 && lambda_hi > lambda_lo)) throw Error(ErrorKind::kParameter, "invalid lambda bracket");
  ThresholdResult out;
  if (ThetaAt(sample, lambda_hi).mean < theta0) {
    throw Error(ErrorKind::kParameter, "target percolation probability not reached at the upper bracket");
  }
  if (ThetaAt(sample, lambda_lo).mean >= theta0) {
    out.lambda = out.lo = out.hi = lambda_lo;
    out.flagged = true;
    return out;
  }
  double lo = lambda_lo, hi = lambda_hi;
  while ((hi - lo) / (0.5 * (hi + lo)) >= 0.02) {
    const double mid = 0.5 * (lo + hi);
    if (ThetaAt(sample, mid).mean >= theta0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.lo = lo;
  out.hi = hi;
  out.lambda = 0.5 * (lo + hi);
  return out;
}

ThresholdResult FindLambdaThreshold(const MeasureSpec& spec, double r, double theta0, double K, int replicates,
                                    std::uint64_t seed, double lambda_lo, double lambda_hi, int workers) {
  if (!(lambda_lo >= 0.0 && lambda_hi > lambda_lo)) throw Error(ErrorKind::kParameter, "invalid lambda bracket");
  return FindLambdaThreshold(SampleCoupledCox(spec, lambda_hi, r, K, replicates, seed, workers), theta0, lambda_lo,
                             lambda_hi);
}

LaplaceResult LaplaceTransform(const MeasureSpec& spec, double lambda, double r, int replicates, std::uint64_t seed,
                               int workers) {
  RequireReplicates(replicates);
  if (!(r > 0.0)) throw Error(ErrorKind::kParameter, "r must be > 0");
  const BoxWindow box = BoxWindow::Centered(r, spec.dim);
  std::vector<double> y(static_cast<std::size_t>(replicates));
  ParallelFor(y.size(), workers, [&](std::size_t i) {
    const MeasureRealization real = SampleMeasure(spec, box, ReplicateSeed(seed, i));
    y[i] = std::exp(-lambda * MeasureOfBox(real, box));
  });
  LaplaceResult out;
  out.transform = MeanEstimate(y, seed);
  const double vol = std::pow(r, spec.dim);
  out.log_mean = std::log(out.transform.mean);
  out.rate = out.log_mean / vol;
  if (y.size() >= 2) {
    const double n = static_cast<double>(y.size());
    const double total = std::accumulate(y.begin(), y.end(), 0.0);
    std::vector<double> loo(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) loo[i] = std::log((total - y[i]) / (n - 1.0)) / vol;
    const double avg = std::accumulate(loo.begin(), loo.end(), 0.0) / n;
    double acc = 0.0;
    for (double v : loo) acc += (v - avg) * (v - avg);
    out.rate_se = std::sqrt((n - 1.0) / n * acc);
  }
  return out;
}

double ShotNoiseRateClosedForm(double center_intensity, double lambda, double kernel_integral) {
  return center_intensity * (std::exp(-lambda * kernel_integral) - 1.0);
}

EstimateWithCI IsolationLowerBound(const MeasureSpec& spec, double lambda, double r, int replicates,
                                   std::uint64_t seed, int workers) {
  RequireReplicates(replicates);
  if (!(r > 0.0)) throw Error(ErrorKind::kParameter, "r must be > 0");
  std::vector<double> w(static_cast<std::size_t>(replicates)), y(w.size());
  const BoxWindow unit = BoxWindow::Centered(1.0, spec.dim);
  ParallelFor(w.size(), workers, [&](std::size_t i) {
    const std::uint64_t s = ReplicateSeed(seed, i);
    const MeasureRealization real = SampleMeasure(spec, BoxWindow::Centered(1.0 + 2.0 * r, spec.dim), s);
    const PalmDraw draw = DrawPalm(real, unit, s);
    w[i] = draw.weight;
    y[i] = draw.shift ? std::exp(-lambda * MeasureOfBall(real, *draw.shift, r)) : 0.0;
  });
  return WeightedRatioEstimate(w, y, seed);
}

double PoissonCriticalIntensity(int dim) {
  // Literature values for the Gilbert graph with connection radius 1.
  if (dim == 2) return 1.43632;
  if (dim == 3) return 0.65296;
  throw Error(ErrorKind::kUnsupportedDimension, "dimension must be 2 or 3");
}

ExperimentResult CoupledLimitLargeRadius(const MeasureSpec& spec, double rho, std::span<const double> r_list,
                                         double K, int replicates, std::uint64_t seed, int workers) {
  if (r_list.empty()) throw Error(ErrorKind::kParameter, "empty r list");
  if (!(rho >= 0.0)) throw Error(ErrorKind::kParameter, "rho must be >= 0");
  ExperimentResult out;
  out.experiment = "limit-large-r";
  const EstimateWithCI reference =
      EstimateThetaPoisson(rho, K, replicates, StreamKey({seed, Tag(Stream::kPoisson)}), workers, spec.dim);
  out.rows.push_back({"poisson", rho, 1.0, K, reference});
  for (std::size_t k = 0; k < r_list.size(); ++k) {
    const double r = r_list[k];
    if (!(r > 0.0)) throw Error(ErrorKind::kParameter, "r must be > 0");
    const double lambda = rho / std::pow(r, spec.dim);
    const EstimateWithCI est = EstimateTheta(spec, lambda, r, K * r, replicates, ParameterSeed(seed, r), workers);
    out.rows.push_back({SeriesName(spec), lambda, r, K * r, est});
    EstimateWithCI dev = est;
    dev.mean = std::abs(est.mean - reference.mean);
    dev.std_error = CombinedSe(est, reference);
    out.rows.push_back({SeriesName(spec, "deviation"), lambda, r, K * r, dev});
  }
  return out;
}

ExperimentResult CoupledLimitSingular(const MeasureSpec& spec, double c, std::span<const double> lambda_list,
                                      double K, int replicates, std::uint64_t seed, int workers) {
  if (!spec.IsSingular()) throw Error(ErrorKind::kParameter, "singular limit needs a segment measure");
  if (!(c > 0.0)) throw Error(ErrorKind::kParameter, "c must be > 0");
  if (lambda_list.empty()) throw Error(ErrorKind::kParameter, "empty lambda list");
  RequireReplicates(replicates);
  const double weight = spec.normalization;
  const double b = std::exp(-c);
  ExperimentResult out;
  out.experiment = "limit-singular";
  for (std::size_t k = 0; k < lambda_list.size(); ++k) {
    const double lambda = lambda_list[k];
    const double mu = lambda * weight;
    if (!(mu > c)) throw Error(ErrorKind::kParameter, "need lambda * weight > c for a valid radius");
    const double r = std::log(mu / c) / mu;
    RequireBox(K, r);
    const std::size_t n = static_cast<std::size_t>(replicates);
    std::vector<double> w(n), cox(n), gap(n), ber(n), diff(n);
    const std::uint64_t level_seed = ParameterSeed(seed, lambda);
    ParallelFor(n, workers, [&](std::size_t i) {
      // The environment is shared across the lambda list.
      const std::uint64_t env_seed = ReplicateSeed(seed, i);
      const std::uint64_t s = ReplicateSeed(level_seed, i);
      const PalmEnvironment env = SamplePalmEnvironment(spec, K, env_seed);
      w[i] = env.draw.weight;
      if (!env.draw.shift || !env.draw.edge) {
        w[i] = 0.0;
        return;
      }
      const Point shift = *env.draw.shift;
      const double level = 0.5 * (K - 2.0 * r);
      const PointPattern pattern = SampleCox(env.real, lambda, s);

      // Cox: origin plus all points, shifted.
      std::vector<Point> points;
      points.reserve(pattern.size() + 1);
      points.push_back(Point{});
      for (const Point& p : pattern.points) points.push_back(p - shift);
      const GilbertGraph graph = BuildGilbert(points, r);
      cox[i] = OriginReachesBoundary(graph, K) ? 1.0 : 0.0;

      // Gap and bond models on the system split at the Palm point.
      const std::size_t e0 = *env.draw.edge;
      const double t0 = env.draw.edge_param;
      const auto [sys, root] = SplitEdge(*env.real.segments, e0, t0);
      std::vector<std::vector<double>> params(sys.edges.size());
      const std::size_t tail = sys.edges.size() - 1;
      params[e0].push_back(1.0);
      params[tail].push_back(0.0);
      for (std::size_t j = 0; j < pattern.size(); ++j) {
        const std::uint32_t e = pattern.edge[j];
        const double t = pattern.edge_param[j];
        if (e != e0) {
          params[e].push_back(t);
        } else if (t < t0) {
          params[e0].push_back(t / t0);
        } else {
          params[tail].push_back((t - t0) / (1.0 - t0));
        }
      }
      const auto gap_open = GapModelOpen(sys, std::move(params), r);
      gap[i] = BondClusterEscapes(sys, gap_open, root, shift, level) ? 1.0 : 0.0;
      const BondConfig bonds = SampleBonds(sys, b, s);
      ber[i] = BondClusterEscapes(sys, bonds.open, root, shift, level) ? 1.0 : 0.0;
      diff[i] = cox[i] - ber[i];
    });
    out.rows.push_back({SeriesName(spec), lambda, r, K, WeightedRatioEstimate(w, cox, level_seed)});
    out.rows.push_back({SeriesName(spec, "gap"), lambda, r, K, WeightedRatioEstimate(w, gap, level_seed)});
    out.rows.push_back({SeriesName(spec, "ber"), lambda, r, K, WeightedRatioEstimate(w, ber, level_seed)});
    out.rows.push_back({SeriesName(spec, "cox-ber"), lambda, r, K, WeightedRatioEstimate(w, diff, level_seed)});
  }
  return out;
}

ExperimentResult CoupledLimitAc(const MeasureSpec& spec, double rho, std::span<const double> lambda_list, double K,
                                int replicates, std::uint64_t seed, int workers, double reference_K) {
  const auto* boolean = std::get_if<ModulatedBoolean>(&spec.family);
  if (!boolean) throw Error(ErrorKind::kParameter, "AC limit needs a modulated Boolean measure");
  if (boolean->inside < boolean->outside) {
    throw Error(ErrorKind::kParameter, "AC limit requires inside >= outside density");
  }
  if (!(rho > 0.0)) throw Error(ErrorKind::kParameter, "rho must be > 0");
  if (lambda_list.empty()) throw Error(ErrorKind::kParameter, "empty lambda list");
  RequireReplicates(replicates);
  const double hi = spec.normalization * boolean->inside;
  const double lo = spec.normalization * boolean->outside;
  const double level = PoissonCriticalIntensity(spec.dim) / rho;
  if (std::abs(hi - level) < 1e-9 * level || std::abs(lo - level) < 1e-9 * level) {
    throw Error(ErrorKind::kParameter, "critical level coincides with a density value");
  }
  ExperimentResult out;
  out.experiment = "limit-ac";

  // theta_bar on [0, rho * hi] from one coupled Poisson sample.
  const CoupledSample poisson = SampleCoupledPoisson(rho * std::max(hi, 1e-12), reference_K, replicates,
                                                     StreamKey({seed, Tag(Stream::kPoisson)}), workers, spec.dim);

  const std::size_t n = static_cast<std::size_t>(replicates);
  const double R = boolean->grain_radius;
  std::vector<double> w(n), ref(n);
  std::vector<std::vector<double>> theta(lambda_list.size(), std::vector<double>(n, 0.0));
  std::vector<double> radius(lambda_list.size());
  for (std::size_t k = 0; k < lambda_list.size(); ++k) {
    if (!(lambda_list[k] > 0.0)) throw Error(ErrorKind::kParameter, "lambda must be > 0");
    radius[k] = std::pow(rho / lambda_list[k], 1.0 / spec.dim);
    RequireBox(K, radius[k]);
  }
  ParallelFor(n, workers, [&](std::size_t i) {
    const std::uint64_t s = ReplicateSeed(seed, i);
    const PalmEnvironment env = SamplePalmEnvironment(spec, K, s);
    w[i] = env.draw.weight;
    if (!env.draw.shift) {
      w[i] = 0.0;
      return;
    }
    const Point shift = *env.draw.shift;
    const double field = env.real.FieldAt(shift);
    bool reach = false;
    if (lo >= level) {
      reach = true;
    } else if (hi >= level && field >= level) {
      // Superlevel set is the grain union: connectivity of overlapping grains.
      const auto& grains = env.real.sources;
      UnionFind uf(grains.size());
      const GridIndex index(grains, 2.0 * R, spec.dim);
      for (std::uint32_t a = 0; a < grains.size(); ++a) {
        index.ForEachWithin(grains[a], 2.0 * R * (1.0 + 1e-12), [&](std::uint32_t b2) {
          if (b2 > a) uf.Unite(a, b2);
        });
      }
      std::vector<std::uint8_t> comp_reach(grains.size(), 0);
      for (std::uint32_t a = 0; a < grains.size(); ++a) {
        if (SupNorm(grains[a] - shift) + R >= 0.5 * K) comp_reach[uf.Find(a)] = 1;
      }
      for (std::uint32_t a = 0; a < grains.size() && !reach; ++a) {
        if (Norm2(grains[a] - shift) <= R * R && comp_reach[uf.Find(a)]) reach = true;
      }
    }
    ref[i] = reach ? ThetaAt(poisson, rho * field).mean : 0.0;
    for (std::size_t k = 0; k < lambda_list.size(); ++k) {
      const std::uint64_t sk = StreamKey({s, k});
      const PalmSample palm = SampleCoxPalm(env, lambda_list[k], K, sk);
      const GilbertGraph graph = BuildGilbert(palm.pattern, radius[k]);
      theta[k][i] = OriginReachesBoundary(graph, K) ? 1.0 : 0.0;
    }
  });
  EstimateWithCI reference = WeightedRatioEstimate(w, ref, seed);
  // Add the Poisson reference error at the upper density.
  reference.std_error = std::hypot(reference.std_error, ThetaAt(poisson, rho * hi).std_error);
  for (std::size_t k = 0; k < lambda_list.size(); ++k) {
    out.rows.push_back({SeriesName(spec), lambda_list[k], radius[k], K, WeightedRatioEstimate(w, theta[k], seed)});
    out.rows.push_back({SeriesName(spec, "reference"), lambda_list[k], radius[k], K, reference});
  }
  return out;
}

}  // namespace coxperc
