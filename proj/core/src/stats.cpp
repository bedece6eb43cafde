#include "attnet/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/tools/minima.hpp>
#include <nlohmann/json.hpp>

#include "attnet/types.hpp"

namespace attnet {
namespace {

constexpr std::uint64_t kExplicitTerms = 64;
constexpr double kInf = std::numeric_limits<double>::infinity();

// sum_{x >= n} (x/x0)^-alpha e^{-lambda (x - x0)} for n >= x0 >= 1, via
// Euler-Maclaurin with terms through f'''(n).
double scaled_tail(double alpha, double lambda, double x0, double n) {
  const double fn = std::pow(n / x0, -alpha) * std::exp(-lambda * (n - x0));
  double integral = 0.0;
  if (lambda == 0.0) {
    integral = fn * n / (alpha - 1.0);
  } else {
    boost::math::quadrature::exp_sinh<double> integrator;
    auto h = [&](double t) { return std::pow(1.0 + t / n, -alpha) * std::exp(-lambda * t); };
    integral = fn * integrator.integrate(h, 1e-14);
  }
  const double g = -alpha / n - lambda;
  const double g1 = alpha / (n * n);
  const double g2 = -2.0 * alpha / (n * n * n);
  const double d1 = fn * g;
  const double d3 = fn * (g * g * g + 3.0 * g * g1 + g2);
  return integral + fn / 2.0 - d1 / 12.0 + d3 / 720.0;
}

double log_normalizer_checked(double alpha, double lambda, std::uint64_t x_min) {
  if (x_min < 1) throw DomainError("x_min must be at least 1");
  if (lambda < 0.0) throw DomainError("cutoff rate must be non-negative");
  if (lambda == 0.0 && !(alpha > 1.0)) return kInf;
  const double x0 = static_cast<double>(x_min);
  double sum = 0.0;
  for (std::uint64_t k = 0; k < kExplicitTerms; ++k) {
    const double x = x0 + static_cast<double>(k);
    sum += std::pow(x / x0, -alpha) * std::exp(-lambda * (x - x0));
  }
  sum += scaled_tail(alpha, lambda, x0, x0 + static_cast<double>(kExplicitTerms));
  return -alpha * std::log(x0) - lambda * x0 + std::log(sum);
}

// Minimal Nelder-Mead on two parameters.
struct SimplexResult {
  std::array<double, 2> point{};
  double value = kInf;
  std::size_t iterations = 0;
  bool converged = false;
};

template <typename F>
SimplexResult nelder_mead(F&& f, std::array<double, 2> start, std::array<double, 2> step,
                          std::size_t max_iterations) {
  using P = std::array<double, 2>;
  std::array<P, 3> x = {start, start, start};
  x[1][0] += step[0];
  x[2][1] += step[1];
  std::array<double, 3> fx{};
  for (int i = 0; i < 3; ++i) fx[i] = f(x[i]);

  SimplexResult r;
  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    std::array<int, 3> idx = {0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    const P best = x[idx[0]], mid = x[idx[1]], worst = x[idx[2]];
    const double fb = fx[idx[0]], fm = fx[idx[1]], fw = fx[idx[2]];

    const double spread = std::abs(fw - fb);
    double size = 0.0;
    for (int i = 1; i < 3; ++i) {
      for (int d = 0; d < 2; ++d) size = std::max(size, std::abs(x[idx[i]][d] - best[d]));
    }
    if (std::isfinite(fb) && spread <= 1e-12 * (1.0 + std::abs(fb)) && size <= 1e-9) {
      r.converged = true;
      break;
    }

    const P centroid = {(best[0] + mid[0]) / 2.0, (best[1] + mid[1]) / 2.0};
    auto along = [&](double t) {
      return P{centroid[0] + t * (worst[0] - centroid[0]), centroid[1] + t * (worst[1] - centroid[1])};
    };
    const P refl = along(-1.0);
    const double fr = f(refl);
    std::array<P, 3> nx = {best, mid, worst};
    std::array<double, 3> nf = {fb, fm, fw};
    if (fr < fb) {
      const P exp = along(-2.0);
      const double fe = f(exp);
      if (fe < fr) {
        nx[2] = exp;
        nf[2] = fe;
      } else {
        nx[2] = refl;
        nf[2] = fr;
      }
    } else if (fr < fm) {
      nx[2] = refl;
      nf[2] = fr;
    } else {
      const bool outside = fr < fw;
      const P con = along(outside ? -0.5 : 0.5);
      const double fc = f(con);
      if (fc < (outside ? fr : fw)) {
        nx[2] = con;
        nf[2] = fc;
      } else {
        for (int i = 1; i < 3; ++i) {
          nx[i] = P{best[0] + 0.5 * (nx[i][0] - best[0]), best[1] + 0.5 * (nx[i][1] - best[1])};
          nf[i] = f(nx[i]);
        }
      }
    }
    x = nx;
    fx = nf;
  }
  const auto best = static_cast<std::size_t>(std::min_element(fx.begin(), fx.end()) - fx.begin());
  r.point = x[best];
  r.value = fx[best];
  return r;
}

constexpr double kAlphaLow = -2.0;
constexpr double kAlphaHigh = 12.0;
constexpr double kLogLambdaLow = -27.6;  // ~1e-12
constexpr double kLogLambdaHigh = 2.3;   // ~10

}  // namespace

double log_normalizer(double alpha, double lambda, std::uint64_t x_min) {
  return log_normalizer_checked(alpha, lambda, x_min);
}

TailSummary summarize_tail(std::span<const std::uint64_t> samples, std::uint64_t x_min) {
  if (x_min < 1) throw DomainError("x_min must be at least 1");
  TailSummary t;
  t.x_min = x_min;
  t.min = std::numeric_limits<std::uint64_t>::max();
  for (auto x : samples) {
    if (x < x_min) continue;
    ++t.n;
    t.sum_log += std::log(static_cast<double>(x));
    t.sum += static_cast<double>(x);
    t.min = std::min(t.min, x);
    t.max = std::max(t.max, x);
  }
  if (t.n == 0) t.min = 0;
  return t;
}

double powerlaw_log_likelihood(const TailSummary& tail, double alpha, double lambda) {
  const double log_z = log_normalizer_checked(alpha, lambda, tail.x_min);
  if (!std::isfinite(log_z)) return -kInf;
  return -alpha * tail.sum_log - lambda * tail.sum - static_cast<double>(tail.n) * log_z;
}

double fit_pure_alpha(const TailSummary& tail) {
  auto negll = [&](double a) { return -powerlaw_log_likelihood(tail, a, 0.0); };
  const auto r = boost::math::tools::brent_find_minima(negll, 1.0 + 1e-9, kAlphaHigh, 52);
  return r.first;
}

double PowerLawFit::pmf(std::uint64_t x) const {
  if (x < x_min) return 0.0;
  const double lx = static_cast<double>(x);
  return std::exp(-alpha * std::log(lx) - lambda * lx - log_normalizer(alpha, lambda, x_min));
}

double ks_distance(std::span<const std::uint64_t> sorted, std::uint64_t x_min, double alpha) {
  auto first = std::lower_bound(sorted.begin(), sorted.end(), x_min);
  const auto n = static_cast<double>(sorted.end() - first);
  if (n == 0) return 1.0;
  const double log_z = log_normalizer(alpha, 0.0, x_min);
  double d = 0.0;
  for (auto it = first; it != sorted.end();) {
    const std::uint64_t x = *it;
    auto next = std::upper_bound(it, sorted.end(), x);
    // Empirical and model CDF at x: P(X <= x) = 1 - P(X >= x + 1).
    const double empirical = static_cast<double>(next - first) / n;
    const double model = 1.0 - std::exp(log_normalizer(alpha, 0.0, x + 1) - log_z);
    const double below = static_cast<double>(it - first) / n;
    const double model_below = 1.0 - std::exp(log_normalizer(alpha, 0.0, x) - log_z);
    d = std::max({d, std::abs(empirical - model), std::abs(below - model_below)});
    it = next;
  }
  return d;
}

std::uint64_t select_x_min(std::span<const std::uint64_t> samples, std::size_t min_tail,
                           std::size_t max_candidates) {
  std::vector<std::uint64_t> sorted;
  for (auto x : samples) {
    if (x >= 1) sorted.push_back(x);
  }
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() < min_tail) throw DomainError("too few samples to choose x_min");

  std::uint64_t best_x = sorted.front();
  double best_d = kInf;
  std::size_t tried = 0;
  for (auto it = sorted.begin(); it != sorted.end() && tried < max_candidates;) {
    const std::uint64_t x = *it;
    const auto tail_size = static_cast<std::size_t>(sorted.end() - it);
    if (tail_size < min_tail) break;
    const TailSummary tail = summarize_tail(sorted, x);
    if (tail.min != tail.max) {
      const double alpha = fit_pure_alpha(tail);
      const double d = ks_distance(sorted, x, alpha);
      if (d < best_d) {
        best_d = d;
        best_x = x;
      }
    }
    ++tried;
    it = std::upper_bound(it, sorted.end(), x);
  }
  return best_x;
}

PowerLawFit fit_powerlaw_cutoff(std::span<const std::uint64_t> samples, const PowerLawOptions& opts) {
  for (auto x : samples) {
    if (x == 0) throw DomainError("power-law samples must be positive integers");
  }
  PowerLawFit fit;
  fit.x_min = opts.x_min ? *opts.x_min
                         : select_x_min(samples, opts.min_tail, opts.max_xmin_candidates);
  const TailSummary tail = summarize_tail(samples, fit.x_min);
  fit.n_tail = tail.n;
  if (tail.n < opts.min_tail) {
    throw DomainError("too few samples above x_min: " + std::to_string(tail.n) + " < " +
                      std::to_string(opts.min_tail));
  }
  if (tail.min == tail.max) throw DomainError("degenerate tail: all samples are equal");

  fit.pure_alpha = fit_pure_alpha(tail);
  fit.pure_log_likelihood = powerlaw_log_likelihood(tail, fit.pure_alpha, 0.0);

  auto objective = [&](const std::array<double, 2>& p) {
    if (p[0] < kAlphaLow || p[0] > kAlphaHigh || p[1] < kLogLambdaLow || p[1] > kLogLambdaHigh) {
      return kInf;
    }
    return -powerlaw_log_likelihood(tail, p[0], std::exp(p[1]));
  };

  // Restart from a few cutoff scales and keep refining the best point.
  const double mean = tail.sum / static_cast<double>(tail.n);
  SimplexResult best;
  for (double scale : {1.0, 0.1, 0.01}) {
    const double start_lambda = std::clamp(scale / mean, 1e-11, 5.0);
    SimplexResult r = nelder_mead(objective, {std::min(fit.pure_alpha, kAlphaHigh - 0.5),
                                              std::log(start_lambda)},
                                  {0.1, 0.5}, opts.max_iterations);
    fit.iterations += r.iterations;
    if (!r.converged) {
      throw DomainError("power-law cutoff fit did not converge after " +
                        std::to_string(r.iterations) + " iterations (alpha=" +
                        std::to_string(r.point[0]) + ", lambda=" + std::to_string(std::exp(r.point[1])) +
                        ")");
    }
    if (r.value < best.value) best = r;
  }
  for (int polish = 0; polish < 2; ++polish) {
    SimplexResult r = nelder_mead(objective, best.point, {0.01, 0.05}, opts.max_iterations);
    fit.iterations += r.iterations;
    if (!r.converged) throw DomainError("power-law cutoff fit did not converge while polishing");
    if (r.value < best.value) best = r;
  }

  fit.cutoff_alpha = best.point[0];
  fit.cutoff_lambda = std::exp(best.point[1]);
  fit.cutoff_log_likelihood = -best.value;

  fit.lrt_statistic = 2.0 * std::max(0.0, fit.cutoff_log_likelihood - fit.pure_log_likelihood);
  fit.p_value = std::erfc(std::sqrt(fit.lrt_statistic / 2.0));
  fit.cutoff_favored = fit.p_value < opts.significance;
  if (fit.cutoff_favored) {
    fit.alpha = fit.cutoff_alpha;
    fit.lambda = fit.cutoff_lambda;
    fit.log_likelihood = fit.cutoff_log_likelihood;
  } else {
    fit.alpha = fit.pure_alpha;
    fit.lambda = 0.0;
    fit.log_likelihood = fit.pure_log_likelihood;
  }

  std::vector<std::uint64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  fit.ks_distance = ks_distance(sorted, fit.x_min, fit.pure_alpha);
  return fit;
}

void write_fit_json(std::ostream& out, const PowerLawFit& fit) {
  nlohmann::json doc = {
      {"model", fit.cutoff_favored ? "power_law_with_cutoff" : "power_law"},
      {"x_min", fit.x_min},
      {"alpha", fit.alpha},
      {"lambda", fit.lambda},
      {"log_likelihood", fit.log_likelihood},
      {"n_tail", fit.n_tail},
      {"lrt_statistic", fit.lrt_statistic},
      {"lrt_p_value", fit.p_value},
      {"cutoff_favored", fit.cutoff_favored},
      {"pure", {{"alpha", fit.pure_alpha}, {"log_likelihood", fit.pure_log_likelihood}}},
      {"cutoff",
       {{"alpha", fit.cutoff_alpha},
        {"lambda", fit.cutoff_lambda},
        {"log_likelihood", fit.cutoff_log_likelihood}}},
      {"ks_distance_pure", fit.ks_distance},
      {"iterations", fit.iterations},
  };
  out << doc.dump(2) << '\n';
}

}  // namespace attnet
