#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace attnet {

// ln sum_{x >= x_min} x^-alpha e^{-lambda x}: explicit terms followed by an
// Euler-Maclaurin tail (closed-form integral for lambda = 0, quadrature
// otherwise). Relative accuracy is well below 1e-10.
double log_normalizer(double alpha, double lambda, std::uint64_t x_min);

struct TailSummary {
  std::uint64_t x_min = 1;
  std::size_t n = 0;
  double sum_log = 0.0;
  double sum = 0.0;
  std::uint64_t min = 0;
  std::uint64_t max = 0;
};

TailSummary summarize_tail(std::span<const std::uint64_t> samples, std::uint64_t x_min);

// Discrete log-likelihood of p(x) = x^-alpha e^{-lambda x} / Z on the tail.
double powerlaw_log_likelihood(const TailSummary& tail, double alpha, double lambda);

struct PowerLawFit {
  std::uint64_t x_min = 1;
  double alpha = 0.0;
  // Zero when the cutoff is not supported by the likelihood-ratio test.
  double lambda = 0.0;
  double log_likelihood = 0.0;
  std::size_t n_tail = 0;

  double pure_alpha = 0.0;
  double pure_log_likelihood = 0.0;
  double cutoff_alpha = 0.0;
  double cutoff_lambda = 0.0;
  double cutoff_log_likelihood = 0.0;
  double lrt_statistic = 0.0;
  double p_value = 1.0;
  bool cutoff_favored = false;
  std::size_t iterations = 0;
  double ks_distance = 0.0;

  double pmf(std::uint64_t x) const;
};

struct PowerLawOptions {
  // Chosen by minimizing the KS distance of the pure power law when unset.
  std::optional<std::uint64_t> x_min;
  double significance = 0.05;
  std::size_t max_iterations = 10000;
  std::size_t min_tail = 100;
  std::size_t max_xmin_candidates = 500;
};

// Maximum likelihood fit of a discrete power law with exponential cutoff.
// Throws DomainError for too few tail samples, a degenerate (constant) tail,
// or when the simplex search does not converge.
PowerLawFit fit_powerlaw_cutoff(std::span<const std::uint64_t> samples,
                                const PowerLawOptions& opts = {});

// Maximum likelihood exponent of the pure discrete power law.
double fit_pure_alpha(const TailSummary& tail);

// KS distance between the tail's empirical CDF and the pure power law.
double ks_distance(std::span<const std::uint64_t> sorted_samples, std::uint64_t x_min, double alpha);

std::uint64_t select_x_min(std::span<const std::uint64_t> samples, std::size_t min_tail = 100,
                           std::size_t max_candidates = 500);

void write_fit_json(std::ostream& out, const PowerLawFit& fit);

}  // namespace attnet
