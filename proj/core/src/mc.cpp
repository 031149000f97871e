#include "tla/mc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tla/random.hpp"

namespace tla {
namespace {

void check_common(std::size_t samples, std::size_t trials, const char* what) {
  if (samples == 0) throw std::invalid_argument(std::string(what) + ": N must be at least 1");
  if (trials < kMinMcTrials) {
    throw std::invalid_argument(std::string(what) + ": need at least " + std::to_string(kMinMcTrials) + " trials");
  }
}

// Runs body(t) for t in [0, trials) split into contiguous blocks.
void parallel_for(std::size_t trials, unsigned threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t t = 0; t < trials; ++t) body(t);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t block = (trials + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t lo = w * block;
    const std::size_t hi = std::min(trials, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t t = lo; t < hi; ++t) body(t);
    });
  }
  for (auto& th : pool) th.join();
}

std::size_t bernoulli_count(Rng& rng, std::size_t n, double p) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (unit_uniform(rng) < p) ++hits;
  return hits;
}

}  // namespace

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0 || successes > trials) throw std::invalid_argument("wilson_interval: invalid counts");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  // Endpoints at the boundary are exact; the closed form leaves rounding residue there.
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
          successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

FailureEstimate mc_worst_class_failure(std::span<const double> error_vector, std::size_t m,
                                       std::size_t samples, std::size_t trials,
                                       std::uint64_t master_seed, unsigned threads) {
  check_common(samples, trials, "mc_worst_class_failure");
  const std::size_t k = error_vector.size();
  if (k < 2) throw std::invalid_argument("mc_worst_class_failure: need K >= 2");
  if (m < 1 || m > k) throw std::invalid_argument("mc_worst_class_failure: need 1 <= M <= K");
  for (double p : error_vector) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("mc_worst_class_failure: probability outside [0, 1]");
  }
  const std::size_t worst =
      static_cast<std::size_t>(std::max_element(error_vector.begin(), error_vector.end()) - error_vector.begin());

  std::vector<unsigned char> failed(trials, 0);
  parallel_for(trials, threads, [&](std::size_t t) {
    Rng rng = make_rng(master_seed, t);
    std::vector<std::size_t> counts(k);
    for (std::size_t y = 0; y < k; ++y) counts[y] = bernoulli_count(rng, samples, error_vector[y]);
    std::size_t above = 0;
    std::size_t tied = 0;
    for (std::size_t y = 0; y < k; ++y) {
      if (y == worst) continue;
      if (counts[y] > counts[worst]) ++above;
      else if (counts[y] == counts[worst]) ++tied;
    }
    // A uniform permutation of the tied group puts the worst class at a
    // uniform rank among its tied peers.
    std::uniform_int_distribution<std::size_t> rank(0, tied);
    const std::size_t position = above + (tied > 0 ? rank(rng) : 0);
    failed[t] = position >= m ? 1 : 0;
  });

  const std::size_t failures = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  FailureEstimate out;
  out.trials = trials;
  out.failure = static_cast<double>(failures) / static_cast<double>(trials);
  out.std_error = std::sqrt(out.failure * (1.0 - out.failure) / static_cast<double>(trials));
  out.ci = wilson_interval(failures, trials);
  return out;
}

MseEstimate mc_ega_mse(double p, std::size_t samples, std::size_t trials, std::uint64_t master_seed,
                       unsigned threads) {
  check_common(samples, trials, "mc_ega_mse");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("mc_ega_mse: probability outside [0, 1]");
  const double target = std::exp(p);
  std::vector<double> sq(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    Rng rng = make_rng(master_seed, t);
    const double estimate = static_cast<double>(bernoulli_count(rng, samples, p)) / static_cast<double>(samples);
    const double diff = target - std::exp(estimate);
    sq[t] = diff * diff;
  });
  const double n = static_cast<double>(trials);
  const double mean = pairwise_sum(sq) / n;
  std::vector<double> dev(trials);
  for (std::size_t t = 0; t < trials; ++t) dev[t] = (sq[t] - mean) * (sq[t] - mean);
  const double var = pairwise_sum(dev) / (n - 1.0);
  return {mean, std::sqrt(var / n), trials};
}

}  // namespace tla
