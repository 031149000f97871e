#include "tla/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tla {

Prior::Prior(std::vector<double> probabilities) : probs_(std::move(probabilities)) {
  if (probs_.empty()) throw std::invalid_argument("Prior: empty probability vector");
  double sum = 0.0;
  for (std::size_t y = 0; y < probs_.size(); ++y) {
    const double p = probs_[y];
    if (!std::isfinite(p) || p < 0.0) {
      throw std::invalid_argument("Prior: entry " + std::to_string(y + 1) +
                                  " is negative or non-finite");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("Prior: entries sum to " + std::to_string(sum) + ", not 1");
  }
}

Prior Prior::uniform(std::size_t class_count) {
  if (class_count == 0) throw std::invalid_argument("Prior::uniform: zero classes");
  return Prior(std::vector<double>(class_count, 1.0 / static_cast<double>(class_count)));
}

Prior Prior::one_hot(std::size_t class_count, std::size_t cls) {
  if (cls >= class_count) throw std::invalid_argument("Prior::one_hot: class out of range");
  std::vector<double> p(class_count, 0.0);
  p[cls] = 1.0;
  return Prior(std::move(p));
}

Prior Prior::from_counts(std::span<const std::size_t> counts) {
  std::vector<double> w(counts.begin(), counts.end());
  return normalized(std::move(w));
}

Prior Prior::normalized(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("Prior::normalized: negative or non-finite weight");
    }
    sum += w;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("Prior::normalized: weights sum to zero");
  for (double& w : weights) w /= sum;
  return Prior(std::move(weights));
}

bool Prior::strictly_positive() const {
  return std::all_of(probs_.begin(), probs_.end(), [](double p) { return p > 0.0; });
}

std::size_t Prior::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) -
                                  probs_.begin());
}

}  // namespace tla
