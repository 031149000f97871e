#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tla {

// A point on the K-class probability simplex.
class Prior {
 public:
  static constexpr double kSumTolerance = 1e-12;

  // Throws std::invalid_argument unless every entry is finite and
  // non-negative and the entries sum to one within kSumTolerance.
  explicit Prior(std::vector<double> probabilities);

  static Prior uniform(std::size_t class_count);
  static Prior one_hot(std::size_t class_count, std::size_t cls);
  static Prior from_counts(std::span<const std::size_t> counts);
  // Divides by the sum; entries must be non-negative with a positive sum.
  static Prior normalized(std::vector<double> weights);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t y) const { return probs_[y]; }
  std::span<const double> values() const { return probs_; }

  bool strictly_positive() const;
  // Index of the largest entry, smallest index on ties.
  std::size_t argmax() const;

  friend bool operator==(const Prior&, const Prior&) = default;

 private:
  std::vector<double> probs_;
};

}  // namespace tla
