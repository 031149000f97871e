#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tla/data.hpp"
#include "tla/matrix.hpp"
#include "tla/model.hpp"

namespace tla {

struct WorstClass {
  ClassIndex cls = 0;
  double accuracy = 0.0;
};

// a_y = 1 - P^(e)_y; every class must be present.
std::vector<double> class_accuracies(std::span<const ClassIndex> predicted,
                                     std::span<const ClassIndex> labels, std::size_t class_count);
std::vector<double> class_accuracies(const ModelParams& params, const LabeledDataset& dataset);

// Minimum per-class accuracy and its class (smallest index on ties).
WorstClass worst_class_accuracy(std::span<const double> accuracies);
WorstClass worst_class_accuracy(const ModelParams& params, const LabeledDataset& dataset);

double balanced_accuracy(std::span<const double> accuracies);
double balanced_accuracy(const ModelParams& params, const LabeledDataset& dataset);

struct InterIntraRatio {
  std::vector<double> inter;   // mean distance to the nearest other class centers
  std::vector<double> intra;   // mean distance of class samples to their center
  std::vector<double> ratio;   // inter / intra; +inf when intra is zero
  std::vector<bool> degenerate;
};

// Feature-quality ratio r(y). neighbor_count is clamped to K - 1.
InterIntraRatio inter_intra_ratio(const Matrix& features, std::span<const ClassIndex> labels,
                                  std::size_t class_count, std::size_t neighbor_count = 3);

}  // namespace tla
