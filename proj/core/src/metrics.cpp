#include "tla/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tla/ascent.hpp"

namespace tla {

std::vector<double> class_accuracies(std::span<const ClassIndex> predicted,
                                     std::span<const ClassIndex> labels, std::size_t class_count) {
  ClassRisks r = class_risks_from_predictions(predicted, labels, class_count);
  for (double& e : r.estimates) e = 1.0 - e;
  return r.estimates;
}

std::vector<double> class_accuracies(const ModelParams& params, const LabeledDataset& dataset) {
  return class_accuracies(predict(params, dataset.instances()), dataset.labels(), dataset.class_count());
}

WorstClass worst_class_accuracy(std::span<const double> accuracies) {
  if (accuracies.empty()) throw std::invalid_argument("worst_class_accuracy: no classes");
  const auto it = std::min_element(accuracies.begin(), accuracies.end());
  return {static_cast<ClassIndex>(it - accuracies.begin()), *it};
}

WorstClass worst_class_accuracy(const ModelParams& params, const LabeledDataset& dataset) {
  return worst_class_accuracy(class_accuracies(params, dataset));
}

double balanced_accuracy(std::span<const double> accuracies) {
  if (accuracies.empty()) throw std::invalid_argument("balanced_accuracy: no classes");
  return std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / static_cast<double>(accuracies.size());
}

double balanced_accuracy(const ModelParams& params, const LabeledDataset& dataset) {
  return balanced_accuracy(class_accuracies(params, dataset));
}

InterIntraRatio inter_intra_ratio(const Matrix& features, std::span<const ClassIndex> labels,
                                  std::size_t class_count, std::size_t neighbor_count) {
  if (features.rows() != labels.size()) throw std::invalid_argument("inter_intra_ratio: row/label mismatch");
  if (class_count < 2) throw std::invalid_argument("inter_intra_ratio: need K >= 2");
  if (neighbor_count == 0) throw std::invalid_argument("inter_intra_ratio: neighbor_count must be positive");
  neighbor_count = std::min(neighbor_count, class_count - 1);

  const std::size_t d = features.cols();
  std::vector<std::size_t> counts(class_count, 0);
  Matrix centers(class_count, d);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) throw std::invalid_argument("inter_intra_ratio: label out of range");
    ++counts[labels[i]];
    auto c = centers.row(labels[i]);
    auto x = features.row(i);
    for (std::size_t j = 0; j < d; ++j) c[j] += x[j];
  }
  for (std::size_t y = 0; y < class_count; ++y) {
    if (counts[y] < 2) {
      throw std::invalid_argument("inter_intra_ratio: class " + std::to_string(y + 1) + " needs >= 2 samples");
    }
    for (double& v : centers.row(y)) v /= static_cast<double>(counts[y]);
  }
  const auto distance = [d](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
  };

  InterIntraRatio out{std::vector<double>(class_count, 0.0), std::vector<double>(class_count, 0.0),
                      std::vector<double>(class_count, 0.0), std::vector<bool>(class_count, false)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.intra[labels[i]] += distance(features.row(i), centers.row(labels[i]));
  }
  std::vector<double> dists;
  for (std::size_t y = 0; y < class_count; ++y) {
    out.intra[y] /= static_cast<double>(counts[y]);
    dists.clear();
    for (std::size_t o = 0; o < class_count; ++o)
      if (o != y) dists.push_back(distance(centers.row(y), centers.row(o)));
    std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(neighbor_count), dists.end());
    out.inter[y] = std::accumulate(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(neighbor_count), 0.0) /
                   static_cast<double>(neighbor_count);
    if (out.intra[y] == 0.0) {
      out.ratio[y] = std::numeric_limits<double>::infinity();
      out.degenerate[y] = true;
    } else {
      out.ratio[y] = out.inter[y] / out.intra[y];
    }
  }
  return out;
}

}  // namespace tla
