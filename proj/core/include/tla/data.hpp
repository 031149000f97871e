#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tla/matrix.hpp"
#include "tla/prior.hpp"

namespace tla {

// Class labels are 0-based inside the library. Files and reports use
// 1-based labels; conversion happens only at those boundaries.
using ClassIndex = std::size_t;

// Gaussian class-conditional densities p(x|y).
struct MixtureSpec {
  std::vector<std::vector<double>> means;  // K entries of dimension d
  std::vector<Matrix> covariances;         // K symmetric positive-definite d x d

  std::size_t class_count() const { return means.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }

  // Throws std::invalid_argument on K < 2, ragged means, wrong covariance
  // shapes, asymmetric or non-positive-definite covariances.
  void validate() const;

  // K means equally spaced on a circle of the given radius in d = 2,
  // identity covariances.
  static MixtureSpec circle(std::size_t class_count = 10, double radius = 2.0);
  // d = 1, means at the given points, shared variance.
  static MixtureSpec line(std::vector<double> centers, double variance = 1.0);
  // Two classes in d = 1 at -1 and +1, unit variance.
  static MixtureSpec two_class_line() { return line({-1.0, 1.0}); }
};

enum class ImbalanceKind { long_tail, step };

struct ImbalanceProfile {
  ImbalanceKind kind = ImbalanceKind::long_tail;
  double ratio = 1.0;            // rho in (0, 1]
  std::size_t base_count = 0;    // N_1 for long tail, N_major for step
};

// Per-class counts. Long tail: round-half-up of rho^((y-1)/(K-1)) * N_1.
// Step: the first ceil(K/2) classes get round(rho * N_major), the rest N_major.
std::vector<std::size_t> make_imbalance_counts(const ImbalanceProfile& profile,
                                               std::size_t class_count);

class LabeledDataset {
 public:
  LabeledDataset() = default;
  // Validates label range and row count; counts are derived from labels.
  LabeledDataset(Matrix instances, std::vector<ClassIndex> labels, std::size_t class_count);

  const Matrix& instances() const { return instances_; }
  std::span<const ClassIndex> labels() const { return labels_; }
  std::span<const std::size_t> class_counts() const { return counts_; }
  std::size_t class_count() const { return counts_.size(); }
  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return instances_.cols(); }
  bool empty() const { return labels_.empty(); }

  // pi^train from realized counts.
  Prior empirical_prior() const { return Prior::from_counts(counts_); }
  bool has_all_classes() const;

  LabeledDataset subset(std::span<const std::size_t> indices) const;
  // Row indices of every sample of class y, in dataset order.
  std::vector<std::size_t> indices_of(ClassIndex y) const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

 private:
  Matrix instances_;
  std::vector<ClassIndex> labels_;
  std::vector<std::size_t> counts_;
};

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b);

// Exactly counts[y] draws from class y, deterministic in seed. Each class
// uses its own derived stream.
LabeledDataset sample_mixture(const MixtureSpec& spec, std::span<const std::size_t> counts,
                              std::uint64_t seed);

struct SplitDataset {
  LabeledDataset model_part;
  LabeledDataset prior_part;
};

// Stratified split: floor(fraction * N_y) (at least 1) of each class go to
// the model part, the rest to the prior part. Every class needs >= 2 samples.
SplitDataset partition_dataset(const LabeledDataset& ds, double model_fraction,
                               std::uint64_t seed);

struct CsvOptions {
  bool header = false;
};

// Features then a 1-based integer label per line. K is the largest label.
LabeledDataset load_csv_dataset(const std::filesystem::path& path, const CsvOptions& options = {});
void write_csv_dataset(const std::filesystem::path& path, const LabeledDataset& ds);

}  // namespace tla
