#include "tla/data.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tla/random.hpp"

namespace tla {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  return out;
}

std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

}  // namespace

void MixtureSpec::validate() const {
  const std::size_t k = class_count();
  if (k < 2) throw std::invalid_argument("MixtureSpec: need at least 2 classes");
  if (covariances.size() != k) {
    throw std::invalid_argument("MixtureSpec: one covariance per class required");
  }
  const std::size_t d = dim();
  if (d == 0) throw std::invalid_argument("MixtureSpec: zero-dimensional means");
  for (std::size_t y = 0; y < k; ++y) {
    const std::string cls = "class " + std::to_string(y + 1);
    if (means[y].size() != d) throw std::invalid_argument("MixtureSpec: mean dimension mismatch at " + cls);
    for (double v : means[y])
      if (!std::isfinite(v)) throw std::invalid_argument("MixtureSpec: non-finite mean at " + cls);
    const Matrix& cov = covariances[y];
    if (cov.rows() != d || cov.cols() != d) {
      throw std::invalid_argument("MixtureSpec: covariance shape mismatch at " + cls);
    }
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < r; ++c)
        if (std::abs(cov(r, c) - cov(c, r)) > 1e-12 * (1.0 + std::abs(cov(r, c)))) {
          throw std::invalid_argument("MixtureSpec: asymmetric covariance at " + cls);
        }
    Eigen::LLT<Eigen::MatrixXd> llt(to_eigen(cov));
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("MixtureSpec: covariance not positive-definite at " + cls);
    }
  }
}

MixtureSpec MixtureSpec::circle(std::size_t class_count, double radius) {
  MixtureSpec spec;
  for (std::size_t y = 0; y < class_count; ++y) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(y) /
                         static_cast<double>(class_count);
    spec.means.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    Matrix cov(2, 2);
    cov(0, 0) = cov(1, 1) = 1.0;
    spec.covariances.push_back(cov);
  }
  return spec;
}

MixtureSpec MixtureSpec::line(std::vector<double> centers, double variance) {
  MixtureSpec spec;
  for (double c : centers) {
    spec.means.push_back({c});
    spec.covariances.emplace_back(1, 1, variance);
  }
  return spec;
}

std::vector<std::size_t> make_imbalance_counts(const ImbalanceProfile& profile,
                                               std::size_t class_count) {
  if (class_count < 2) throw std::invalid_argument("make_imbalance_counts: need K >= 2");
  if (!(profile.ratio > 0.0) || profile.ratio > 1.0) {
    throw std::invalid_argument("make_imbalance_counts: ratio must lie in (0, 1]");
  }
  if (profile.base_count == 0) throw std::invalid_argument("make_imbalance_counts: zero base count");

  const double base = static_cast<double>(profile.base_count);
  std::vector<std::size_t> counts(class_count);
  if (profile.kind == ImbalanceKind::long_tail) {
    for (std::size_t y = 0; y < class_count; ++y) {
      const double exponent = static_cast<double>(y) / static_cast<double>(class_count - 1);
      counts[y] = round_half_up(std::pow(profile.ratio, exponent) * base);
    }
  } else {
    const std::size_t minor_classes = (class_count + 1) / 2;
    const std::size_t minor = round_half_up(profile.ratio * base);
    for (std::size_t y = 0; y < class_count; ++y)
      counts[y] = y < minor_classes ? minor : profile.base_count;
  }
  for (std::size_t y = 0; y < class_count; ++y) {
    if (counts[y] == 0) {
      throw std::invalid_argument("make_imbalance_counts: class " + std::to_string(y + 1) +
                                  " rounds to zero samples");
    }
  }
  return counts;
}

LabeledDataset::LabeledDataset(Matrix instances, std::vector<ClassIndex> labels,
                               std::size_t class_count)
    : instances_(std::move(instances)), labels_(std::move(labels)), counts_(class_count, 0) {
  if (instances_.rows() != labels_.size()) {
    throw std::invalid_argument("LabeledDataset: instance and label counts differ");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= class_count) {
      throw std::invalid_argument("LabeledDataset: label out of range at row " +
                                  std::to_string(i + 1));
    }
    ++counts_[labels_[i]];
  }
}

bool LabeledDataset::has_all_classes() const {
  return std::all_of(counts_.begin(), counts_.end(), [](std::size_t n) { return n > 0; });
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<ClassIndex> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) labels.push_back(labels_.at(i));
  return LabeledDataset(instances_.gather_rows(indices), std::move(labels), class_count());
}

std::vector<std::size_t> LabeledDataset::indices_of(ClassIndex y) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == y) out.push_back(i);
  return out;
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.class_count() != b.class_count()) throw std::invalid_argument("concat: class count mismatch");
  if (!a.empty() && !b.empty() && a.dim() != b.dim()) {
    throw std::invalid_argument("concat: dimension mismatch");
  }
  std::vector<ClassIndex> labels(a.labels().begin(), a.labels().end());
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  return LabeledDataset(vstack(a.instances(), b.instances()), std::move(labels), a.class_count());
}

LabeledDataset sample_mixture(const MixtureSpec& spec, std::span<const std::size_t> counts,
                              std::uint64_t seed) {
  spec.validate();
  const std::size_t k = spec.class_count();
  const std::size_t d = spec.dim();
  if (counts.size() != k) throw std::invalid_argument("sample_mixture: counts length must equal K");

  std::size_t total = 0;
  for (std::size_t n : counts) total += n;
  Matrix x(total, d);
  std::vector<ClassIndex> labels;
  labels.reserve(total);

  std::size_t row = 0;
  for (std::size_t y = 0; y < k; ++y) {
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(to_eigen(spec.covariances[y])).matrixL();
    Rng rng = make_rng(seed, y);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(d);
    for (std::size_t n = 0; n < counts[y]; ++n, ++row) {
      for (std::size_t j = 0; j < d; ++j) z(j) = normal(rng);
      const Eigen::VectorXd draw = chol * z;
      for (std::size_t j = 0; j < d; ++j) x(row, j) = spec.means[y][j] + draw(j);
      labels.push_back(y);
    }
  }
  return LabeledDataset(std::move(x), std::move(labels), k);
}

SplitDataset partition_dataset(const LabeledDataset& ds, double model_fraction,
                               std::uint64_t seed) {
  if (!(model_fraction > 0.0 && model_fraction < 1.0)) {
    throw std::invalid_argument("partition_dataset: model fraction must lie in (0, 1)");
  }
  std::vector<bool> to_model(ds.size(), false);
  for (ClassIndex y = 0; y < ds.class_count(); ++y) {
    std::vector<std::size_t> idx = ds.indices_of(y);
    if (idx.size() < 2) {
      throw std::invalid_argument("partition_dataset: class " + std::to_string(y + 1) +
                                  " has fewer than 2 samples");
    }
    // The epsilon keeps products like 0.29 * 100 from flooring to 28.
    auto n_model = static_cast<std::size_t>(
        std::floor(model_fraction * static_cast<double>(idx.size()) + 1e-9));
    n_model = std::clamp<std::size_t>(n_model, 1, idx.size() - 1);
    Rng rng = make_rng(seed, y);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < n_model; ++i) to_model[idx[i]] = true;
  }
  std::vector<std::size_t> model_idx, prior_idx;
  for (std::size_t i = 0; i < ds.size(); ++i) (to_model[i] ? model_idx : prior_idx).push_back(i);
  return {ds.subset(model_idx), ds.subset(prior_idx)};
}

LabeledDataset load_csv_dataset(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv_dataset: cannot open " + path.string());

  Matrix x;
  std::vector<long long> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::vector<double> features;
  while (std::getline(in, line)) {
    ++line_no;
    if (options.header && line_no == 1) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const auto fail = [&](const std::string& why) {
      return std::runtime_error("load_csv_dataset: row " + std::to_string(line_no) + ": " + why);
    };
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() < 2) throw fail("expected at least one feature and a label");
    if (width == 0) width = fields.size();
    if (fields.size() != width) throw fail("expected " + std::to_string(width) + " columns");

    features.clear();
    for (std::size_t j = 0; j + 1 < fields.size(); ++j) {
      std::string_view f = fields[j];
      while (!f.empty() && f.front() == ' ') f.remove_prefix(1);
      while (!f.empty() && f.back() == ' ') f.remove_suffix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || f.empty() || !std::isfinite(v)) {
        throw fail("feature column " + std::to_string(j + 1) + " is not a finite number");
      }
      features.push_back(v);
    }
    std::string_view lf = fields.back();
    while (!lf.empty() && lf.front() == ' ') lf.remove_prefix(1);
    while (!lf.empty() && lf.back() == ' ') lf.remove_suffix(1);
    long long label = 0;
    const auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    if (ec != std::errc() || ptr != lf.data() + lf.size() || lf.empty()) {
      throw fail("label is not an integer");
    }
    if (label < 1) throw fail("label must be >= 1");
    x.append_row(features);
    raw_labels.push_back(label);
  }
  if (raw_labels.empty()) throw std::runtime_error("load_csv_dataset: no data rows in " + path.string());

  const auto k = static_cast<std::size_t>(*std::max_element(raw_labels.begin(), raw_labels.end()));
  std::vector<ClassIndex> labels;
  labels.reserve(raw_labels.size());
  for (long long l : raw_labels) labels.push_back(static_cast<ClassIndex>(l - 1));
  return LabeledDataset(std::move(x), std::move(labels), k);
}

void write_csv_dataset(const std::filesystem::path& path, const LabeledDataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv_dataset: cannot open " + path.string());
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.instances().row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << ds.labels()[i] + 1 << '\n';
  }
}

}  // namespace tla
