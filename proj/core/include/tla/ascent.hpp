#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tla/data.hpp"
#include "tla/model.hpp"
#include "tla/prior.hpp"
#include "tla/random.hpp"

namespace tla {

// Per-class 0-1 error estimates and the sample counts behind them.
struct ClassRisks {
  std::vector<double> estimates;
  std::vector<std::size_t> counts;

  std::size_t size() const { return estimates.size(); }
  // Largest estimate, smallest index on ties.
  ClassIndex worst() const;
};

ClassRisks class_risks_from_predictions(std::span<const ClassIndex> predicted,
                                        std::span<const ClassIndex> labels, std::size_t class_count);

// Fraction of misclassified samples per class. Throws if any class is absent.
ClassRisks estimate_class_risks(const ModelParams& params, const LabeledDataset& dataset);

// 1/M on the M classes with the largest risks. Ties are broken by a random
// permutation drawn from rng.
Prior worst_m_indicator(std::span<const double> risks, std::size_t m, Rng& rng);
inline Prior worst_m_indicator(const ClassRisks& risks, std::size_t m, Rng& rng) {
  return worst_m_indicator(risks.estimates, m, rng);
}

// Number of classes whose risk lies within margin of the worst one.
std::size_t auto_worst_count(std::span<const double> risks, double margin = 0.05);

enum class AscentMethod { linear, ega };
std::string_view ascent_method_name(AscentMethod m);
std::optional<AscentMethod> parse_ascent_method(std::string_view name);

struct AscentState {
  Prior current;
  AscentMethod method = AscentMethod::linear;
  double alpha = 0.01;
  std::size_t m = 1;  // linear only; 0 selects auto_worst_count each step
  std::vector<Prior> trajectory;

  AscentState(Prior start, AscentMethod method, double alpha, std::size_t m = 1);
  void validate() const;
};

// pi <- pi + alpha (indicator - pi).
Prior linear_ascent_step(AscentState& state, const Prior& indicator);
// pi_y <- pi_y exp(alpha r_y) / sum_y' pi_y' exp(alpha r_y').
Prior ega_step(AscentState& state, std::span<const double> risks);
inline Prior ega_step(AscentState& state, const ClassRisks& risks) {
  return ega_step(state, risks.estimates);
}

// One update with whichever rule the state carries.
Prior ascent_step(AscentState& state, std::span<const double> risks, Rng& tie_rng);

}  // namespace tla
