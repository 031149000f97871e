#include "tla/ascent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tla {

ClassIndex ClassRisks::worst() const {
  return static_cast<ClassIndex>(std::max_element(estimates.begin(), estimates.end()) - estimates.begin());
}

ClassRisks class_risks_from_predictions(std::span<const ClassIndex> predicted,
                                        std::span<const ClassIndex> labels, std::size_t class_count) {
  if (predicted.size() != labels.size()) throw std::invalid_argument("class risks: prediction/label mismatch");
  ClassRisks r{std::vector<double>(class_count, 0.0), std::vector<std::size_t>(class_count, 0)};
  std::vector<std::size_t> errors(class_count, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++r.counts.at(labels[i]);
    if (predicted[i] != labels[i]) ++errors[labels[i]];
  }
  for (std::size_t y = 0; y < class_count; ++y) {
    if (r.counts[y] == 0) {
      throw std::invalid_argument("class risks: class " + std::to_string(y + 1) +
                                  " has no samples; use a stratified split");
    }
    r.estimates[y] = static_cast<double>(errors[y]) / static_cast<double>(r.counts[y]);
  }
  return r;
}

ClassRisks estimate_class_risks(const ModelParams& params, const LabeledDataset& dataset) {
  return class_risks_from_predictions(predict(params, dataset.instances()), dataset.labels(),
                                      dataset.class_count());
}

Prior worst_m_indicator(std::span<const double> risks, std::size_t m, Rng& rng) {
  const std::size_t k = risks.size();
  if (m < 1 || m > k) throw std::invalid_argument("worst_m_indicator: need 1 <= M <= K");
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return risks[a] > risks[b]; });
  std::vector<double> p(k, 0.0);
  for (std::size_t i = 0; i < m; ++i) p[order[i]] = 1.0 / static_cast<double>(m);
  return Prior(std::move(p));
}

std::size_t auto_worst_count(std::span<const double> risks, double margin) {
  if (risks.empty()) throw std::invalid_argument("auto_worst_count: empty risks");
  const double worst = *std::max_element(risks.begin(), risks.end());
  return static_cast<std::size_t>(
      std::count_if(risks.begin(), risks.end(), [&](double r) { return r >= worst - margin; }));
}

std::string_view ascent_method_name(AscentMethod m) {
  return m == AscentMethod::linear ? "linear" : "ega";
}

std::optional<AscentMethod> parse_ascent_method(std::string_view name) {
  if (name == "linear") return AscentMethod::linear;
  if (name == "ega") return AscentMethod::ega;
  return std::nullopt;
}

AscentState::AscentState(Prior start, AscentMethod method_, double alpha_, std::size_t m_)
    : current(std::move(start)), method(method_), alpha(alpha_), m(m_) {
  validate();
  trajectory.push_back(current);
}

void AscentState::validate() const {
  if (method == AscentMethod::linear) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("AscentState: linear ascent needs 0 < alpha < 1");
    if (m > current.size()) throw std::invalid_argument("AscentState: M exceeds K");
  } else if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("AscentState: EGA needs alpha >= 0");
  }
}

Prior linear_ascent_step(AscentState& state, const Prior& indicator) {
  if (state.method != AscentMethod::linear) throw std::logic_error("linear_ascent_step: state uses EGA");
  if (!(state.alpha > 0.0 && state.alpha < 1.0)) throw std::invalid_argument("linear_ascent_step: alpha outside (0, 1)");
  if (indicator.size() != state.current.size()) throw std::invalid_argument("linear_ascent_step: length mismatch");
  std::vector<double> next(indicator.size());
  for (std::size_t y = 0; y < next.size(); ++y) {
    next[y] = state.current[y] + state.alpha * (indicator[y] - state.current[y]);
  }
  state.current = Prior(std::move(next));
  state.trajectory.push_back(state.current);
  return state.current;
}

Prior ega_step(AscentState& state, std::span<const double> risks) {
  if (state.method != AscentMethod::ega) throw std::logic_error("ega_step: state uses linear ascent");
  const std::size_t k = state.current.size();
  if (risks.size() != k) throw std::invalid_argument("ega_step: risk length mismatch");
  if (state.alpha == 0.0) {
    // Exact fixed point; renormalizing would perturb the last bit.
    state.trajectory.push_back(state.current);
    return state.current;
  }
  // Shift exponents by the largest risk; the common factor cancels.
  const double rmax = *std::max_element(risks.begin(), risks.end());
  std::vector<double> next(k);
  double sum = 0.0;
  for (std::size_t y = 0; y < k; ++y) {
    next[y] = state.current[y] * std::exp(state.alpha * (risks[y] - rmax));
    sum += next[y];
  }
  if (!std::isfinite(sum) || !(sum > 0.0)) throw std::domain_error("ega_step: degenerate normalizer");
  for (double& v : next) v /= sum;
  state.current = Prior(std::move(next));
  state.trajectory.push_back(state.current);
  return state.current;
}

Prior ascent_step(AscentState& state, std::span<const double> risks, Rng& tie_rng) {
  if (state.method == AscentMethod::ega) return ega_step(state, risks);
  const std::size_t m = state.m == 0 ? auto_worst_count(risks) : state.m;
  return linear_ascent_step(state, worst_m_indicator(risks, m, tie_rng));
}

}  // namespace tla
