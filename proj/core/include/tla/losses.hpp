#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tla/data.hpp"
#include "tla/matrix.hpp"
#include "tla/prior.hpp"

namespace tla {

enum class LossVariant { ce, wce, focal, focal_alpha, ldam, la, vs, twce, tla, gml };

inline constexpr std::array kAllLossVariants = {
    LossVariant::ce,  LossVariant::wce, LossVariant::focal, LossVariant::focal_alpha,
    LossVariant::ldam, LossVariant::la, LossVariant::vs,    LossVariant::twce,
    LossVariant::tla, LossVariant::gml};

std::string_view loss_variant_name(LossVariant v);
std::optional<LossVariant> parse_loss_variant(std::string_view name);
// Comma-separated list of accepted names, for error messages.
std::string_view loss_variant_names();
// TLA and TWCE depend on the target prior; the rest ignore it.
bool is_targeted(LossVariant v);

struct LossHyper {
  double tau = 1.0;              // LA, VS, TLA
  double gamma = 0.0;            // VS
  double ldam_max_margin = 0.5;  // largest |offset| for LDAM
  double drw_beta = 0.9999;
  bool drw_weights = false;      // LDAM with deferred re-weighting switched on
};

// Where additive offsets are applied: every class logit, or only the
// logit of the sample's true class (LDAM margins).
enum class OffsetRule { all_classes, true_class_only };

// -w_y log softmax_y(Delta o f + l), one (w, Delta, l) triple per class.
// Focal variants scale w_y per sample by (1 - p_y)^2. GML uses its own
// batch-level form and ignores the vectors.
struct GeneralizedLossSpec {
  LossVariant variant = LossVariant::ce;
  std::vector<double> weights;
  std::vector<double> scales;
  std::vector<double> offsets;
  OffsetRule offset_rule = OffsetRule::all_classes;

  std::size_t class_count() const { return weights.size(); }
  bool focal() const { return variant == LossVariant::focal || variant == LossVariant::focal_alpha; }
  void validate() const;
};

// Bitwise equality of the numeric loss definition; the variant tag is ignored
// unless one side is GML.
bool equivalent(const GeneralizedLossSpec& a, const GeneralizedLossSpec& b);

// l_y = tau * (ln pi^train_y - ln pi^t_y).
std::vector<double> tla_offsets(const Prior& pi_train, const Prior& pi_target, double tau);

// class_counts may be empty for variants that do not need absolute counts
// (CE, Focal, LA, TWCE, TLA, GML); VS and LDAM fall back to pi_train ratios.
GeneralizedLossSpec spec_from_variant(LossVariant variant, const Prior& pi_train,
                                      const Prior& pi_target,
                                      std::span<const std::size_t> class_counts,
                                      const LossHyper& hyper);

struct LossEvaluation {
  double loss = 0.0;
  Matrix gradient;  // d loss / d logits, N x K; empty when not requested
};

LossEvaluation evaluate_batch_loss(const GeneralizedLossSpec& spec, const Matrix& logits,
                                   std::span<const ClassIndex> labels, bool with_gradient = true);

inline double batch_loss(const GeneralizedLossSpec& spec, const Matrix& logits,
                         std::span<const ClassIndex> labels) {
  return evaluate_batch_loss(spec, logits, labels, false).loss;
}

inline Matrix batch_loss_gradient(const GeneralizedLossSpec& spec, const Matrix& logits,
                                  std::span<const ClassIndex> labels) {
  return evaluate_batch_loss(spec, logits, labels, true).gradient;
}

// Geometric mean loss over the classes present in the batch. batch_class_counts
// must match the label histogram.
LossEvaluation gml_batch_loss(const Matrix& logits, std::span<const ClassIndex> labels,
                              std::span<const std::size_t> batch_class_counts,
                              bool with_gradient = true);
LossEvaluation gml_batch_loss(const Matrix& logits, std::span<const ClassIndex> labels,
                              bool with_gradient = true);

}  // namespace tla
