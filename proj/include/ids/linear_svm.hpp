#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ids/feature_store.hpp"

namespace ids {

/// Hyperparameters for the soft-margin linear SVM. Defaults are the toolkit's
/// documented choices; nothing here is tuned per dataset.
struct SvmConfig {
  double c = 1.0;
  double tol = 1e-4;
  int max_epochs = 1000;
  /// Record the dual objective after every epoch.
  bool trace_objective = false;
  /// Verify 0 <= alpha_i <= C after every update; violations throw NumericalError.
  bool debug_checks = false;
};

/// Linear decision function f(x) = weights . x + bias, plus training metadata.
struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double c_param = 0.0;
  int epochs_run = 0;
  bool converged = false;
  double dual_objective = 0.0;
  /// Max projected-gradient violation observed in the last epoch.
  double final_violation = 0.0;
  std::vector<double> objective_trace;

  std::size_t dim() const noexcept { return weights.size(); }
};

/// Features with labels +1 (real) / -1 (fake); both classes present.
class LabeledFeatures {
 public:
  LabeledFeatures(FeatureMatrix features, std::vector<int> labels);

  /// Stacks real rows (label +1) above fake rows (label -1).
  static LabeledFeatures from_real_fake(const FeatureMatrix& real, const FeatureMatrix& fake);

  const FeatureMatrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

 private:
  FeatureMatrix features_;
  std::vector<int> labels_;
};

/// Trains by dual coordinate descent on
///   min_alpha 1/2 alpha^T Q alpha - 1^T alpha,  0 <= alpha_i <= C,
///   Q_ij = y_i y_j (x_i . x_j + 1),
/// i.e. hinge loss with the bias learned as the weight of a constant-1
/// feature. Coordinates are visited in a fresh seeded permutation each epoch;
/// training stops once an epoch's largest projected-gradient magnitude is
/// <= tol, or after max_epochs (converged = false, not an error).
SvmModel fit_svm(const LabeledFeatures& data, const SvmConfig& config, std::uint64_t seed);

/// weights . x_i + bias for every row; positive means "classified real".
std::vector<double> decision_values(const SvmModel& model, const FeatureMatrix& feats);

/// 1/2 ||w_aug||^2 - sum(alpha) for a given dual point (used by tests and audits).
double dual_objective(const LabeledFeatures& data, const std::vector<double>& alpha);

nlohmann::json to_json(const SvmModel& model);
SvmModel svm_model_from_json(const nlohmann::json& j);

}  // namespace ids
