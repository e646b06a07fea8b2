#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ids/feature_store.hpp"
#include "ids/linear_svm.hpp"

namespace ids {

/// One metric value with its run history and full provenance.
struct MetricResult {
  std::string name;
  double value = 0.0;
  std::vector<double> per_run_values;
  double mean = 0.0;
  /// Population standard deviation over runs.
  double std = 0.0;
  std::size_t n_samples = 0;
  nlohmann::json config = nlohmann::json::object();

  static MetricResult single(std::string name, double value, std::size_t n_samples,
                             nlohmann::json config);
};

/// Mean and population std, summed in sorted order so any permutation of
/// `values` gives bit-identical results.
std::pair<double, double> mean_and_std(std::vector<double> values);

nlohmann::json to_json(const MetricResult& r);
MetricResult metric_result_from_json(const nlohmann::json& j);

struct IdsOptions {
  SvmConfig svm;
  /// Permit real.n != fake.n for U-IDS. The result config is watermarked.
  bool allow_unequal_sizes = false;
};

/// Everything one SVM fit yields: the model, per-row decision values, and
/// both scores (P-IDS only when the sets are paired).
struct IdsEvaluation {
  SvmModel model;
  std::vector<double> real_scores;
  std::vector<double> fake_scores;
  double p_ids = 0.0;
  double u_ids = 0.0;
  bool paired = false;
};

/// Fits the SVM on real (+1) and fake (-1) rows and scores the same rows.
/// There is deliberately no train/test split.
IdsEvaluation evaluate_ids(const FeatureMatrix& real, const FeatureMatrix& fake,
                           const IdsOptions& options, std::uint64_t seed, bool paired);

/// Fraction of pairs with f(fake_i) > f(real_i), strict; ties count 0.
double p_ids_from_scores(std::span<const double> real_scores, std::span<const double> fake_scores);
/// 1/2 Pr[f(real) < 0] + 1/2 Pr[f(fake) > 0], strict on both sides.
double u_ids_from_scores(std::span<const double> real_scores, std::span<const double> fake_scores);

MetricResult p_ids(const PairedFeatureSet& pairs, const IdsOptions& options, std::uint64_t seed);
MetricResult u_ids(const FeatureMatrix& real, const FeatureMatrix& fake, const IdsOptions& options,
                   std::uint64_t seed);

/// svm hyperparameters and outcome for report configs.
nlohmann::json svm_config_json(const SvmConfig& cfg);

using SeededMetric = std::function<MetricResult(std::uint64_t seed)>;

/// Runs `metric` with seeds split(base_seed, "run", k) for k = 0..runs-1 and
/// aggregates mean/std. Runs execute in parallel; results are keyed by k.
MetricResult run_repeated(const SeededMetric& metric, int runs, std::uint64_t base_seed);

std::uint64_t run_seed(std::uint64_t base_seed, int run);

}  // namespace ids
