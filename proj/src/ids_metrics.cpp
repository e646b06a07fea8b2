#include "ids/ids_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>

#include "ids/errors.hpp"
#include "ids/rng.hpp"

namespace ids {

MetricResult MetricResult::single(std::string name, double value, std::size_t n_samples,
                                  nlohmann::json config) {
  MetricResult r;
  r.name = std::move(name);
  r.value = value;
  r.per_run_values = {value};
  r.mean = value;
  r.std = 0.0;
  r.n_samples = n_samples;
  r.config = std::move(config);
  return r;
}

std::pair<double, double> mean_and_std(std::vector<double> values) {
  if (values.empty()) throw DomainError("mean_and_std: no values");
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  std::vector<double> dev2(values.size());
  std::transform(values.begin(), values.end(), dev2.begin(),
                 [mean](double v) { return (v - mean) * (v - mean); });
  std::sort(dev2.begin(), dev2.end());
  double ss = 0.0;
  for (double v : dev2) ss += v;
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

nlohmann::json to_json(const MetricResult& r) {
  return {
      {"name", r.name},          {"value", r.value},
      {"mean", r.mean},          {"std", r.std},
      {"per_run_values", r.per_run_values},
      {"n_samples", r.n_samples}, {"config", r.config},
  };
}

MetricResult metric_result_from_json(const nlohmann::json& j) {
  MetricResult r;
  r.name = j.at("name").get<std::string>();
  r.value = j.at("value").get<double>();
  r.mean = j.at("mean").get<double>();
  r.std = j.at("std").get<double>();
  r.per_run_values = j.at("per_run_values").get<std::vector<double>>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  r.config = j.value("config", nlohmann::json::object());
  return r;
}

nlohmann::json svm_config_json(const SvmConfig& cfg) {
  return {{"loss", "hinge"},
          {"c", cfg.c},
          {"tol", cfg.tol},
          {"max_epochs", cfg.max_epochs},
          {"bias", "constant-feature augmentation"},
          {"standardization", "none"}};
}

double p_ids_from_scores(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.size() != fake_scores.size() || real_scores.empty())
    throw DomainError("P-IDS requires equally many, nonzero, paired scores");
  std::size_t wins = 0;
  for (std::size_t i = 0; i < real_scores.size(); ++i)
    if (fake_scores[i] > real_scores[i]) ++wins;
  return static_cast<double>(wins) / static_cast<double>(real_scores.size());
}

double u_ids_from_scores(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.empty() || fake_scores.empty()) throw DomainError("U-IDS requires scores");
  auto real_err = std::count_if(real_scores.begin(), real_scores.end(), [](double f) { return f < 0.0; });
  auto fake_err = std::count_if(fake_scores.begin(), fake_scores.end(), [](double f) { return f > 0.0; });
  return 0.5 * static_cast<double>(real_err) / static_cast<double>(real_scores.size()) +
         0.5 * static_cast<double>(fake_err) / static_cast<double>(fake_scores.size());
}

IdsEvaluation evaluate_ids(const FeatureMatrix& real, const FeatureMatrix& fake,
                           const IdsOptions& options, std::uint64_t seed, bool paired) {
  if (real.d() != fake.d()) throw DomainError("real and fake feature dimensions differ");
  if (real.n() != fake.n() && (paired || !options.allow_unequal_sizes))
    throw DomainError("real and fake sample counts differ (" + std::to_string(real.n()) + " vs " +
                      std::to_string(fake.n()) + ")");
  IdsEvaluation ev;
  ev.paired = paired;
  ev.model = fit_svm(LabeledFeatures::from_real_fake(real, fake), options.svm, seed);
  ev.real_scores = decision_values(ev.model, real);
  ev.fake_scores = decision_values(ev.model, fake);
  ev.u_ids = u_ids_from_scores(ev.real_scores, ev.fake_scores);
  if (paired) ev.p_ids = p_ids_from_scores(ev.real_scores, ev.fake_scores);
  return ev;
}

namespace {

nlohmann::json ids_config(const IdsOptions& options, const IdsEvaluation& ev, std::uint64_t seed) {
  nlohmann::json cfg = {{"svm", svm_config_json(options.svm)},
                        {"seed", seed},
                        {"converged", ev.model.converged},
                        {"epochs_run", ev.model.epochs_run},
                        {"tie_rule", "strict inequality; ties score 0"},
                        {"fit_protocol", "fit and evaluated on the same samples"}};
  if (ev.real_scores.size() != ev.fake_scores.size()) cfg["unequal_class_sizes_override"] = true;
  return cfg;
}

}  // namespace

MetricResult p_ids(const PairedFeatureSet& pairs, const IdsOptions& options, std::uint64_t seed) {
  IdsEvaluation ev = evaluate_ids(pairs.real, pairs.fake, options, seed, true);
  return MetricResult::single("p_ids", ev.p_ids, pairs.real.n(), ids_config(options, ev, seed));
}

MetricResult u_ids(const FeatureMatrix& real, const FeatureMatrix& fake, const IdsOptions& options,
                   std::uint64_t seed) {
  IdsEvaluation ev = evaluate_ids(real, fake, options, seed, false);
  return MetricResult::single("u_ids", ev.u_ids, real.n(), ids_config(options, ev, seed));
}

std::uint64_t run_seed(std::uint64_t base_seed, int run) {
  return split_seed(base_seed, "run", {static_cast<std::uint64_t>(run)});
}

MetricResult run_repeated(const SeededMetric& metric, int runs, std::uint64_t base_seed) {
  if (runs < 1) throw DomainError("runs must be >= 1");
  std::vector<std::optional<MetricResult>> results(static_cast<std::size_t>(runs));
  std::exception_ptr failure;
  int failed_run = runs;
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < runs; ++k) {
    try {
      results[static_cast<std::size_t>(k)] = metric(run_seed(base_seed, k));
    } catch (...) {
#pragma omp critical(ids_run_repeated_failure)
      if (k < failed_run) {
        failed_run = k;
        failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);

  MetricResult out;
  out.name = results[0]->name;
  out.n_samples = results[0]->n_samples;
  nlohmann::json run_configs = nlohmann::json::array();
  for (int k = 0; k < runs; ++k) {
    const MetricResult& r = *results[static_cast<std::size_t>(k)];
    out.per_run_values.push_back(r.value);
    run_configs.push_back(r.config);
  }
  auto [mean, sd] = mean_and_std(out.per_run_values);
  out.mean = mean;
  out.std = sd;
  out.value = mean;
  out.config = {{"runs", runs}, {"base_seed", base_seed}, {"run_configs", run_configs}};
  return out;
}

}  // namespace ids
