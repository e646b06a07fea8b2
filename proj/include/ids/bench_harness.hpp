#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ids/baseline_metrics.hpp"
#include "ids/feature_store.hpp"
#include "ids/ids_metrics.hpp"
#include "ids/manipulations.hpp"

namespace ids {

/// Everything needed to reproduce a report. Embedded verbatim in every report.
struct ExperimentSpec {
  /// "metric", "convergence", "subtle", "bucket-table" or "correlation".
  std::string kind;
  std::vector<std::string> metrics;
  /// Sample sizes (convergence) or noisy-pixel counts (subtle).
  std::vector<std::size_t> grid;
  int runs = 5;
  std::uint64_t base_seed = 0;
  SvmConfig svm;
  std::size_t kid_block_size = 1000;
  bool allow_unequal_sizes = false;
  /// File inputs, keyed by role (e.g. "real", "variants", "reference", "buckets").
  nlohmann::json inputs = nlohmann::json::object();
  /// Feature extractor description: {"type": "toy", "seed": s, "dim": d} or
  /// {"type": "plugin", "command": c, "dim": d}.
  nlohmann::json extractor = nlohmann::json::object();
  std::string output;

  void validate() const;
};

nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);

/// One table cell: (group = variant/bucket label, param = size/pixel count, metric).
struct ReportCell {
  std::string group;
  std::string param;
  std::string metric;
  MetricResult result;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<ReportCell> cells;
  /// Free-form annotations (e.g. convergence gaps, FID reference mode).
  nlohmann::json notes = nlohmann::json::object();

  const ReportCell* find(const std::string& group, const std::string& param,
                         const std::string& metric) const;
};

/// Masked-ratio table; groups are bucket labels such as "0-0.2".
using BucketedReport = ExperimentReport;

nlohmann::json to_json(const ExperimentReport& report);
ExperimentReport experiment_report_from_json(const nlohmann::json& j);

/// Header: group,param,metric,value,mean,std,runs,n_samples,per_run_values.
/// Doubles are printed with 17 significant digits so parsing restores them.
std::string report_to_csv(const ExperimentReport& report);
/// Rebuilds the cells of a CSV table (spec and configs are not part of CSV).
std::vector<ReportCell> cells_from_csv(const std::string& csv);

void save_report(const ExperimentReport& report, const std::filesystem::path& json_path);
ExperimentReport load_report(const std::filesystem::path& json_path);

/// True when both reports hold the same cells with bit-identical numbers.
bool same_numbers(const ExperimentReport& a, const ExperimentReport& b);

struct HarnessOptions {
  std::vector<std::string> metrics = {"p_ids", "u_ids", "fid"};
  SvmConfig svm;
  std::size_t kid_block_size = 1000;
  /// Fixed FID reference; when absent FID uses the equally-subsampled real side.
  std::optional<GaussianStats> fid_reference;
};

/// Subsample-size sweep. For every (variant, size, run) draws `size` row
/// indices with seed split(seed, variant, {size, run}); the same indices are
/// taken from real and variant so pairing is preserved.
ExperimentReport convergence_study(const FeatureMatrix& real,
                                   const std::map<std::string, FeatureMatrix>& variants,
                                   const std::vector<std::size_t>& sizes, int runs,
                                   std::uint64_t seed, const HarnessOptions& options = {});

/// Noisy-pixel sweep over an image corpus. Each run redraws the corruption
/// (seed split(seed, "noisy", {count, run, image})) and refits the SVM.
ExperimentReport subtle_study(const std::vector<RasterImage>& images,
                              const std::vector<std::size_t>& pixel_counts,
                              const FeatureExtractor& extractor, int runs, std::uint64_t seed,
                              const HarnessOptions& options = {});

/// Masked-ratio table from features. Fakes must be row-aligned with `real`.
/// Each run refits the SVM with its own seed.
BucketedReport bucket_table(const FeatureMatrix& real,
                            const std::map<std::string, FeatureMatrix>& fake_by_bucket, int runs,
                            std::uint64_t seed, const HarnessOptions& options = {});

/// Directory variant: extracts `real_dir` once and every bucket directory; fake
/// files are matched to real files by filename. Throws ConfigError when a
/// bucket directory is missing or a fake has no real counterpart.
BucketedReport bucket_table(const std::filesystem::path& real_dir,
                            const std::map<std::string, std::filesystem::path>& fake_dirs,
                            const FeatureExtractor& extractor, int runs, std::uint64_t seed,
                            const HarnessOptions& options = {});

/// Labeled values; labels are bucket/method identifiers.
using LabeledPoints = std::vector<std::pair<std::string, double>>;

struct CorrelationReport {
  /// Pearson r per metric against the human preference rate.
  std::map<std::string, double> pearson;
  /// Joined scatter table: label, human rate, then one value per metric.
  std::vector<std::string> labels;
  std::vector<double> human;
  std::map<std::string, std::vector<double>> metric_values;

  std::string scatter_csv() const;
};

/// Joins each metric series with the human rates on label and correlates them.
/// Label sets must match exactly (DomainError otherwise).
CorrelationReport correlation_analysis(const std::map<std::string, LabeledPoints>& metric_points,
                                       const LabeledPoints& human_points);

/// Builds the extractor described by an ExperimentSpec::extractor object.
std::unique_ptr<FeatureExtractor> make_extractor(const nlohmann::json& description);

/// Loads every input named by `spec` and runs the experiment it describes.
/// Re-running the spec embedded in a report reproduces its numbers exactly.
ExperimentReport run_experiment(const ExperimentSpec& spec);

/// PNG images of a directory in filename order.
std::vector<RasterImage> load_corpus(const std::filesystem::path& dir);

}  // namespace ids
