#include "ids/bench_harness.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>

#include "ids/errors.hpp"
#include "ids/rng.hpp"

namespace ids {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool wants(const HarnessOptions& o, const std::string& metric) {
  return std::find(o.metrics.begin(), o.metrics.end(), metric) != o.metrics.end();
}

void check_metrics(const std::vector<std::string>& metrics) {
  static const std::set<std::string> known = {"p_ids", "u_ids", "fid", "kid"};
  if (metrics.empty()) throw ConfigError("metric list is empty");
  for (const auto& m : metrics)
    if (!known.count(m)) throw ConfigError("unknown metric '" + m + "'");
}

// Values of one grid cell for one run, keyed by metric name.
using RunValues = std::map<std::string, MetricResult>;

// Runs every job (possibly in parallel) and stores results by job index, so
// completion order never affects the output.
template <typename Job>
std::vector<RunValues> run_jobs(std::size_t count, const Job& job) {
  std::vector<RunValues> out(count);
  std::exception_ptr failure;
  std::size_t failed_at = count;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
    try {
      out[static_cast<std::size_t>(i)] = job(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(ids_harness_failure)
      if (static_cast<std::size_t>(i) < failed_at) {
        failed_at = static_cast<std::size_t>(i);
        failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// Computes the requested metrics for one real/fake pair of feature sets.
RunValues evaluate_all(const FeatureMatrix& real, const FeatureMatrix& fake, bool paired,
                       const HarnessOptions& options, std::uint64_t run_seed_value,
                       const GaussianStats* real_stats) {
  RunValues values;
  if (wants(options, "p_ids") || wants(options, "u_ids")) {
    IdsOptions ids_opts;
    ids_opts.svm = options.svm;
    const std::uint64_t svm_seed = split_seed(run_seed_value, "svm");
    IdsEvaluation ev = evaluate_ids(real, fake, ids_opts, svm_seed, paired);
    nlohmann::json cfg = {{"svm_seed", svm_seed},
                          {"converged", ev.model.converged},
                          {"epochs_run", ev.model.epochs_run}};
    if (wants(options, "p_ids")) values["p_ids"] = MetricResult::single("p_ids", ev.p_ids, real.n(), cfg);
    if (wants(options, "u_ids")) values["u_ids"] = MetricResult::single("u_ids", ev.u_ids, real.n(), cfg);
  }
  if (wants(options, "fid")) {
    GaussianStats fake_stats = gaussian_stats(fake);
    if (options.fid_reference) {
      values["fid"] = fid_result(*options.fid_reference, fake_stats, "fixed-reference");
    } else if (real_stats) {
      values["fid"] = fid_result(*real_stats, fake_stats, "sample");
    } else {
      values["fid"] = fid_result(gaussian_stats(real), fake_stats, "sample");
    }
  }
  if (wants(options, "kid")) {
    values["kid"] = kid(real, fake, options.kid_block_size, split_seed(run_seed_value, "kid"));
  }
  return values;
}

MetricResult aggregate(const std::string& metric, const std::vector<const MetricResult*>& runs) {
  MetricResult out;
  out.name = metric;
  out.n_samples = runs.front()->n_samples;
  nlohmann::json run_configs = nlohmann::json::array();
  for (const MetricResult* r : runs) {
    out.per_run_values.push_back(r->value);
    run_configs.push_back(r->config);
  }
  auto [mean, sd] = mean_and_std(out.per_run_values);
  out.mean = mean;
  out.std = sd;
  out.value = mean;
  out.config = {{"runs", runs.size()}, {"run_configs", run_configs}};
  return out;
}

ExperimentSpec base_spec(const std::string& kind, const HarnessOptions& options, int runs,
                         std::uint64_t seed) {
  ExperimentSpec spec;
  spec.kind = kind;
  spec.metrics = options.metrics;
  spec.runs = runs;
  spec.base_seed = seed;
  spec.svm = options.svm;
  spec.kid_block_size = options.kid_block_size;
  return spec;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec and report serialization

void ExperimentSpec::validate() const {
  static const std::set<std::string> kinds = {"metric", "convergence", "subtle", "bucket-table",
                                              "correlation"};
  if (!kinds.count(kind)) throw ConfigError("unknown experiment kind '" + kind + "'");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (kind != "correlation") check_metrics(metrics);
  if ((kind == "convergence" || kind == "subtle") && grid.empty())
    throw ConfigError("experiment grid is empty");
}

nlohmann::json to_json(const ExperimentSpec& spec) {
  return {{"kind", spec.kind},
          {"metrics", spec.metrics},
          {"grid", spec.grid},
          {"runs", spec.runs},
          {"base_seed", spec.base_seed},
          {"svm", svm_config_json(spec.svm)},
          {"kid_block_size", spec.kid_block_size},
          {"allow_unequal_sizes", spec.allow_unequal_sizes},
          {"inputs", spec.inputs},
          {"extractor", spec.extractor},
          {"output", spec.output}};
}

ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  s.kind = j.at("kind").get<std::string>();
  s.metrics = j.value("metrics", std::vector<std::string>{});
  s.grid = j.value("grid", std::vector<std::size_t>{});
  s.runs = j.value("runs", 5);
  s.base_seed = j.value("base_seed", std::uint64_t{0});
  if (j.contains("svm")) {
    const auto& svm = j.at("svm");
    s.svm.c = svm.value("c", s.svm.c);
    s.svm.tol = svm.value("tol", s.svm.tol);
    s.svm.max_epochs = svm.value("max_epochs", s.svm.max_epochs);
  }
  s.kid_block_size = j.value("kid_block_size", std::size_t{1000});
  s.allow_unequal_sizes = j.value("allow_unequal_sizes", false);
  s.inputs = j.value("inputs", nlohmann::json::object());
  s.extractor = j.value("extractor", nlohmann::json::object());
  s.output = j.value("output", std::string());
  return s;
}

const ReportCell* ExperimentReport::find(const std::string& group, const std::string& param,
                                         const std::string& metric) const {
  for (const auto& c : cells)
    if (c.group == group && c.param == param && c.metric == metric) return &c;
  return nullptr;
}

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells)
    cells.push_back({{"group", c.group}, {"param", c.param}, {"metric", c.metric},
                     {"result", to_json(c.result)}});
  return {{"spec", to_json(report.spec)}, {"cells", cells}, {"notes", report.notes}};
}

ExperimentReport experiment_report_from_json(const nlohmann::json& j) {
  ExperimentReport r;
  r.spec = experiment_spec_from_json(j.at("spec"));
  for (const auto& c : j.at("cells"))
    r.cells.push_back({c.at("group").get<std::string>(), c.at("param").get<std::string>(),
                       c.at("metric").get<std::string>(), metric_result_from_json(c.at("result"))});
  r.notes = j.value("notes", nlohmann::json::object());
  return r;
}

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "group,param,metric,value,mean,std,runs,n_samples,per_run_values\n";
  for (const auto& c : report.cells) {
    std::string runs;
    for (std::size_t i = 0; i < c.result.per_run_values.size(); ++i) {
      if (i) runs += ';';
      runs += fmt17(c.result.per_run_values[i]);
    }
    os << csv_field(c.group) << ',' << csv_field(c.param) << ',' << csv_field(c.metric) << ','
       << fmt17(c.result.value) << ',' << fmt17(c.result.mean) << ',' << fmt17(c.result.std) << ','
       << c.result.per_run_values.size() << ',' << c.result.n_samples << ',' << runs << '\n';
  }
  return os.str();
}

std::vector<ReportCell> cells_from_csv(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line) || trim(line) != "group,param,metric,value,mean,std,runs,n_samples,per_run_values")
    throw ParseError(ParseError::Kind::kCorrupt, "report CSV header mismatch");
  std::vector<ReportCell> cells;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 9) throw ParseError(ParseError::Kind::kCorrupt, "report CSV row has wrong arity");
    ReportCell c;
    c.group = f[0];
    c.param = f[1];
    c.metric = f[2];
    c.result.name = f[2];
    c.result.value = std::stod(f[3]);
    c.result.mean = std::stod(f[4]);
    c.result.std = std::stod(f[5]);
    c.result.n_samples = std::stoul(f[7]);
    std::istringstream rs(f[8]);
    std::string v;
    while (std::getline(rs, v, ';'))
      if (!v.empty()) c.result.per_run_values.push_back(std::stod(v));
    if (c.result.per_run_values.size() != std::stoul(f[6]))
      throw ParseError(ParseError::Kind::kCorrupt, "report CSV run count mismatch");
    cells.push_back(std::move(c));
  }
  return cells;
}

void save_report(const ExperimentReport& report, const std::filesystem::path& json_path) {
  {
    std::ofstream os(json_path);
    if (!os) throw IoError("cannot write report: " + json_path.string());
    os << to_json(report).dump(2) << '\n';
  }
  std::filesystem::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  std::ofstream os(csv_path);
  if (!os) throw IoError("cannot write report: " + csv_path.string());
  os << report_to_csv(report);
}

ExperimentReport load_report(const std::filesystem::path& json_path) {
  std::ifstream is(json_path);
  if (!is) throw IoError("cannot open report: " + json_path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::kCorrupt, json_path.string() + ": " + e.what());
  }
  return experiment_report_from_json(j);
}

bool same_numbers(const ExperimentReport& a, const ExperimentReport& b) {
  if (a.cells.size() != b.cells.size()) return false;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const auto& x = a.cells[i];
    const auto& y = b.cells[i];
    if (x.group != y.group || x.param != y.param || x.metric != y.metric) return false;
    if (x.result.value != y.result.value || x.result.mean != y.result.mean ||
        x.result.std != y.result.std || x.result.per_run_values != y.result.per_run_values)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentReport convergence_study(const FeatureMatrix& real,
                                   const std::map<std::string, FeatureMatrix>& variants,
                                   const std::vector<std::size_t>& sizes, int runs,
                                   std::uint64_t seed, const HarnessOptions& options) {
  check_metrics(options.metrics);
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (variants.empty()) throw ConfigError("convergence study needs at least one variant");
  if (sizes.empty()) throw ConfigError("convergence study needs at least one size");
  if (!std::is_sorted(sizes.begin(), sizes.end())) throw DomainError("sizes must be ascending");
  for (const auto& [label, fake] : variants) {
    if (fake.d() != real.d()) throw DomainError("variant '" + label + "' has a different dimension");
    if (fake.n() != real.n()) throw DomainError("variant '" + label + "' is not row-aligned with real");
  }
  if (sizes.back() > real.n())
    throw DomainError("size " + std::to_string(sizes.back()) + " exceeds n = " + std::to_string(real.n()));
  if (sizes.front() < 2) throw DomainError("sizes must be >= 2");

  struct Job {
    const std::string* label;
    const FeatureMatrix* fake;
    std::size_t size;
    int run;
  };
  std::vector<Job> jobs;
  for (const auto& [label, fake] : variants)
    for (std::size_t size : sizes)
      for (int r = 0; r < runs; ++r) jobs.push_back({&label, &fake, size, r});

  auto values = run_jobs(jobs.size(), [&](std::size_t i) {
    const Job& job = jobs[i];
    const std::uint64_t cell_seed =
        split_seed(seed, *job.label, {job.size, static_cast<std::uint64_t>(job.run)});
    Pcg64 rng(split_seed(cell_seed, "subsample"));
    std::vector<std::size_t> rows = sample_without_replacement(real.n(), job.size, rng);
    FeatureMatrix r = real.select_rows(rows);
    FeatureMatrix f = job.fake->select_rows(rows);
    RunValues v = evaluate_all(r, f, true, options, cell_seed, nullptr);
    for (auto& [name, res] : v) res.config["subsample_seed"] = cell_seed;
    return v;
  });

  ExperimentReport report;
  report.spec = base_spec("convergence", options, runs, seed);
  report.spec.grid = sizes;
  std::size_t k = 0;
  for (const auto& [label, fake] : variants)
    for (std::size_t size : sizes) {
      for (const auto& metric : options.metrics) {
        std::vector<const MetricResult*> per_run;
        for (int r = 0; r < runs; ++r) per_run.push_back(&values[k + static_cast<std::size_t>(r)].at(metric));
        MetricResult agg = aggregate(metric, per_run);
        if (metric == "fid")
          agg.config["reference_mode"] = options.fid_reference ? "fixed-reference" : "sample";
        report.cells.push_back({label, std::to_string(size), metric, std::move(agg)});
      }
      k += static_cast<std::size_t>(runs);
    }
  report.notes["fid_reference_mode"] = options.fid_reference ? "fixed-reference" : "sample";
  return report;
}

ExperimentReport subtle_study(const std::vector<RasterImage>& images,
                              const std::vector<std::size_t>& pixel_counts,
                              const FeatureExtractor& extractor, int runs, std::uint64_t seed,
                              const HarnessOptions& options) {
  check_metrics(options.metrics);
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (images.empty()) throw DomainError("subtle study needs a nonempty corpus");
  if (pixel_counts.empty()) throw ConfigError("subtle study needs at least one pixel count");
  if (!std::is_sorted(pixel_counts.begin(), pixel_counts.end()))
    throw DomainError("pixel counts must be ascending");

  FeatureMatrix real = extractor.extract_images(images);
  std::optional<GaussianStats> real_stats;
  if (wants(options, "fid") && !options.fid_reference) real_stats = gaussian_stats(real);

  // Corruption and extraction are serial per job; the job grid runs in parallel.
  std::vector<RunValues> values(pixel_counts.size() * static_cast<std::size_t>(runs));
  for (std::size_t c = 0; c < pixel_counts.size(); ++c) {
    const std::size_t count = pixel_counts[c];
    for (int r = 0; r < runs; ++r) {
      std::vector<RasterImage> corrupted(images.size());
#pragma omp parallel for schedule(dynamic)
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(images.size()); ++i) {
        corrupted[static_cast<std::size_t>(i)] =
            noisy_pixels(images[static_cast<std::size_t>(i)], count,
                         split_seed(seed, "noisy",
                                    {count, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(i)}));
      }
      FeatureMatrix fake = extractor.extract_images(corrupted);
      const std::uint64_t cell_seed = split_seed(seed, "subtle", {count, static_cast<std::uint64_t>(r)});
      values[c * static_cast<std::size_t>(runs) + static_cast<std::size_t>(r)] =
          evaluate_all(real, fake, true, options, cell_seed, real_stats ? &*real_stats : nullptr);
    }
  }

  ExperimentReport report;
  report.spec = base_spec("subtle", options, runs, seed);
  report.spec.grid = pixel_counts;
  for (std::size_t c = 0; c < pixel_counts.size(); ++c)
    for (const auto& metric : options.metrics) {
      std::vector<const MetricResult*> per_run;
      for (int r = 0; r < runs; ++r)
        per_run.push_back(&values[c * static_cast<std::size_t>(runs) + static_cast<std::size_t>(r)].at(metric));
      report.cells.push_back({"noisy_pixels", std::to_string(pixel_counts[c]), metric, aggregate(metric, per_run)});
    }
  report.notes["corpus_size"] = images.size();
  report.notes["extractor"] = extractor.name();
  return report;
}

BucketedReport bucket_table(const FeatureMatrix& real,
                            const std::map<std::string, FeatureMatrix>& fake_by_bucket, int runs,
                            std::uint64_t seed, const HarnessOptions& options) {
  check_metrics(options.metrics);
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (fake_by_bucket.empty()) throw ConfigError("bucket table needs at least one bucket");
  for (const auto& [label, fake] : fake_by_bucket) {
    parse_bucket_label(label);
    if (fake.n() != real.n() || fake.d() != real.d())
      throw DomainError("bucket '" + label + "' features are not row-aligned with the real set");
  }
  std::optional<GaussianStats> real_stats;
  if (wants(options, "fid") && !options.fid_reference) real_stats = gaussian_stats(real);

  std::vector<const std::string*> labels;
  std::vector<const FeatureMatrix*> fakes;
  for (const auto& [label, fake] : fake_by_bucket) {
    labels.push_back(&label);
    fakes.push_back(&fake);
  }
  const std::size_t job_count = labels.size() * static_cast<std::size_t>(runs);
  auto values = run_jobs(job_count, [&](std::size_t i) {
    const std::size_t b = i / static_cast<std::size_t>(runs);
    const int r = static_cast<int>(i % static_cast<std::size_t>(runs));
    const std::uint64_t cell_seed = split_seed(seed, *labels[b], {static_cast<std::uint64_t>(r)});
    return evaluate_all(real, *fakes[b], true, options, cell_seed, real_stats ? &*real_stats : nullptr);
  });

  BucketedReport report;
  report.spec = base_spec("bucket-table", options, runs, seed);
  for (std::size_t b = 0; b < labels.size(); ++b)
    for (const auto& metric : options.metrics) {
      std::vector<const MetricResult*> per_run;
      for (int r = 0; r < runs; ++r)
        per_run.push_back(&values[b * static_cast<std::size_t>(runs) + static_cast<std::size_t>(r)].at(metric));
      report.cells.push_back({*labels[b], "", metric, aggregate(metric, per_run)});
    }
  return report;
}

BucketedReport bucket_table(const std::filesystem::path& real_dir,
                            const std::map<std::string, std::filesystem::path>& fake_dirs,
                            const FeatureExtractor& extractor, int runs, std::uint64_t seed,
                            const HarnessOptions& options) {
  if (!std::filesystem::is_directory(real_dir))
    throw ConfigError("real image directory missing: " + real_dir.string());
  std::vector<std::filesystem::path> real_files = list_png_files(real_dir);
  if (real_files.empty()) throw ConfigError("no PNG images in " + real_dir.string());
  std::map<std::string, std::size_t> real_index;
  for (std::size_t i = 0; i < real_files.size(); ++i) real_index[real_files[i].filename().string()] = i;

  std::map<std::string, FeatureMatrix> fakes;
  std::optional<std::vector<std::size_t>> common_rows;
  for (const auto& [label, dir] : fake_dirs) {
    if (!std::filesystem::is_directory(dir))
      throw ConfigError("bucket '" + label + "' directory missing: " + dir.string());
    std::vector<std::filesystem::path> files = list_png_files(dir);
    if (files.empty()) throw ConfigError("bucket '" + label + "' has no PNG images");
    std::vector<std::size_t> rows;
    for (const auto& f : files) {
      auto it = real_index.find(f.filename().string());
      if (it == real_index.end())
        throw ConfigError("bucket '" + label + "' image " + f.filename().string() +
                          " has no real counterpart");
      rows.push_back(it->second);
    }
    if (common_rows && *common_rows != rows)
      throw ConfigError("bucket directories must contain the same filenames");
    common_rows = rows;
    fakes.emplace(label, extractor.extract(files));
  }
  std::vector<std::filesystem::path> used;
  for (std::size_t r : *common_rows) used.push_back(real_files[r]);
  FeatureMatrix real = extractor.extract(used);
  BucketedReport report = bucket_table(real, fakes, runs, seed, options);
  report.notes["extractor"] = extractor.name();
  report.notes["images_per_bucket"] = used.size();
  return report;
}

std::string CorrelationReport::scatter_csv() const {
  std::ostringstream os;
  os << "label,human";
  for (const auto& [metric, vals] : metric_values) os << ',' << metric;
  os << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    os << csv_field(labels[i]) << ',' << fmt17(human[i]);
    for (const auto& [metric, vals] : metric_values) os << ',' << fmt17(vals[i]);
    os << '\n';
  }
  return os.str();
}

CorrelationReport correlation_analysis(const std::map<std::string, LabeledPoints>& metric_points,
                                       const LabeledPoints& human_points) {
  if (human_points.size() < 2) throw DomainError("correlation needs at least 2 points");
  std::map<std::string, double> human;
  for (const auto& [label, v] : human_points)
    if (!human.emplace(label, v).second) throw DomainError("duplicate human label '" + label + "'");

  CorrelationReport out;
  for (const auto& [label, v] : human) {
    out.labels.push_back(label);
    out.human.push_back(v);
  }
  for (const auto& [metric, points] : metric_points) {
    std::map<std::string, double> joined;
    for (const auto& [label, v] : points)
      if (!joined.emplace(label, v).second)
        throw DomainError("duplicate label '" + label + "' for metric " + metric);
    if (joined.size() != human.size())
      throw DomainError("label mismatch between " + metric + " and human points");
    std::vector<double> vals;
    for (const auto& label : out.labels) {
      auto it = joined.find(label);
      if (it == joined.end()) throw DomainError("label '" + label + "' missing from " + metric);
      vals.push_back(it->second);
    }
    out.pearson[metric] = pearson(vals, out.human);
    out.metric_values[metric] = std::move(vals);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Re-running from a spec

std::unique_ptr<FeatureExtractor> make_extractor(const nlohmann::json& description) {
  const std::string type = description.value("type", std::string("toy"));
  const auto dim = description.value("dim", kDefaultFeatureDim);
  if (type == "toy") return std::make_unique<ToyEmbedder>(description.value("seed", std::uint64_t{0}), dim);
  if (type == "plugin") {
    if (!description.contains("command")) throw ConfigError("plugin extractor needs a command");
    return std::make_unique<SubprocessExtractor>(description.at("command").get<std::string>(), dim);
  }
  throw ConfigError("unknown extractor type '" + type + "'");
}

std::vector<RasterImage> load_corpus(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files = list_png_files(dir);
  if (files.empty()) throw IoError("no PNG images in " + dir.string());
  std::vector<RasterImage> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_png(f));
  return out;
}

namespace {

std::string input_path(const ExperimentSpec& spec, const char* key) {
  if (!spec.inputs.contains(key)) throw ConfigError(std::string("experiment input '") + key + "' missing");
  std::string p = spec.inputs.at(key).get<std::string>();
  if (!std::filesystem::exists(p)) throw ConfigError("input file does not exist: " + p);
  return p;
}

HarnessOptions options_from(const ExperimentSpec& spec) {
  HarnessOptions o;
  o.metrics = spec.metrics;
  o.svm = spec.svm;
  o.kid_block_size = spec.kid_block_size;
  if (spec.inputs.contains("reference") && !spec.inputs.at("reference").is_null())
    o.fid_reference = load_stats_or_features(input_path(spec, "reference"));
  return o;
}

ExperimentReport run_metric_experiment(const ExperimentSpec& spec) {
  const std::string real_path = input_path(spec, "real");
  FeatureMatrix fake = read_features(input_path(spec, "fake"));
  std::optional<FeatureMatrix> real;
  auto real_features = [&]() -> const FeatureMatrix& {
    if (!real) real = read_features(real_path);
    return *real;
  };
  ExperimentReport report;
  report.spec = spec;
  IdsOptions ids_opts;
  ids_opts.svm = spec.svm;
  ids_opts.allow_unequal_sizes = spec.allow_unequal_sizes;

  for (const auto& metric : spec.metrics) {
    MetricResult res;
    if (metric == "p_ids") {
      PairedFeatureSet pairs(real_features(), fake);
      res = run_repeated([&](std::uint64_t s) { return p_ids(pairs, ids_opts, s); }, spec.runs,
                         spec.base_seed);
    } else if (metric == "u_ids") {
      const FeatureMatrix& r = real_features();
      res = run_repeated([&](std::uint64_t s) { return u_ids(r, fake, ids_opts, s); }, spec.runs,
                         spec.base_seed);
    } else if (metric == "fid") {
      GaussianStats fs = gaussian_stats(fake);
      if (spec.inputs.contains("reference") && !spec.inputs.at("reference").is_null())
        res = fid_result(load_stats_or_features(input_path(spec, "reference")), fs, "fixed-reference");
      else
        res = fid_result(load_stats_or_features(real_path), fs, "sample");
    } else if (metric == "kid") {
      const FeatureMatrix& r = real_features();
      res = run_repeated([&](std::uint64_t s) { return kid(r, fake, spec.kid_block_size, s); },
                         spec.runs, spec.base_seed);
    }
    report.cells.push_back({"", "", metric, std::move(res)});
  }
  return report;
}

ExperimentReport run_correlation_experiment(const ExperimentSpec& spec) {
  const std::string path = input_path(spec, "points");
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw ParseError(ParseError::Kind::kCorrupt, path + ": empty points file");
  auto header = split_csv_line(trim(line));
  if (header.size() < 3 || header[0] != "label" || header[1] != "human")
    throw ParseError(ParseError::Kind::kCorrupt, path + ": header must be label,human,<metric>...");
  LabeledPoints human;
  std::map<std::string, LabeledPoints> metrics;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    auto f = split_csv_line(trim(line));
    if (f.size() != header.size()) throw ParseError(ParseError::Kind::kCorrupt, path + ": ragged row");
    human.emplace_back(f[0], std::stod(f[1]));
    for (std::size_t k = 2; k < f.size(); ++k) metrics[header[k]].emplace_back(f[0], std::stod(f[k]));
  }
  CorrelationReport corr = correlation_analysis(metrics, human);
  ExperimentReport report;
  report.spec = spec;
  for (const auto& [metric, r] : corr.pearson)
    report.cells.push_back({metric, "", "pearson", MetricResult::single("pearson", r, corr.labels.size(), {})});
  report.notes["scatter_csv"] = corr.scatter_csv();
  return report;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentReport report;
  if (spec.kind == "metric") {
    report = run_metric_experiment(spec);
  } else if (spec.kind == "convergence") {
    FeatureMatrix real = read_features(input_path(spec, "real"));
    std::map<std::string, FeatureMatrix> variants;
    if (!spec.inputs.contains("variants")) throw ConfigError("convergence input 'variants' missing");
    for (const auto& [label, path] : spec.inputs.at("variants").items()) {
      std::string p = path.get<std::string>();
      if (!std::filesystem::exists(p)) throw ConfigError("variant file does not exist: " + p);
      variants.emplace(label, read_features(p));
    }
    report = convergence_study(real, variants, spec.grid, spec.runs, spec.base_seed, options_from(spec));
  } else if (spec.kind == "subtle") {
    std::vector<RasterImage> images = load_corpus(input_path(spec, "images"));
    auto extractor = make_extractor(spec.extractor);
    report = subtle_study(images, spec.grid, *extractor, spec.runs, spec.base_seed, options_from(spec));
  } else if (spec.kind == "bucket-table") {
    auto extractor = make_extractor(spec.extractor);
    std::map<std::string, std::filesystem::path> dirs;
    if (!spec.inputs.contains("buckets")) throw ConfigError("bucket-table input 'buckets' missing");
    for (const auto& [label, path] : spec.inputs.at("buckets").items())
      dirs.emplace(label, path.get<std::string>());
    report = bucket_table(std::filesystem::path(input_path(spec, "real")), dirs, *extractor,
                          spec.runs, spec.base_seed, options_from(spec));
  } else {
    report = run_correlation_experiment(spec);
  }
  report.spec = spec;
  return report;
}

}  // namespace ids
