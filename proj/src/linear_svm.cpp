#include "ids/linear_svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ids/errors.hpp"
#include "ids/rng.hpp"

namespace ids {

namespace {

double dot_aug(const std::vector<double>& w, std::span<const float> x) {
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) acc += w[k] * static_cast<double>(x[k]);
  return acc + w[x.size()];
}

double half_norm2_minus_sum(const std::vector<double>& w, const std::vector<double>& alpha) {
  double nrm = 0.0;
  for (double v : w) nrm += v * v;
  return 0.5 * nrm - std::accumulate(alpha.begin(), alpha.end(), 0.0);
}

}  // namespace

LabeledFeatures::LabeledFeatures(FeatureMatrix features, std::vector<int> labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (labels_.size() != features_.n())
    throw DomainError("label count does not match feature rows");
  bool pos = false;
  bool neg = false;
  for (int y : labels_) {
    if (y == 1)
      pos = true;
    else if (y == -1)
      neg = true;
    else
      throw DomainError("labels must be +1 or -1");
  }
  if (!pos || !neg) throw TrainingError("SVM training requires both classes");
}

LabeledFeatures LabeledFeatures::from_real_fake(const FeatureMatrix& real,
                                                const FeatureMatrix& fake) {
  if (real.d() != fake.d()) throw DomainError("real and fake feature dimensions differ");
  std::vector<float> data;
  data.reserve((real.n() + fake.n()) * real.d());
  data.insert(data.end(), real.data().begin(), real.data().end());
  data.insert(data.end(), fake.data().begin(), fake.data().end());
  std::vector<int> labels(real.n(), 1);
  labels.resize(real.n() + fake.n(), -1);
  return LabeledFeatures(FeatureMatrix(real.n() + fake.n(), real.d(), std::move(data), "real+fake"),
                         std::move(labels));
}

SvmModel fit_svm(const LabeledFeatures& data, const SvmConfig& config, std::uint64_t seed) {
  if (!(config.c > 0.0) || !std::isfinite(config.c)) throw DomainError("SVM C must be positive");
  if (!(config.tol > 0.0)) throw DomainError("SVM tol must be positive");
  if (config.max_epochs < 1) throw DomainError("SVM max_epochs must be >= 1");

  const FeatureMatrix& x = data.features();
  const std::vector<int>& y = data.labels();
  const std::size_t n = x.n();
  const std::size_t d = x.d();
  const double c = config.c;

  std::vector<double> qii(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 1.0;  // augmented constant feature
    for (float v : x.row(i)) s += static_cast<double>(v) * static_cast<double>(v);
    qii[i] = s;
  }

  std::vector<double> alpha(n, 0.0);
  std::vector<double> w(d + 1, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Pcg64 rng(seed);

  SvmModel model;
  model.c_param = c;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    shuffle(order, rng);
    double max_violation = 0.0;
    for (std::size_t i : order) {
      auto xi = x.row(i);
      const double yi = y[i];
      const double g = yi * dot_aug(w, xi) - 1.0;
      double pg = g;
      if (alpha[i] == 0.0)
        pg = std::min(g, 0.0);
      else if (alpha[i] == c)
        pg = std::max(g, 0.0);
      max_violation = std::max(max_violation, std::abs(pg));
      if (pg == 0.0) continue;

      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qii[i], 0.0, c);
      const double delta = (alpha[i] - old) * yi;
      if (delta == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) w[k] += delta * static_cast<double>(xi[k]);
      w[d] += delta;

      if (config.debug_checks && (alpha[i] < 0.0 || alpha[i] > c))
        throw NumericalError("dual variable left the box [0, C]");
    }
    model.epochs_run = epoch + 1;
    model.final_violation = max_violation;
    if (config.trace_objective) model.objective_trace.push_back(half_norm2_minus_sum(w, alpha));
    if (max_violation <= config.tol) {
      model.converged = true;
      break;
    }
  }

  model.dual_objective = half_norm2_minus_sum(w, alpha);
  model.bias = w[d];
  w.pop_back();
  model.weights = std::move(w);
  for (double v : model.weights)
    if (!std::isfinite(v)) throw NumericalError("SVM training produced non-finite weights");
  if (!std::isfinite(model.bias)) throw NumericalError("SVM training produced non-finite bias");
  return model;
}

std::vector<double> decision_values(const SvmModel& model, const FeatureMatrix& feats) {
  if (feats.d() != model.dim())
    throw DomainError("decision_values: feature dimension " + std::to_string(feats.d()) +
                      " does not match model dimension " + std::to_string(model.dim()));
  std::vector<double> out(feats.n());
  kernels::affine_scores(feats.view(), model.weights, model.bias, out);
  return out;
}

double dual_objective(const LabeledFeatures& data, const std::vector<double>& alpha) {
  const FeatureMatrix& x = data.features();
  if (alpha.size() != x.n()) throw DomainError("dual_objective: alpha length mismatch");
  std::vector<double> w(x.d() + 1, 0.0);
  for (std::size_t i = 0; i < x.n(); ++i) {
    const double coef = alpha[i] * data.labels()[i];
    auto xi = x.row(i);
    for (std::size_t k = 0; k < x.d(); ++k) w[k] += coef * static_cast<double>(xi[k]);
    w[x.d()] += coef;
  }
  return half_norm2_minus_sum(w, alpha);
}

nlohmann::json to_json(const SvmModel& model) {
  return {
      {"weights", model.weights},
      {"bias", model.bias},
      {"c_param", model.c_param},
      {"epochs_run", model.epochs_run},
      {"converged", model.converged},
      {"dual_objective", model.dual_objective},
      {"final_violation", model.final_violation},
  };
}

SvmModel svm_model_from_json(const nlohmann::json& j) {
  SvmModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.c_param = j.at("c_param").get<double>();
  m.epochs_run = j.at("epochs_run").get<int>();
  m.converged = j.at("converged").get<bool>();
  m.dual_objective = j.at("dual_objective").get<double>();
  m.final_violation = j.value("final_violation", 0.0);
  return m;
}

}  // namespace ids
