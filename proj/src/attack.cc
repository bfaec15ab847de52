// Copyright 2026 The spkmia Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spkmia/attack.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "spkmia/error.h"
#include "spkmia/rng.h"

namespace spkmia {

ThresholdModel FitThreshold(std::span<const double> members,
                            std::span<const double> non_members) {
  Require(!members.empty() && !non_members.empty(), ErrorCode::kEmptyInput,
          "threshold fitting needs members and non-members");
  std::vector<double> m(members.begin(), members.end());
  std::vector<double> n(non_members.begin(), non_members.end());
  std::sort(m.begin(), m.end());
  std::sort(n.begin(), n.end());
  std::vector<double> values(m);
  values.insert(values.end(), n.begin(), n.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> candidates;
  candidates.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    candidates.push_back(values[i] + (values[i + 1] - values[i]) / 2);
  }
  candidates.push_back(std::numeric_limits<double>::infinity());

  const double total = static_cast<double>(m.size() + n.size());
  ThresholdModel best;
  best.train_accuracy = -1.0;
  for (double tau : candidates) {
    const auto m_above = m.end() - std::upper_bound(m.begin(), m.end(), tau);
    const auto n_at_or_below = std::upper_bound(n.begin(), n.end(), tau) - n.begin();
    const double acc = static_cast<double>(m_above + n_at_or_below) / total;
    if (acc > best.train_accuracy) {
      best.tau = tau;
      best.train_accuracy = acc;
    }
  }
  return best;
}

ThresholdModel FitThreshold(std::span<const FeatureVector> members,
                            std::span<const FeatureVector> non_members,
                            const std::string& feature) {
  const std::size_t idx = FeatureIndex(feature);
  std::vector<double> a, b;
  for (const auto& fv : members) a.push_back(fv.values.at(idx));
  for (const auto& fv : non_members) b.push_back(fv.values.at(idx));
  ThresholdModel t = FitThreshold(a, b);
  t.feature = feature;
  t.feature_index = idx;
  return t;
}

nlohmann::ordered_json ThresholdModel::ToJson() const {
  nlohmann::ordered_json j;
  j["type"] = "threshold";
  j["feature_order_hash"] = FeatureOrderHash();
  j["feature"] = feature;
  j["tau"] = std::isfinite(tau) ? nlohmann::ordered_json(tau)
                                : nlohmann::ordered_json(tau > 0 ? "inf" : "-inf");
  return j;
}

ThresholdModel ThresholdModel::FromJson(const nlohmann::json& j) {
  Require(j.value("type", "") == "threshold", ErrorCode::kFormatError, "not a threshold model");
  Require(j.value("feature_order_hash", "") == FeatureOrderHash(), ErrorCode::kFormatError,
          "threshold model was saved with a different feature order");
  ThresholdModel t;
  t.feature = j.at("feature").get<std::string>();
  t.feature_index = FeatureIndex(t.feature);
  const auto& tau = j.at("tau");
  if (tau.is_string()) {
    t.tau = (tau.get<std::string>() == "inf" ? 1 : -1) * std::numeric_limits<double>::infinity();
  } else {
    t.tau = tau.get<double>();
  }
  return t;
}

void TrainConfig::Validate() const {
  Require(learning_rate > 0, ErrorCode::kInvalidArgument, "learning_rate must be positive");
  Require(epochs >= 1, ErrorCode::kInvalidArgument, "epochs must be at least 1");
  Require(hidden >= 1, ErrorCode::kInvalidArgument, "hidden width must be at least 1");
  Require(repeats >= 1, ErrorCode::kInvalidArgument, "repeats must be at least 1");
  Require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && epsilon > 0,
          ErrorCode::kInvalidArgument, "invalid Adam constants");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"learning_rate", c.learning_rate}, {"epochs", c.epochs}, {"beta1", c.beta1},
       {"beta2", c.beta2},                 {"epsilon", c.epsilon}, {"hidden", c.hidden},
       {"repeats", c.repeats},             {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.hidden = j.value("hidden", c.hidden);
  c.repeats = j.value("repeats", c.repeats);
  c.seed = j.value("seed", c.seed);
}

std::size_t MixingDataset::count(int label) const {
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [label](const LabeledRow& r) { return r.label == label; }));
}

double MixingDataset::total_weight(int label) const {
  double w = 0.0;
  for (const auto& r : rows) w += r.label == label ? r.weight : 0.0;
  return w;
}

MixingDataset BuildMixingDataset(std::span<const FeatureVector> r1,
                                 std::span<const FeatureVector> r0,
                                 std::span<const FeatureVector> non_members, MixingMode mode) {
  std::set<std::string> ids1, ids0;
  for (const auto& fv : r1) ids1.insert(fv.speaker_id);
  for (const auto& fv : r0) ids0.insert(fv.speaker_id);
  if (mode == MixingMode::kMix) {
    Require(ids1 == ids0 && ids1.size() == r1.size() && ids0.size() == r0.size(),
            ErrorCode::kInvalidArgument,
            "every shadow training speaker needs exactly one r=1 and one r=0 row");
  }
  MixingDataset ds;
  auto add = [&](const FeatureVector& fv, int label, int r) {
    Require(fv.values.size() == kNumFeatures, ErrorCode::kDimensionMismatch,
            "feature row for '" + fv.speaker_id + "' has " + std::to_string(fv.values.size()) +
                " values");
    ds.rows.push_back({fv.speaker_id, fv.values, label, r, 1.0, fv.n});
  };
  if (mode != MixingMode::kOnlyR0) {
    for (const auto& fv : r1) add(fv, 1, 1);
  }
  if (mode != MixingMode::kOnlyR1) {
    for (const auto& fv : r0) add(fv, 1, 0);
  }
  for (const auto& fv : non_members) add(fv, 0, -1);
  const std::size_t pos = ds.count(1);
  const std::size_t neg = ds.count(0);
  Require(pos > 0 && neg > 0, ErrorCode::kDegenerateData,
          "the mixing dataset needs member and non-member rows");
  const double w = static_cast<double>(pos) / static_cast<double>(neg);
  for (auto& row : ds.rows) {
    if (row.label == 0) row.weight = w;
  }
  return ds;
}

MixingDataset MergeDatasets(std::span<const MixingDataset> parts) {
  MixingDataset out;
  for (const auto& p : parts) out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
  return out;
}

ClassifierModel::ClassifierModel(std::size_t inputs, std::size_t hidden)
    : mean_(inputs, 0.0),
      std_(inputs, 1.0),
      w1_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(hidden),
                                static_cast<Eigen::Index>(inputs))),
      b1_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hidden))),
      w2_(Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(hidden))) {}

namespace {

double Sigmoid(double z) {
  const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

double Softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

Eigen::MatrixXd ClassifierModel::Standardize(const Eigen::MatrixXd& x) const {
  Require(static_cast<std::size_t>(x.cols()) == inputs(), ErrorCode::kDimensionMismatch,
          "model expects " + std::to_string(inputs()) + " features, got " +
              std::to_string(x.cols()));
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    out.col(c) = (x.col(c).array() - mean_[c]) / std_[c];
  }
  return out;
}

double ClassifierModel::Predict(std::span<const double> features) const {
  Require(features.size() == inputs(), ErrorCode::kDimensionMismatch,
          "model expects " + std::to_string(inputs()) + " features, got " +
              std::to_string(features.size()));
  Eigen::VectorXd x(static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i) x[i] = (features[i] - mean_[i]) / std_[i];
  const Eigen::VectorXd h = (w1_ * x + b1_).cwiseMax(0.0);
  return Sigmoid(w2_.dot(h) + b2_);
}

std::vector<double> ClassifierModel::PredictBatch(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd xs = Standardize(x);
  Eigen::MatrixXd pre = w1_ * xs.transpose();
  pre.colwise() += b1_;
  const Eigen::RowVectorXd z = (w2_ * pre.cwiseMax(0.0)).array() + b2_;
  std::vector<double> out(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) out[static_cast<std::size_t>(i)] = Sigmoid(z[i]);
  return out;
}

std::size_t ClassifierModel::num_parameters() const {
  return static_cast<std::size_t>(w1_.size() + b1_.size() + w2_.size() + 1);
}

std::vector<double> ClassifierModel::Parameters() const {
  std::vector<double> p;
  p.reserve(num_parameters());
  for (Eigen::Index r = 0; r < w1_.rows(); ++r) {
    for (Eigen::Index c = 0; c < w1_.cols(); ++c) p.push_back(w1_(r, c));
  }
  for (Eigen::Index i = 0; i < b1_.size(); ++i) p.push_back(b1_[i]);
  for (Eigen::Index i = 0; i < w2_.size(); ++i) p.push_back(w2_[i]);
  p.push_back(b2_);
  return p;
}

void ClassifierModel::SetParameters(std::span<const double> p) {
  Require(p.size() == num_parameters(), ErrorCode::kDimensionMismatch,
          "parameter vector has the wrong length");
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < w1_.rows(); ++r) {
    for (Eigen::Index c = 0; c < w1_.cols(); ++c) w1_(r, c) = p[k++];
  }
  for (Eigen::Index i = 0; i < b1_.size(); ++i) b1_[i] = p[k++];
  for (Eigen::Index i = 0; i < w2_.size(); ++i) w2_[i] = p[k++];
  b2_ = p[k];
}

void ClassifierModel::SetStandardization(std::vector<double> mean, std::vector<double> stddev) {
  Require(mean.size() == inputs() && stddev.size() == inputs(), ErrorCode::kDimensionMismatch,
          "standardization does not match the model inputs");
  for (double s : stddev) {
    Require(s > 0 && std::isfinite(s), ErrorCode::kInvalidArgument,
            "standardization scale must be positive");
  }
  mean_ = std::move(mean);
  std_ = std::move(stddev);
}

nlohmann::ordered_json ClassifierModel::ToJson() const {
  auto layer = [](const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
    nlohmann::ordered_json l;
    l["rows"] = w.rows();
    l["cols"] = w.cols();
    std::vector<double> weights;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) weights.push_back(w(r, c));
    }
    l["weights"] = weights;
    l["bias"] = std::vector<double>(b.data(), b.data() + b.size());
    return l;
  };
  nlohmann::ordered_json j;
  j["type"] = "mlp";
  j["feature_order_hash"] = FeatureOrderHash();
  j["standardization"] = {{"mean", mean_}, {"std", std_}};
  Eigen::VectorXd b2(1);
  b2[0] = b2_;
  j["layers"] = nlohmann::ordered_json::array({layer(w1_, b1_), layer(w2_, b2)});
  return j;
}

ClassifierModel ClassifierModel::FromJson(const nlohmann::json& j) {
  Require(j.value("type", "") == "mlp", ErrorCode::kFormatError, "not a classifier model");
  Require(j.value("feature_order_hash", "") == FeatureOrderHash(), ErrorCode::kFormatError,
          "classifier was saved with a different feature order");
  try {
    const auto& layers = j.at("layers");
    Require(layers.size() == 2, ErrorCode::kFormatError, "classifier needs two layers");
    const auto rows = layers[0].at("rows").get<std::size_t>();
    const auto cols = layers[0].at("cols").get<std::size_t>();
    Require(layers[1].at("rows").get<std::size_t>() == 1 &&
                layers[1].at("cols").get<std::size_t>() == rows,
            ErrorCode::kFormatError, "output layer does not match the hidden width");
    ClassifierModel m(cols, rows);
    std::vector<double> p = layers[0].at("weights").get<std::vector<double>>();
    auto b1 = layers[0].at("bias").get<std::vector<double>>();
    auto w2 = layers[1].at("weights").get<std::vector<double>>();
    auto b2 = layers[1].at("bias").get<std::vector<double>>();
    p.insert(p.end(), b1.begin(), b1.end());
    p.insert(p.end(), w2.begin(), w2.end());
    p.insert(p.end(), b2.begin(), b2.end());
    m.SetParameters(p);
    m.SetStandardization(j.at("standardization").at("mean").get<std::vector<double>>(),
                         j.at("standardization").at("std").get<std::vector<double>>());
    return m;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kFormatError, std::string("bad classifier file: ") + e.what());
  }
}

bool ClassifierModel::operator==(const ClassifierModel& o) const {
  return mean_ == o.mean_ && std_ == o.std_ && w1_ == o.w1_ && b1_ == o.b1_ && w2_ == o.w2_ &&
         b2_ == o.b2_;
}

double WeightedLoss(const ClassifierModel& model, const Eigen::MatrixXd& x,
                    std::span<const int> labels, std::span<const double> weights,
                    std::vector<double>* grad) {
  const Eigen::Index rows = x.rows();
  Require(static_cast<std::size_t>(rows) == labels.size() && labels.size() == weights.size(),
          ErrorCode::kDimensionMismatch, "rows, labels and weights differ in length");
  const Eigen::MatrixXd xs = model.Standardize(x);
  Eigen::MatrixXd pre = model.w1_ * xs.transpose();
  pre.colwise() += model.b1_;
  const Eigen::MatrixXd h = pre.cwiseMax(0.0);
  const Eigen::RowVectorXd z = (model.w2_ * h).array() + model.b2_;
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  Require(wsum > 0, ErrorCode::kDegenerateData, "weights sum to zero");
  double loss = 0.0;
  Eigen::RowVectorXd dz(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double y = labels[i];
    loss += weights[i] * (Softplus(z[i]) - y * z[i]);
    const double p = z[i] >= 0 ? 1.0 / (1.0 + std::exp(-z[i]))
                               : std::exp(z[i]) / (1.0 + std::exp(z[i]));
    dz[i] = weights[i] * (p - y) / wsum;
  }
  loss /= wsum;
  if (grad) {
    const Eigen::RowVectorXd gw2 = dz * h.transpose();
    const double gb2 = dz.sum();
    Eigen::MatrixXd dh = model.w2_.transpose() * dz;
    dh.array() *= (pre.array() > 0.0).cast<double>();
    const Eigen::MatrixXd gw1 = dh * xs;
    const Eigen::VectorXd gb1 = dh.rowwise().sum();
    grad->clear();
    grad->reserve(model.num_parameters());
    for (Eigen::Index r = 0; r < gw1.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw1.cols(); ++c) grad->push_back(gw1(r, c));
    }
    for (Eigen::Index i = 0; i < gb1.size(); ++i) grad->push_back(gb1[i]);
    for (Eigen::Index i = 0; i < gw2.size(); ++i) grad->push_back(gw2[i]);
    grad->push_back(gb2);
  }
  return loss;
}

Eigen::MatrixXd RowsToMatrix(std::span<const LabeledRow> rows) {
  Require(!rows.empty(), ErrorCode::kEmptyInput, "no rows");
  const std::size_t d = rows.front().features.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Require(rows[i].features.size() == d, ErrorCode::kDimensionMismatch,
            "rows differ in feature count");
    for (std::size_t c = 0; c < d; ++c) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i].features[c];
  }
  return x;
}

ClassifierModel TrainClassifier(const MixingDataset& data, const TrainConfig& config,
                                std::uint64_t seed) {
  config.Validate();
  Require(data.count(1) >= 2 && data.count(0) >= 2, ErrorCode::kDegenerateData,
          "training needs at least two rows of each class");
  const Eigen::MatrixXd x = RowsToMatrix(data.rows);
  const auto d = static_cast<std::size_t>(x.cols());
  std::vector<int> labels;
  std::vector<double> weights;
  for (const auto& r : data.rows) {
    labels.push_back(r.label);
    weights.push_back(r.weight);
  }

  ClassifierModel model(d, static_cast<std::size_t>(config.hidden));
  std::vector<double> mean(d), stddev(d);
  for (std::size_t c = 0; c < d; ++c) {
    const auto col = x.col(static_cast<Eigen::Index>(c));
    mean[c] = col.mean();
    const double var = (col.array() - mean[c]).square().mean();
    stddev[c] = var > 0 ? std::sqrt(var) : 1.0;
  }
  model.SetStandardization(mean, stddev);

  Rng rng(DeriveSeed(seed, {HashTag("mlp-init")}));
  const double a1 = std::sqrt(6.0 / static_cast<double>(d + model.hidden()));
  const double a2 = std::sqrt(6.0 / static_cast<double>(model.hidden() + 1));
  for (Eigen::Index r = 0; r < model.w1_.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.w1_.cols(); ++c) model.w1_(r, c) = rng.Uniform(-a1, a1);
  }
  for (Eigen::Index i = 0; i < model.w2_.size(); ++i) model.w2_[i] = rng.Uniform(-a2, a2);

  std::vector<double> params = model.Parameters();
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0), grad;
  double b1t = 1.0, b2t = 1.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    WeightedLoss(model, x, labels, weights, &grad);
    b1t *= config.beta1;
    b2t *= config.beta2;
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1 - config.beta1) * grad[i];
      v[i] = config.beta2 * v[i] + (1 - config.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / (1 - b1t);
      const double vhat = v[i] / (1 - b2t);
      params[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
    model.SetParameters(params);
  }
  return model;
}

std::vector<ClassifierModel> TrainEnsemble(const MixingDataset& data, const TrainConfig& config) {
  config.Validate();
  std::vector<ClassifierModel> out;
  for (int r = 0; r < config.repeats; ++r) {
    out.push_back(TrainClassifier(data, config, config.seed + static_cast<std::uint64_t>(r)));
  }
  return out;
}

std::size_t ModelBank::ModelCountFor(std::size_t n) const {
  Require(n >= 2, ErrorCode::kNotEnoughVoices, "bank inference needs at least 2 voices");
  return std::min(n, bound);
}

const ClassifierModel& ModelBank::ModelFor(std::size_t n) const {
  const std::size_t k = ModelCountFor(n);
  auto it = models.find(k);
  Require(it != models.end(), ErrorCode::kInvalidArgument,
          "bank has no model for " + std::to_string(k) + " voices");
  return it->second;
}

std::vector<Voice> KeepSmallestIds(std::span<const Voice> voices, std::size_t keep) {
  std::vector<Voice> sorted(voices.begin(), voices.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Voice& a, const Voice& b) { return a.voice_id() < b.voice_id(); });
  if (sorted.size() > keep) sorted.erase(sorted.begin() + static_cast<std::ptrdiff_t>(keep), sorted.end());
  return sorted;
}

BankDecision BankInfer(const ModelBank& bank, std::span<const Voice> voices,
                       const FeatureFn& features) {
  const std::size_t k = bank.ModelCountFor(voices.size());
  const ClassifierModel& model = bank.ModelFor(voices.size());
  BankDecision out;
  out.model_n = k;
  out.discarded = voices.size() - k;
  const FeatureVector fv = features(voices.size() > k ? KeepSmallestIds(voices, k)
                                                      : std::vector<Voice>(voices.begin(), voices.end()));
  out.probability = model.Predict(fv.values);
  out.decision = out.probability > 0.5 ? 1 : 0;
  return out;
}

WelchResult WelchTTest(std::span<const double> a, std::span<const double> b) {
  Require(a.size() >= 2 && b.size() >= 2, ErrorCode::kNotEnoughVoices,
          "Welch test needs two values per sample");
  auto moments = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    const double mean = s / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::make_pair(mean, ss / static_cast<double>(x.size() - 1));
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = va / na;
  const double sb = vb / nb;
  WelchResult r;
  if (sa + sb == 0.0) {
    r.t = 0.0;
    r.df = na + nb - 2;
    r.p = ma == mb ? 1.0 : 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1) + sb * sb / (nb - 1));
  boost::math::students_t dist(r.df);
  r.p = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

BoundResult BoundVoiceCount(std::size_t num_features, std::size_t num_datasets,
                            const BoundSampler& sampler, const BoundOptions& options) {
  Require(options.step >= 1, ErrorCode::kInvalidArgument, "voice step must be at least 1");
  Require(options.alpha > 0 && options.alpha < 1, ErrorCode::kInvalidArgument,
          "alpha must lie in (0, 1)");
  Require(options.start_n >= 1 && options.max_n >= options.start_n, ErrorCode::kInvalidArgument,
          "invalid voice-count range");
  BoundResult result;
  for (std::size_t f = 0; f < num_features; ++f) {
    for (std::size_t d = 0; d < num_datasets; ++d) {
      BoundTrace trace{f, d, {}, 0};
      for (std::size_t n = options.start_n; n <= options.max_n; ++n) {
        const BoundSamples s = sampler(f, d, n, options.step);
        if (s.at_n.size() < 2 || s.at_n_plus_s.size() < 2) break;
        const double p = WelchTTest(s.at_n, s.at_n_plus_s).p;
        trace.p_values.push_back(p);
        if (p >= options.alpha || n == options.max_n) {
          trace.accepted_n = n;
          break;
        }
      }
      if (trace.accepted_n > 0) result.bound = std::max(result.bound, trace.accepted_n);
      result.traces.push_back(std::move(trace));
    }
  }
  Require(result.bound > 0, ErrorCode::kNotEnoughVoices,
          "no feature/dataset pair had enough voices for the T-test bound");
  return result;
}

}  // namespace spkmia
