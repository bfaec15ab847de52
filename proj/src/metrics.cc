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

#include "spkmia/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "spkmia/error.h"
#include "spkmia/rng.h"
#include "spkmia/vector_math.h"

namespace spkmia {

namespace {

void RequireBothSides(std::size_t a, std::size_t b, const char* what) {
  Require(a > 0 && b > 0, ErrorCode::kEmptyInput, std::string(what) + " needs scores on both sides");
}

}  // namespace

double Auroc(std::span<const double> members, std::span<const double> non_members) {
  RequireBothSides(members.size(), non_members.size(), "AUROC");
  std::vector<std::pair<double, int>> all;
  all.reserve(members.size() + non_members.size());
  for (double s : members) all.emplace_back(s, 1);
  for (double s : non_members) all.emplace_back(s, 0);
  std::sort(all.begin(), all.end());
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t pos = 0;
    while (j < all.size() && all[j].first == all[i].first) pos += all[j++].second;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += mid * static_cast<double>(pos);
    i = j;
  }
  const double n1 = static_cast<double>(members.size());
  const double n0 = static_cast<double>(non_members.size());
  return (rank_sum - n1 * (n1 + 1) / 2) / (n1 * n0);
}

RocCurve ComputeRoc(std::span<const double> members, std::span<const double> non_members) {
  RequireBothSides(members.size(), non_members.size(), "ROC");
  std::vector<std::pair<double, int>> all;
  for (double s : members) all.emplace_back(s, 1);
  for (double s : non_members) all.emplace_back(s, 0);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const double n1 = static_cast<double>(members.size());
  const double n0 = static_cast<double>(non_members.size());
  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < all.size();) {
    const double t = all[i].first;
    while (i < all.size() && all[i].first == t) (all[i++].second ? tp : fp)++;
    curve.points.push_back({t, static_cast<double>(fp) / n0, static_cast<double>(tp) / n1});
  }
  return curve;
}

double TrapezoidArea(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2;
  }
  return area;
}

double TprAtFpr(const RocCurve& curve, double x) {
  Require(x >= 0 && x <= 1, ErrorCode::kInvalidArgument, "target FPR must lie in [0, 1]");
  double best = 0.0;
  for (const auto& p : curve.points) {
    if (p.fpr <= x) best = std::max(best, p.tpr);
  }
  return best;
}

double Accuracy(std::span<const int> decisions, std::span<const int> labels,
                std::string* warning) {
  Require(decisions.size() == labels.size(), ErrorCode::kDimensionMismatch,
          "decisions and labels differ in length");
  Require(!labels.empty(), ErrorCode::kEmptyInput, "accuracy of an empty evaluation set");
  std::size_t correct = 0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    correct += decisions[i] == labels[i] ? 1 : 0;
    positives += labels[i] == 1 ? 1 : 0;
  }
  if (warning) {
    warning->clear();
    if (2 * positives != labels.size()) {
      *warning = "imbalanced evaluation set: " + std::to_string(positives) + " members vs " +
                 std::to_string(labels.size() - positives) + " non-members";
    }
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double BalancedAccuracy(std::span<const int> decisions, std::span<const int> labels) {
  Require(decisions.size() == labels.size(), ErrorCode::kDimensionMismatch,
          "decisions and labels differ in length");
  std::size_t tp = 0, pos = 0, tn = 0, neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      ++pos;
      tp += decisions[i] == 1 ? 1 : 0;
    } else {
      ++neg;
      tn += decisions[i] != 1 ? 1 : 0;
    }
  }
  RequireBothSides(pos, neg, "balanced accuracy");
  return 0.5 * (static_cast<double>(tp) / pos + static_cast<double>(tn) / neg);
}

EerReport ComputeEer(std::span<const double> genuine, std::span<const double> imposter) {
  RequireBothSides(genuine.size(), imposter.size(), "EER");
  std::vector<double> g(genuine.begin(), genuine.end());
  std::vector<double> im(imposter.begin(), imposter.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> thresholds(g);
  thresholds.insert(thresholds.end(), im.begin(), im.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity()));

  struct Pt {
    double far, frr, t;
  };
  // Accept iff score >= t; FAR falls and FRR rises with t.
  std::vector<Pt> pts;
  const double ng = static_cast<double>(g.size());
  const double ni = static_cast<double>(im.size());
  for (double t : thresholds) {
    const auto below_g = std::lower_bound(g.begin(), g.end(), t) - g.begin();
    const auto below_i = std::lower_bound(im.begin(), im.end(), t) - im.begin();
    pts.push_back({(ni - static_cast<double>(below_i)) / ni, static_cast<double>(below_g) / ng, t});
  }
  // Lower convex hull, walking from (0, 1) to (1, 0).
  std::reverse(pts.begin(), pts.end());
  std::vector<Pt> hull;
  for (const Pt& p : pts) {
    while (hull.size() >= 2) {
      const Pt& a = hull[hull.size() - 2];
      const Pt& b = hull.back();
      const double cross = (b.far - a.far) * (p.frr - a.frr) - (b.frr - a.frr) * (p.far - a.far);
      if (cross <= 0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }
  EerReport best{0.0, hull.front().t};
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    const Pt& a = hull[i];
    const Pt& b = hull[i + 1];
    const double dx = b.far - a.far;
    const double dy = b.frr - a.frr;
    if (dx == 0 || dy == 0) continue;
    // Line through a and b meets FAR = FRR at e.
    const double e = (a.frr * dx - a.far * dy) / (dx - dy);
    if (e > best.eer) {
      const double frac = std::clamp((e - a.far) / dx, 0.0, 1.0);
      best = {e, a.t + frac * (b.t - a.t)};
    }
  }
  return best;
}

std::vector<Trial> SampleTrials(std::span<const Voice> voices, std::size_t count,
                                std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < voices.size(); ++i) by_speaker[voices[i].speaker_id()].push_back(i);
  std::vector<const std::vector<std::size_t>*> multi;
  std::vector<const std::vector<std::size_t>*> all;
  for (const auto& [id, idx] : by_speaker) {
    all.push_back(&idx);
    if (idx.size() >= 2) multi.push_back(&idx);
  }
  Require(!multi.empty(), ErrorCode::kNotEnoughVoices, "no speaker has two voices");
  Require(all.size() >= 2, ErrorCode::kNotEnoughSpeakers, "trials need two speakers");
  Rng rng(DeriveSeed(seed, {HashTag("trials")}));
  auto pick = [&](std::size_t n) {
    return static_cast<std::size_t>(rng.UniformInt(0, static_cast<std::int64_t>(n) - 1));
  };
  std::vector<Trial> trials;
  trials.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    if (t % 2 == 0) {
      const auto& s = *multi[pick(multi.size())];
      const std::size_t a = pick(s.size());
      std::size_t b = pick(s.size() - 1);
      if (b >= a) ++b;
      trials.push_back({s[a], s[b], true});
    } else {
      const std::size_t x = pick(all.size());
      std::size_t y = pick(all.size() - 1);
      if (y >= x) ++y;
      trials.push_back({(*all[x])[pick(all[x]->size())], (*all[y])[pick(all[y]->size())], false});
    }
  }
  return trials;
}

namespace {

EerReport TrialEer(const EmbeddingModel& model, std::span<const Voice> voices,
                   std::span<const Trial> trials) {
  std::map<std::size_t, Embedding> cache;
  auto emb = [&](std::size_t i) -> const Embedding& {
    Require(i < voices.size(), ErrorCode::kInvalidArgument, "trial references a missing voice");
    auto it = cache.find(i);
    if (it == cache.end()) it = cache.emplace(i, model.Embed(voices[i])).first;
    return it->second;
  };
  std::vector<double> genuine, imposter;
  for (const Trial& t : trials) {
    const double s = CosineSimilarity(emb(t.enroll), emb(t.test));
    (t.same ? genuine : imposter).push_back(s);
  }
  return ComputeEer(genuine, imposter);
}

}  // namespace

OverfitReport OverfitGap(const EmbeddingModel& model, std::span<const Voice> train_voices,
                         std::span<const Trial> train_trials,
                         std::span<const Voice> test_voices,
                         std::span<const Trial> test_trials) {
  OverfitReport r;
  r.train_eer = TrialEer(model, train_voices, train_trials).eer;
  r.test_eer = TrialEer(model, test_voices, test_trials).eer;
  r.gap = r.test_eer - r.train_eer;
  return r;
}

std::string MetricsCsv(std::span<const MetricRow> rows) {
  std::ostringstream out;
  out << "metric,value,n_members,n_nonmembers,config_hash\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.metric << "," << r.value << "," << r.n_members << "," << r.n_non_members << ","
        << r.config_hash << "\n";
  }
  return out.str();
}

std::string RocCsv(const RocCurve& curve) {
  std::ostringstream out;
  out << "threshold,fpr,tpr\n";
  out << std::setprecision(10);
  for (const auto& p : curve.points) out << p.threshold << "," << p.fpr << "," << p.tpr << "\n";
  return out.str();
}

}  // namespace spkmia
