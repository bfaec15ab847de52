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

#include "spkmia/query_plan.h"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "spkmia/error.h"

namespace spkmia {

std::string_view FeatureGroupName(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::kCentroid: return "centroid";
    case FeatureGroup::kPairwise: return "pairwise";
    case FeatureGroup::kCentroidCentroid: return "centroid-centroid";
    case FeatureGroup::kCentroidVoice: return "centroid-voice";
    case FeatureGroup::kVoiceCentroid: return "voice-centroid";
    case FeatureGroup::kVoiceVoice: return "voice-voice";
  }
  return "?";
}

FeatureGroup ParseFeatureGroup(std::string_view name) {
  for (FeatureGroup g : kAllFeatureGroups) {
    if (FeatureGroupName(g) == name) return g;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown feature group '" + std::string(name) + "'");
}

FeatureGroupSet::FeatureGroupSet(std::initializer_list<FeatureGroup> groups) {
  for (FeatureGroup g : groups) Insert(g);
}

FeatureGroupSet FeatureGroupSet::All() {
  FeatureGroupSet s;
  for (FeatureGroup g : kAllFeatureGroups) s.Insert(g);
  return s;
}

std::size_t FeatureGroupSet::size() const {
  std::size_t n = 0;
  for (FeatureGroup g : kAllFeatureGroups) n += Contains(g) ? 1 : 0;
  return n;
}

std::vector<FeatureGroup> FeatureGroupSet::List() const {
  std::vector<FeatureGroup> out;
  for (FeatureGroup g : kAllFeatureGroups) {
    if (Contains(g)) out.push_back(g);
  }
  return out;
}

std::string TechniqueName(const Technique& t) {
  std::string out;
  auto add = [&](const char* s) {
    if (!out.empty()) out += "+";
    out += s;
  };
  if (t.concat) add("concat");
  if (t.group) add("group");
  if (t.share) add("share");
  return out.empty() ? "baseline" : out;
}

Voice ConcatVoices(std::span<const Voice> voices, const std::string& voice_id) {
  Require(!voices.empty(), ErrorCode::kEmptyInput, "nothing to concatenate");
  if (voices.size() == 1 && voice_id.empty()) return voices.front();
  const int rate = voices.front().sample_rate();
  std::vector<float> samples;
  std::string id;
  for (const Voice& v : voices) {
    Require(v.sample_rate() == rate, ErrorCode::kInvalidArgument,
            "cannot concatenate voices at " + std::to_string(rate) + " Hz and " +
                std::to_string(v.sample_rate()) + " Hz");
    samples.insert(samples.end(), v.samples().begin(), v.samples().end());
    id += (id.empty() ? "" : "+") + v.voice_id();
  }
  return Voice(voices.front().speaker_id(), voice_id.empty() ? id : voice_id,
               std::move(samples), rate);
}

Voice ConcatSorted(std::span<const Voice> voices, const std::string& voice_id) {
  std::vector<Voice> sorted(voices.begin(), voices.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Voice& a, const Voice& b) { return a.voice_id() < b.voice_id(); });
  return ConcatVoices(sorted, voice_id);
}

namespace {

void CheckShape(std::size_t n, std::span<const std::size_t> k) {
  Require(n >= 1, ErrorCode::kInvalidArgument, "N must be at least 1");
  Require(!k.empty(), ErrorCode::kInvalidArgument, "M must be at least 1");
  for (std::size_t kj : k) Require(kj >= 1, ErrorCode::kInvalidArgument, "K_j must be >= 1");
}

void CheckMode(const Technique& t, SrsAccessMode mode) {
  Require(mode != SrsAccessMode::kWhiteBox, ErrorCode::kAccessModeViolation,
          "query plans need a black-box SRS");
  Require(!t.group || mode == SrsAccessMode::kBlackBoxIdentification,
          ErrorCode::kTechniqueModeMismatch, "group enrollment needs identification mode");
}

std::uint64_t Sum(std::span<const std::size_t> k) {
  std::uint64_t q = 0;
  for (std::size_t kj : k) q += kj;
  return q;
}

bool SymmetricVoiceCentroid(const FeatureGroupSet& g, const Technique& t) {
  return t.share && t.concat && t.group && g.Contains(FeatureGroup::kVoiceCentroid) &&
         g.Contains(FeatureGroup::kCentroidCentroid) && g.Contains(FeatureGroup::kVoiceVoice);
}

}  // namespace

PlanCounts PredictCounts(FeatureGroup group, std::size_t n, std::span<const std::size_t> k,
                         const Technique& technique, SrsAccessMode mode) {
  CheckShape(n, k);
  CheckMode(technique, mode);
  const std::uint64_t N = n;
  const std::uint64_t M = k.size();
  const std::uint64_t Q = Sum(k);
  const bool c = technique.concat;
  const bool g = technique.group;
  switch (group) {
    case FeatureGroup::kCentroid: return {c ? 1 : N, N};
    case FeatureGroup::kPairwise: return {N - 1, g ? N - 1 : N * (N - 1) / 2};
    case FeatureGroup::kCentroidCentroid: return {c ? 1 : N, M};
    case FeatureGroup::kCentroidVoice: return {c ? 1 : N, Q};
    case FeatureGroup::kVoiceCentroid: return {c ? M : Q, g ? N : N * M};
    case FeatureGroup::kVoiceVoice: return {N, g ? Q : Q * N};
  }
  Fail(ErrorCode::kInvalidArgument, "unknown feature group");
}

PlanCounts PredictCounts(const FeatureGroupSet& groups, std::size_t n,
                         std::span<const std::size_t> k, const Technique& technique,
                         SrsAccessMode mode) {
  CheckShape(n, k);
  CheckMode(technique, mode);
  PlanCounts sum;
  for (FeatureGroup g : groups.List()) {
    const PlanCounts c = PredictCounts(g, n, k, technique, mode);
    sum.enrollment += c.enrollment;
    sum.recognition += c.recognition;
  }
  if (!technique.share || groups.size() < 2) return sum;

  using G = FeatureGroup;
  const std::uint64_t N = n;
  const std::uint64_t M = k.size();
  const std::uint64_t Q = Sum(k);
  const bool c = technique.concat;
  const bool sym = SymmetricVoiceCentroid(groups, technique);
  const bool vc = groups.Contains(G::kVoiceCentroid) && !sym;

  PlanCounts out;
  if (groups.Contains(G::kCentroid) || groups.Contains(G::kCentroidCentroid) ||
      groups.Contains(G::kCentroidVoice)) {
    out.enrollment += c ? 1 : N;
  }
  if (groups.Contains(G::kVoiceVoice) || sym) {
    out.enrollment += N;
  } else if (groups.Contains(G::kPairwise)) {
    out.enrollment += N - 1;
  }
  if (vc) out.enrollment += c ? M : Q;

  if (!technique.group) {
    out.recognition = sum.recognition;
    return out;
  }
  if (groups.Contains(G::kCentroid) || vc) {
    out.recognition += N;
  } else if (groups.Contains(G::kPairwise)) {
    out.recognition += N - 1;
  }
  if (groups.Contains(G::kCentroidVoice) || groups.Contains(G::kVoiceVoice)) out.recognition += Q;
  if (groups.Contains(G::kCentroidCentroid) || sym) out.recognition += M;
  return out;
}

std::uint64_t WhiteBoxCount(std::size_t n, std::size_t q) {
  Require(n >= 1 && q >= 1, ErrorCode::kInvalidArgument, "N and Q must be at least 1");
  return static_cast<std::uint64_t>(n) + q;
}

PlanCounts QueryPlan::counts() const {
  PlanCounts c;
  for (const auto& t : templates) c.enrollment += t.enroll_voices;
  c.recognition = recognitions.size();
  return c;
}

namespace {

class PlanBuilder {
 public:
  explicit PlanBuilder(QueryPlan* plan) : plan_(plan) {}

  void Need(FeatureGroup g, TableSlot slot, std::size_t row, std::size_t col,
            ProbeKind probe, std::size_t probe_index, TemplateKind tk, std::size_t t_index) {
    const int scope = plan_->technique.share ? 0 : static_cast<int>(g) + 1;
    const std::size_t t = TemplateFor(scope, tk, t_index);
    const auto key = std::make_tuple(scope, static_cast<int>(probe), probe_index,
                                     plan_->technique.group ? std::size_t(-1) : t);
    auto it = recognitions_.find(key);
    std::size_t r;
    if (it == recognitions_.end()) {
      r = plan_->recognitions.size();
      plan_->recognitions.push_back({probe, probe_index, {}});
      recognitions_.emplace(key, r);
    } else {
      r = it->second;
    }
    auto& list = plan_->recognitions[r].templates;
    auto pos = std::find(list.begin(), list.end(), t);
    if (pos == list.end()) {
      list.push_back(t);
      pos = list.end() - 1;
    }
    plan_->scores.push_back({g, slot, row, col, r, static_cast<std::size_t>(pos - list.begin())});
  }

 private:
  std::size_t TemplateFor(int scope, TemplateKind kind, std::size_t index) {
    const auto key = std::make_tuple(scope, static_cast<int>(kind), index);
    auto it = templates_.find(key);
    if (it != templates_.end()) return it->second;
    std::size_t voices = 1;
    if (!plan_->technique.concat) {
      if (kind == TemplateKind::kTargetCentroid) voices = plan_->n;
      if (kind == TemplateKind::kImposter) voices = plan_->k[index];
    }
    plan_->templates.push_back({kind, index, scope, voices});
    templates_.emplace(key, plan_->templates.size() - 1);
    return plan_->templates.size() - 1;
  }

  QueryPlan* plan_;
  std::map<std::tuple<int, int, std::size_t>, std::size_t> templates_;
  std::map<std::tuple<int, int, std::size_t, std::size_t>, std::size_t> recognitions_;
};

}  // namespace

QueryPlan BuildQueryPlan(const FeatureGroupSet& groups, std::size_t n,
                         std::span<const std::size_t> k, const Technique& technique,
                         SrsAccessMode mode) {
  CheckShape(n, k);
  CheckMode(technique, mode);
  Require(!groups.empty(), ErrorCode::kInvalidArgument, "no feature group requested");
  QueryPlan plan;
  plan.groups = groups;
  plan.technique = technique;
  plan.mode = mode;
  plan.n = n;
  plan.k.assign(k.begin(), k.end());
  plan.voice_centroid_symmetric = SymmetricVoiceCentroid(groups, technique);

  const std::size_t m = k.size();
  std::vector<std::size_t> owner;
  for (std::size_t j = 0; j < m; ++j) owner.insert(owner.end(), k[j], j);
  const std::size_t q = owner.size();

  using G = FeatureGroup;
  using P = ProbeKind;
  using T = TemplateKind;
  PlanBuilder b(&plan);
  for (G g : groups.List()) {
    switch (g) {
      case G::kCentroid:
        for (std::size_t i = 0; i < n; ++i) {
          b.Need(g, TableSlot::kFc, i, 0, P::kTargetVoice, i, T::kTargetCentroid, 0);
        }
        break;
      case G::kPairwise:
        for (std::size_t j = 1; j < n; ++j) {
          for (std::size_t i = 0; i < j; ++i) {
            b.Need(g, TableSlot::kPair, i, j, P::kTargetVoice, j, T::kTargetSingle, i);
          }
        }
        break;
      case G::kCentroidCentroid:
        for (std::size_t j = 0; j < m; ++j) {
          b.Need(g, TableSlot::kCc, j, 0, P::kImposterConcat, j, T::kTargetCentroid, 0);
        }
        break;
      case G::kCentroidVoice:
        for (std::size_t v = 0; v < q; ++v) {
          b.Need(g, TableSlot::kCv, v, 0, P::kImposterVoice, v, T::kTargetCentroid, 0);
        }
        break;
      case G::kVoiceCentroid:
        if (plan.voice_centroid_symmetric) {
          for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
              b.Need(g, TableSlot::kVc, i, j, P::kImposterConcat, j, T::kTargetSingle, i);
            }
          }
        } else {
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
              b.Need(g, TableSlot::kVc, i, j, P::kTargetVoice, i, T::kImposter, j);
            }
          }
        }
        break;
      case G::kVoiceVoice:
        for (std::size_t v = 0; v < q; ++v) {
          for (std::size_t i = 0; i < n; ++i) {
            b.Need(g, TableSlot::kVv, i, v, P::kImposterVoice, v, T::kTargetSingle, i);
          }
        }
        break;
    }
  }
  return plan;
}

SimilarityTable ExecutePlan(const QueryPlan& plan, SrsSession& session,
                            std::span<const Voice> target, const ImposterBank& bank) {
  bank.Validate();
  Require(target.size() == plan.n, ErrorCode::kDimensionMismatch,
          "plan expects " + std::to_string(plan.n) + " target voices, got " +
              std::to_string(target.size()));
  Require(bank.voices_per_imposter() == plan.k, ErrorCode::kDimensionMismatch,
          "imposter bank does not match the plan");
  Require(session.mode() == plan.mode, ErrorCode::kAccessModeViolation,
          "session mode differs from the planned mode");

  std::vector<const Voice*> flat;
  for (const auto& vs : bank.voices) {
    for (const Voice& v : vs) flat.push_back(&v);
  }
  std::optional<Voice> target_concat;
  std::vector<std::optional<Voice>> imposter_concat(bank.voices.size());
  auto concat_of = [&](std::size_t j) -> const Voice& {
    if (!imposter_concat[j]) imposter_concat[j] = ConcatSorted(bank.voices[j]);
    return *imposter_concat[j];
  };

  std::vector<std::vector<double>> results(plan.recognitions.size());
  try {
    std::vector<TemplateId> ids;
    ids.reserve(plan.templates.size());
    for (const PlannedTemplate& t : plan.templates) {
      const TemplateId id = session.EnrollCreate();
      ids.push_back(id);
      switch (t.kind) {
        case TemplateKind::kTargetCentroid:
          if (plan.technique.concat) {
            if (!target_concat) target_concat = ConcatSorted(target);
            session.EnrollAdd(id, *target_concat);
          } else {
            for (const Voice& v : target) session.EnrollAdd(id, v);
          }
          break;
        case TemplateKind::kTargetSingle:
          session.EnrollAdd(id, target[t.index]);
          break;
        case TemplateKind::kImposter:
          if (plan.technique.concat) {
            session.EnrollAdd(id, concat_of(t.index));
          } else {
            for (const Voice& v : bank.voices[t.index]) session.EnrollAdd(id, v);
          }
          break;
      }
    }
    for (std::size_t r = 0; r < plan.recognitions.size(); ++r) {
      const PlannedRecognition& rec = plan.recognitions[r];
      const Voice* probe = nullptr;
      switch (rec.kind) {
        case ProbeKind::kTargetVoice: probe = &target[rec.index]; break;
        case ProbeKind::kImposterVoice: probe = flat[rec.index]; break;
        case ProbeKind::kImposterConcat: probe = &concat_of(rec.index); break;
      }
      std::vector<TemplateId> gallery;
      for (std::size_t t : rec.templates) gallery.push_back(ids[t]);
      results[r] = session.Recognize(*probe, gallery);
    }
  } catch (const Error& e) {
    const QueryCounts c = session.counts();
    std::string message = e.what();
    const std::string prefix = std::string(ErrorCodeName(e.code())) + ": ";
    if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
    throw Error(e.code(), message + " [plan aborted; ledger enroll=" +
                              std::to_string(c.enroll) +
                              " recognize=" + std::to_string(c.recognize) + "]");
  }

  SimilarityTable t = SimilarityTable::Empty(plan.n, plan.k);
  for (const PlannedScore& s : plan.scores) {
    const double v = results[s.recognition][s.position];
    switch (s.slot) {
      case TableSlot::kFc: t.fc[s.row] = v; break;
      case TableSlot::kPair:
        t.pair[s.row * t.n + s.col] = v;
        t.pair[s.col * t.n + s.row] = v;
        break;
      case TableSlot::kCc: t.cc[s.row] = v; break;
      case TableSlot::kCv: t.cv[s.row] = v; break;
      case TableSlot::kVc: t.vc[s.row * t.m + s.col] = v; break;
      case TableSlot::kVv: t.vv[s.row * t.q + s.col] = v; break;
    }
  }
  return t;
}

FeatureVector BlackBoxFeatures(SrsSession& session, std::span<const Voice> target,
                               const ImposterBank& bank, const Technique& technique) {
  const auto k = bank.voices_per_imposter();
  const QueryPlan plan =
      BuildQueryPlan(FeatureGroupSet::All(), target.size(), k, technique, session.mode());
  return ComputeFeatures(ExecutePlan(plan, session, target, bank));
}

std::vector<QueryCountRow> TableOneRows(std::size_t n, std::span<const std::size_t> k) {
  using G = FeatureGroup;
  const auto mode = SrsAccessMode::kBlackBoxIdentification;
  const Technique base{};
  const Technique concat{true, false, false};
  const Technique group{false, true, false};
  const Technique both{true, true, false};
  const Technique all{true, true, true};
  const std::pair<G, Technique> single[] = {
      {G::kCentroid, base},        {G::kCentroid, concat},         {G::kPairwise, base},
      {G::kCentroidCentroid, base}, {G::kCentroidCentroid, concat}, {G::kCentroidVoice, base},
      {G::kCentroidVoice, concat}, {G::kVoiceCentroid, base},      {G::kVoiceCentroid, group},
      {G::kVoiceCentroid, concat}, {G::kVoiceCentroid, both},      {G::kVoiceVoice, base},
      {G::kVoiceVoice, group}};
  std::vector<QueryCountRow> rows;
  const std::size_t q = Sum(k);
  for (const auto& [g, t] : single) {
    rows.push_back({std::string(FeatureGroupName(g)), t, n, k.size(), q,
                    PredictCounts(g, n, k, t, mode)});
  }
  rows.push_back({"all", all, n, k.size(), q,
                  PredictCounts(FeatureGroupSet::All(), n, k, all, mode)});
  return rows;
}

std::string QueryCountsCsv(std::span<const QueryCountRow> rows) {
  std::ostringstream out;
  out << "group,technique,N,M,Q,enrollment,recognition,total\n";
  for (const auto& r : rows) {
    out << r.group << "," << TechniqueName(r.technique) << "," << r.n << "," << r.m << ","
        << r.q << "," << r.counts.enrollment << "," << r.counts.recognition << ","
        << r.counts.total() << "\n";
  }
  return out.str();
}

}  // namespace spkmia
