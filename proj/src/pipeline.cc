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

#include "spkmia/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "spkmia/audio_io.h"
#include "spkmia/backend_bridge.h"
#include "spkmia/error.h"
#include "spkmia/file_util.h"
#include "spkmia/query_plan.h"
#include "spkmia/rng.h"
#include "spkmia/synthetic_srs.h"
#include "spkmia/vector_math.h"

namespace spkmia {
namespace {

std::size_t CeilCount(std::size_t n, double r) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * r - 1e-9));
}

std::vector<Voice> TakeUnits(std::span<const Voice> pool, std::size_t sources,
                             std::size_t n_units, const UnitSpec& spec, std::uint64_t seed,
                             const char* side) {
  sources = std::min(sources, pool.size());
  Require(sources > 0, ErrorCode::kNotEnoughVoices,
          std::string("no source voices in pool ") + side);
  Rng rng(seed);
  std::vector<Voice> chosen;
  for (std::size_t i : rng.Sample(pool.size(), sources)) chosen.push_back(pool[i]);
  std::sort(chosen.begin(), chosen.end(),
            [](const Voice& a, const Voice& b) { return a.voice_id() < b.voice_id(); });
  std::vector<std::vector<Voice>> lists;
  std::size_t available = 0;
  for (const Voice& v : chosen) {
    lists.push_back(spec.chunking ? SplitVoice(v, spec.chunk) : std::vector<Voice>{v});
    available += lists.back().size();
  }
  const std::size_t want = n_units == 0 ? available : n_units;
  Require(available >= want, ErrorCode::kNotEnoughVoices,
          "pool " + std::string(side) + " yields " + std::to_string(available) +
              " units, need " + std::to_string(want));
  std::vector<Voice> out;
  for (std::size_t k = 0; out.size() < want; ++k) {
    for (const auto& list : lists) {
      if (k < list.size() && out.size() < want) out.push_back(list[k]);
    }
  }
  return out;
}

std::string FormatRatio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", r);
  return buf;
}

std::string Fixed(double v, int digits = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

nlohmann::json CountsJson(const QueryCounts& c) {
  return {{"enroll", c.enroll}, {"recognize", c.recognize}, {"embed", c.embed}};
}

template <typename F>
auto Staged(std::string_view stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (...) {
    RethrowStaged(stage);
  }
}

}  // namespace

void RethrowStaged(std::string_view stage) {
  try {
    throw;
  } catch (const Error& e) {
    std::string what = e.what();
    const std::string prefix = std::string(ErrorCodeName(e.code())) + ": ";
    if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
    if (what.rfind("stage ", 0) == 0) throw;
    throw Error(e.code(), "stage " + std::string(stage) + ": " + what);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kStageFailure, "stage " + std::string(stage) + ": " + e.what());
  }
}

std::vector<Voice> SelectUnits(std::span<const Voice> a, std::span<const Voice> b, double r,
                               const UnitSpec& spec, std::uint64_t seed) {
  Require(r >= 0 && r <= 1, ErrorCode::kInvalidArgument, "mixing ratio outside [0, 1]");
  const bool mixed = r > 0 && r < 1;
  std::size_t s = spec.source_voices;
  if (s == 0) s = mixed ? std::min(a.size(), b.size()) : (r >= 1 ? a.size() : b.size());
  std::size_t sa = 0;
  std::size_t sb = 0;
  std::size_t na = 0;
  std::size_t nb = 0;
  if (r >= 1) {
    sa = s;
    na = spec.n_units;
  } else if (r <= 0) {
    sb = s;
    nb = spec.n_units;
  } else {
    sa = std::max<std::size_t>(1, CeilCount(s, r));
    sb = std::max<std::size_t>(1, s - std::min(s, sa));
    if (spec.n_units > 0) {
      na = CeilCount(spec.n_units, r);
      nb = spec.n_units - na;
      if (na == 0) sa = 0;
      if (nb == 0) sb = 0;
    }
  }
  std::vector<Voice> out;
  if (sa > 0) out = TakeUnits(a, sa, na, spec, DeriveSeed(seed, {1}), "a");
  if (sb > 0) {
    auto more = TakeUnits(b, sb, nb, spec, DeriveSeed(seed, {2}), "b");
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

void ParallelFor(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        {
          std::lock_guard lock(mu);
          if (failure) return;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string_view SideName(Side side) { return side == Side::kShadow ? "shadow" : "target"; }

std::vector<FeatureVector> ShadowRows::All() const {
  std::vector<FeatureVector> out(r1.begin(), r1.end());
  out.insert(out.end(), r0.begin(), r0.end());
  out.insert(out.end(), non_members.begin(), non_members.end());
  return out;
}

EvalResult Evaluate(std::span<const ScoredRun> runs) {
  Require(!runs.empty(), ErrorCode::kEmptyInput, "no scored runs");
  EvalResult out;
  out.n_members = runs.front().members.size();
  out.n_non_members = runs.front().non_members.size();
  std::vector<double> mean_m(out.n_members, 0.0);
  std::vector<double> mean_n(out.n_non_members, 0.0);
  for (const auto& run : runs) {
    Require(run.members.size() == out.n_members && run.non_members.size() == out.n_non_members,
            ErrorCode::kDimensionMismatch, "runs score different rows");
    out.auroc += Auroc(run.members, run.non_members);
    const RocCurve roc = ComputeRoc(run.members, run.non_members);
    out.tpr_at_1pct += TprAtFpr(roc, 0.01);
    out.tpr_at_01pct += TprAtFpr(roc, 0.001);
    std::vector<int> decisions;
    std::vector<int> labels;
    for (double s : run.members) {
      decisions.push_back(s > run.cut ? 1 : 0);
      labels.push_back(1);
    }
    for (double s : run.non_members) {
      decisions.push_back(s > run.cut ? 1 : 0);
      labels.push_back(0);
    }
    out.accuracy += Accuracy(decisions, labels, &out.warning);
    out.balanced_accuracy += BalancedAccuracy(decisions, labels);
    for (std::size_t i = 0; i < out.n_members; ++i) mean_m[i] += run.members[i];
    for (std::size_t i = 0; i < out.n_non_members; ++i) mean_n[i] += run.non_members[i];
  }
  const double k = static_cast<double>(runs.size());
  out.auroc /= k;
  out.tpr_at_1pct /= k;
  out.tpr_at_01pct /= k;
  out.accuracy /= k;
  out.balanced_accuracy /= k;
  for (double& v : mean_m) v /= k;
  for (double& v : mean_n) v /= k;
  out.roc = ComputeRoc(mean_m, mean_n);
  return out;
}

Eigen::MatrixXd FeatureMatrix(std::span<const FeatureVector> rows) {
  Require(!rows.empty(), ErrorCode::kEmptyInput, "no rows");
  const std::size_t d = rows.front().values.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Require(rows[i].values.size() == d, ErrorCode::kDimensionMismatch,
            "rows differ in feature count");
    for (std::size_t c = 0; c < d; ++c) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i].values[c];
    }
  }
  return x;
}

std::vector<double> ScoreRows(const ClassifierModel& model, std::span<const FeatureVector> rows) {
  if (rows.empty()) return {};
  return model.PredictBatch(FeatureMatrix(rows));
}

std::vector<ScoredRun> AttackModels::Score(std::span<const FeatureVector> members,
                                           std::span<const FeatureVector> non_members) const {
  std::vector<ScoredRun> runs;
  if (threshold) {
    ScoredRun run;
    run.cut = threshold->tau;
    for (const auto& fv : members) run.members.push_back(fv.values[threshold->feature_index]);
    for (const auto& fv : non_members) {
      run.non_members.push_back(fv.values[threshold->feature_index]);
    }
    runs.push_back(std::move(run));
    return runs;
  }
  for (const auto& model : ensemble) {
    runs.push_back({ScoreRows(model, members), ScoreRows(model, non_members), 0.5});
  }
  return runs;
}

Audit::Audit(AuditConfig config, std::shared_ptr<const Dataset> dataset,
             std::optional<PartitionAssignment> partition)
    : config_(std::move(config)), dataset_(std::move(dataset)), partition_(std::move(partition)) {
  config_.Validate();
  hash_ = ConfigHash(config_);
}

std::filesystem::path Audit::CachePath(const std::string& stem) const {
  return output_dir() / "cache" / (stem + "-" + hash_.substr(0, 16));
}

const Dataset& Audit::dataset() {
  if (!dataset_) {
    Staged("dataset", [&] {
      if (config_.dataset.type == "synthetic") {
        dataset_ = std::make_shared<Dataset>(SynthesizeDataset(config_.dataset.synthetic));
      } else {
        dataset_ = std::make_shared<Dataset>(LoadVoiceDirectory(config_.dataset.path));
      }
    });
  }
  return *dataset_;
}

const PartitionAssignment& Audit::partition() {
  if (!partition_) {
    const Dataset& data = dataset();
    Staged("partition", [&] {
      std::vector<SpeakerVoiceCount> counts;
      for (const auto& s : data.speakers()) counts.push_back({s, data.VoicesOf(s).size()});
      partition_ = PartitionSpeakers(counts, config_.partition_seed);
    });
  }
  if (splits_.empty()) Split();
  return *partition_;
}

void Audit::Split() {
  for (const auto& [speaker, label] : *partition_) {
    if (label != PartitionLabel::kShadowTrain && label != PartitionLabel::kTargetTrain) continue;
    std::vector<std::string> ids;
    for (const Voice& v : dataset().VoicesOf(speaker)) ids.push_back(v.voice_id());
    splits_[speaker] = SplitMemberVoices(
        ids, DeriveSeed(config_.partition_seed, {HashTag("split"), HashTag(speaker)}));
  }
}

std::vector<std::string> Audit::Speakers(PartitionLabel label) {
  return SpeakersWithLabel(partition(), label);
}

std::vector<Voice> Audit::VoicesOf(const std::string& speaker) {
  const auto voices = dataset().VoicesOf(speaker);
  return {voices.begin(), voices.end()};
}

std::vector<Voice> Audit::VoicesOf(const std::string& speaker, VoiceRole role) {
  partition();
  auto it = splits_.find(speaker);
  Require(it != splits_.end(), ErrorCode::kInvalidArgument,
          speaker + " is not a training speaker");
  const auto& wanted = role == VoiceRole::kTrainVoice ? it->second.train : it->second.held_out;
  std::vector<Voice> out;
  for (const Voice& v : dataset().VoicesOf(speaker)) {
    if (std::find(wanted.begin(), wanted.end(), v.voice_id()) != wanted.end()) out.push_back(v);
  }
  return out;
}

std::shared_ptr<const EmbeddingModel> Audit::Srs(Side side) {
  SideState& st = state(side);
  if (st.model) return st.model;
  Staged(side == Side::kShadow ? "train-srs(shadow)" : "train-srs(target)", [&] {
    if (config_.srs.type == "backend") {
      if (shadow_.model || target_.model) {
        st.model = shadow_.model ? shadow_.model : target_.model;
        return;
      }
      BridgeOptions options;
      options.timeout = std::chrono::milliseconds(config_.srs.timeout_ms);
      st.model = config_.srs.command.empty()
                     ? std::shared_ptr<const EmbeddingModel>(
                           BackendBridge::Connect(config_.srs.host, config_.srs.port, options))
                     : BackendBridge::Spawn(config_.srs.command, options);
      return;
    }
    const PartitionLabel label =
        side == Side::kShadow ? PartitionLabel::kShadowTrain : PartitionLabel::kTargetTrain;
    std::vector<Voice> train;
    for (const auto& s : Speakers(label)) {
      auto v = VoicesOf(s, VoiceRole::kTrainVoice);
      train.insert(train.end(), v.begin(), v.end());
    }
    SyntheticSrsConfig c = config_.srs.synthetic;
    c.seed = DeriveSeed(c.seed, {HashTag(SideName(side))});
    st.model = SyntheticSrs::Train(c, train);
  });
  return st.model;
}

std::size_t Audit::SourceCap() {
  partition();
  std::size_t cap = std::numeric_limits<std::size_t>::max();
  for (const auto& [speaker, split] : splits_) {
    cap = std::min({cap, split.train.size(), split.held_out.size()});
  }
  return cap;
}

UnitSpec Audit::DefaultUnits() {
  UnitSpec u;
  if (config_.setting.type == "setting2") {
    u.n_units = config_.setting.n;
    u.source_voices = std::min(
        config_.setting.source_voices == 0 ? config_.setting.n : config_.setting.source_voices,
        SourceCap());
    u.chunking = config_.setting.chunking;
    u.chunk = config_.setting.chunk;
  }
  return u;
}

const ImposterBank& Audit::Imposters() {
  if (imposters_) return *imposters_;
  auto ids = Speakers(PartitionLabel::kImposter);
  Staged("imposters", [&] {
    ImposterBank bank;
    if (config_.setting.type == "setting2") {
      Require(ids.size() >= config_.setting.m, ErrorCode::kNotEnoughSpeakers,
              "need " + std::to_string(config_.setting.m) + " imposters, have " +
                  std::to_string(ids.size()));
      Rng rng(DeriveSeed(config_.seed, {HashTag("imposters")}));
      std::vector<std::string> chosen;
      for (std::size_t i : rng.Sample(ids.size(), config_.setting.m)) chosen.push_back(ids[i]);
      std::sort(chosen.begin(), chosen.end());
      UnitSpec u;
      u.n_units = config_.setting.k;
      u.source_voices = config_.setting.k;
      u.chunking = config_.setting.chunking;
      u.chunk = config_.setting.chunk;
      for (const auto& s : chosen) {
        const auto voices = VoicesOf(s);
        bank.speaker_ids.push_back(s);
        bank.voices.push_back(SelectUnits(
            voices, {}, 1.0, u, DeriveSeed(config_.seed, {HashTag("imposter-units"), HashTag(s)})));
      }
    } else {
      for (const auto& s : ids) {
        bank.speaker_ids.push_back(s);
        bank.voices.push_back(VoicesOf(s));
      }
    }
    bank.Validate();
    imposters_ = std::move(bank);
  });
  return *imposters_;
}

Embedding Audit::Embed(Side side, const Voice& voice) {
  SideState& st = state(side);
  const std::string key = voice.voice_id() + "/" + std::to_string(voice.num_samples());
  {
    std::lock_guard lock(st.mu);
    auto it = st.cache.find(key);
    if (it != st.cache.end()) return it->second;
  }
  Embedding e = Srs(side)->Embed(voice);
  st.embed.fetch_add(1);
  std::lock_guard lock(st.mu);
  return st.cache.emplace(key, std::move(e)).first->second;
}

const EmbeddedBank& Audit::Bank(Side side) {
  SideState& st = state(side);
  if (st.bank) return *st.bank;
  const ImposterBank& bank = Imposters();
  EmbeddedBank out;
  for (std::size_t j = 0; j < bank.voices.size(); ++j) {
    std::vector<Embedding> mine;
    for (const Voice& v : bank.voices[j]) {
      mine.push_back(Embed(side, v));
      out.voices.push_back(mine.back());
      out.imposter_of.push_back(j);
    }
    out.centroids.push_back(Centroid(mine));
  }
  st.bank = std::move(out);
  return *st.bank;
}

void Audit::Prewarm(Side side) {
  Srs(side);
  Imposters();
  if (config_.access == SrsAccessMode::kWhiteBox) Bank(side);
}

std::size_t Audit::workers(Side side) {
  return Srs(side)->concurrent_safe() ? config_.workers : 1;
}

FeatureVector Audit::Features(Side side, std::span<const Voice> units) {
  Prewarm(side);
  if (config_.access == SrsAccessMode::kWhiteBox) {
    std::vector<Embedding> e;
    e.reserve(units.size());
    for (const Voice& v : units) e.push_back(Embed(side, v));
    return ComputeFeatures(WhiteBoxTable(e, Bank(side)));
  }
  SrsSession session(Srs(side), config_.access);
  FeatureVector fv;
  try {
    fv = BlackBoxFeatures(session, units, Imposters(), config_.techniques);
  } catch (...) {
    const QueryCounts c = session.counts();
    state(side).enroll.fetch_add(c.enroll);
    state(side).recognize.fetch_add(c.recognize);
    throw;
  }
  const QueryCounts c = session.counts();
  state(side).enroll.fetch_add(c.enroll);
  state(side).recognize.fetch_add(c.recognize);
  return fv;
}

QueryCounts Audit::counts(Side side) const {
  const SideState& st = side == Side::kShadow ? shadow_ : target_;
  return {st.enroll.load(), st.recognize.load(), st.embed.load()};
}

std::uint64_t Audit::UnitSeed(Side side, std::string_view purpose, const std::string& speaker,
                              double r) const {
  std::uint64_t bits = 0;
  static_assert(sizeof bits == sizeof r);
  std::memcpy(&bits, &r, sizeof bits);
  return DeriveSeed(config_.seed,
                    {HashTag(SideName(side)), HashTag(purpose), HashTag(speaker), bits});
}

std::vector<std::string> Audit::Members(Side side) {
  return Speakers(side == Side::kShadow ? PartitionLabel::kShadowTrain
                                        : PartitionLabel::kTargetTrain);
}

std::vector<std::string> Audit::NonMembers(Side side) {
  return Speakers(side == Side::kShadow ? PartitionLabel::kShadowNonTrain
                                        : PartitionLabel::kTargetNonTrain);
}

std::vector<Voice> Audit::MemberUnits(Side side, const std::string& speaker, double r,
                                      const UnitSpec& units) {
  const auto train = VoicesOf(speaker, VoiceRole::kTrainVoice);
  const auto held = VoicesOf(speaker, VoiceRole::kHeldOutVoice);
  return SelectUnits(train, held, r, units, UnitSeed(side, "member", speaker, r));
}

std::vector<Voice> Audit::NonMemberUnits(Side side, const std::string& speaker,
                                         const UnitSpec& units) {
  const auto all = VoicesOf(speaker);
  UnitSpec u = units;
  if (u.source_voices == 0) u.source_voices = all.size() - all.size() / 2;
  return SelectUnits(all, {}, 1.0, u, UnitSeed(side, "non-member", speaker, 1.0));
}

std::vector<FeatureVector> Audit::Rows(
    Side side, const std::vector<std::string>& speakers, std::string_view purpose,
    const std::function<std::vector<Voice>(const std::string&)>& units, std::optional<int> label,
    std::optional<double> r, bool chunked) {
  Prewarm(side);
  std::vector<FeatureVector> out(speakers.size());
  ParallelFor(speakers.size(), workers(side), [&](std::size_t i) {
    try {
      const auto u = units(speakers[i]);
      FeatureVector fv = Features(side, u);
      fv.speaker_id = speakers[i];
      fv.label = label;
      fv.r = r;
      fv.chunked = chunked;
      out[i] = std::move(fv);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(purpose) + " row of " + speakers[i] + ": " + e.what());
    }
  });
  return out;
}

std::vector<FeatureVector> Audit::MemberRows(Side side, double r, const UnitSpec& units) {
  return Rows(
      side, Members(side), "member",
      [&](const std::string& s) { return MemberUnits(side, s, r, units); }, 1, r,
      units.chunking);
}

std::vector<FeatureVector> Audit::NonMemberRows(Side side, const UnitSpec& units) {
  return Rows(
      side, NonMembers(side), "non-member",
      [&](const std::string& s) { return NonMemberUnits(side, s, units); }, 0, std::nullopt,
      units.chunking);
}

ShadowRows Audit::Shadow(const UnitSpec& units) {
  return Staged("extract(shadow)", [&] {
    ShadowRows rows;
    rows.r1 = MemberRows(Side::kShadow, 1.0, units);
    rows.r0 = MemberRows(Side::kShadow, 0.0, units);
    rows.non_members = NonMemberRows(Side::kShadow, units);
    return rows;
  });
}

ShadowRows Audit::Shadow() {
  if (shadow_rows_) return *shadow_rows_;
  const auto path = CachePath("shadow").concat(".jsonl");
  if (std::filesystem::exists(path)) {
    ShadowRows rows;
    for (auto& fv : ReadFeatureCache(path)) {
      if (fv.label == 0) {
        rows.non_members.push_back(std::move(fv));
      } else if (fv.r == 1.0) {
        rows.r1.push_back(std::move(fv));
      } else {
        rows.r0.push_back(std::move(fv));
      }
    }
    shadow_rows_ = std::move(rows);
    return *shadow_rows_;
  }
  shadow_rows_ = Shadow(DefaultUnits());
  Staged("cache", [&] { WriteFeatureCache(path, shadow_rows_->All()); });
  return *shadow_rows_;
}

TargetRows Audit::Target(double r, const UnitSpec& units) {
  return Staged("extract(target)", [&] {
    TargetRows rows;
    rows.r = r;
    rows.members = MemberRows(Side::kTarget, r, units);
    rows.non_members = NonMemberRows(Side::kTarget, units);
    const std::size_t keep = std::min(rows.members.size(), rows.non_members.size());
    rows.members.resize(keep);
    rows.non_members.resize(keep);
    return rows;
  });
}

TargetRows Audit::Target(double r) {
  auto it = target_rows_.find(r);
  if (it != target_rows_.end()) return it->second;
  const auto path = CachePath("target-r" + FormatRatio(r)).concat(".jsonl");
  TargetRows rows;
  if (std::filesystem::exists(path)) {
    rows.r = r;
    for (auto& fv : ReadFeatureCache(path)) {
      (fv.label == 1 ? rows.members : rows.non_members).push_back(std::move(fv));
    }
  } else {
    rows = Target(r, DefaultUnits());
    std::vector<FeatureVector> all(rows.members);
    all.insert(all.end(), rows.non_members.begin(), rows.non_members.end());
    Staged("cache", [&] { WriteFeatureCache(path, all); });
  }
  return target_rows_.emplace(r, std::move(rows)).first->second;
}

MixingDataset Audit::TrainingSet(const ShadowRows& rows) const {
  return BuildMixingDataset(rows.r1, rows.r0, rows.non_members, config_.attack.mixing);
}

BoundResult Audit::Bound() {
  if (bound_) return *bound_;
  UnitSpec all = DefaultUnits();
  all.n_units = 0;
  all.source_voices = 0;
  // Datasets: member train voices, member held-out voices, non-member voices.
  const auto members = Members(Side::kShadow);
  const auto non_members = NonMembers(Side::kShadow);
  auto pool = [&](std::size_t d, const std::string& s) {
    if (d == 2) return VoicesOf(s);
    return VoicesOf(s, d == 0 ? VoiceRole::kTrainVoice : VoiceRole::kHeldOutVoice);
  };
  auto sequence = [&](std::size_t d, const std::string& s) {
    return SelectUnits(pool(d, s), {}, 1.0, all,
                       UnitSeed(Side::kShadow, "bound", s, static_cast<double>(d)));
  };
  std::map<std::pair<std::size_t, std::string>, std::size_t> lengths;
  for (std::size_t d = 0; d < 3; ++d) {
    for (const auto& s : d == 2 ? non_members : members) lengths[{d, s}] = sequence(d, s).size();
  }
  auto features = [&](std::size_t d, const std::string& s,
                      std::size_t n) -> const std::vector<double>& {
    const auto key = std::make_pair(std::to_string(d) + "/" + s, n);
    auto it = bound_features_.find(key);
    if (it != bound_features_.end()) return it->second;
    auto seq = sequence(d, s);
    seq.resize(n, seq.front());
    return bound_features_.emplace(key, Features(Side::kShadow, seq).values).first->second;
  };
  BoundSampler sampler = [&](std::size_t f, std::size_t d, std::size_t n, std::size_t step) {
    BoundSamples out;
    for (const auto& s : d == 2 ? non_members : members) {
      if (lengths[{d, s}] < n + step) continue;
      out.at_n.push_back(features(d, s, n)[f]);
      out.at_n_plus_s.push_back(features(d, s, n + step)[f]);
    }
    return out;
  };
  bound_ = Staged("bound-n", [&] {
    return BoundVoiceCount(kNumFeatures, 3, sampler, config_.attack.bound);
  });
  return *bound_;
}

ModelBank Audit::TrainBank(std::size_t bound, std::uint64_t seed) {
  return Staged("train-attack(bank)", [&] {
    ModelBank bank;
    bank.bound = bound;
    TrainConfig tc = config_.attack.train;
    for (std::size_t n = 2; n <= bound; ++n) {
      auto it = bank_rows_.find(n);
      if (it == bank_rows_.end()) {
        UnitSpec u = DefaultUnits();
        u.n_units = n;
        u.source_voices = std::min(u.source_voices, n);
        it = bank_rows_.emplace(n, Shadow(u)).first;
      }
      bank.models[n] = TrainClassifier(TrainingSet(it->second), tc,
                                       DeriveSeed(seed, {HashTag("bank"), n}));
    }
    return bank;
  });
}

AttackModels Audit::TrainAttack() {
  if (models_) return *models_;
  const auto path = CachePath("attack").concat(".json");
  if (std::filesystem::exists(path)) {
    const auto j = nlohmann::json::parse(ReadFile(path));
    AttackModels m;
    for (const auto& e : j["ensemble"]) m.ensemble.push_back(ClassifierModel::FromJson(e));
    if (j.contains("threshold")) m.threshold = ThresholdModel::FromJson(j["threshold"]);
    for (const auto& b : j["banks"]) {
      ModelBank bank;
      bank.bound = b["bound"].get<std::size_t>();
      for (const auto& [n, model] : b["models"].items()) {
        bank.models[std::stoul(n)] = ClassifierModel::FromJson(model);
      }
      m.banks.push_back(std::move(bank));
    }
    models_ = std::move(m);
    return *models_;
  }
  const ShadowRows shadow = Shadow();
  AttackModels m;
  TrainConfig tc = config_.attack.train;
  tc.seed = DeriveSeed(config_.seed, {HashTag("attack"), tc.seed});
  Staged("train-attack", [&] {
    if (config_.attack.model == "threshold") {
      const std::size_t f = FeatureIndex(config_.attack.feature);
      std::vector<double> members;
      std::vector<double> non;
      const bool use_r1 = config_.attack.mixing != MixingMode::kOnlyR0;
      const bool use_r0 = config_.attack.mixing != MixingMode::kOnlyR1;
      if (use_r1) for (const auto& fv : shadow.r1) members.push_back(fv.values[f]);
      if (use_r0) for (const auto& fv : shadow.r0) members.push_back(fv.values[f]);
      const int copies = use_r1 && use_r0 ? 2 : 1;
      for (int c = 0; c < copies; ++c) {
        for (const auto& fv : shadow.non_members) non.push_back(fv.values[f]);
      }
      ThresholdModel t = FitThreshold(members, non);
      t.feature = config_.attack.feature;
      t.feature_index = f;
      m.threshold = t;
    } else {
      m.ensemble = TrainEnsemble(TrainingSet(shadow), tc);
    }
  });
  if (config_.attack.vnd) {
    const std::size_t bound = std::clamp<std::size_t>(Bound().bound, 2, DefaultUnits().n_units);
    for (int r = 0; r < tc.repeats; ++r) {
      m.banks.push_back(TrainBank(bound, tc.seed + static_cast<std::uint64_t>(r)));
    }
  }
  nlohmann::ordered_json j;
  j["ensemble"] = nlohmann::ordered_json::array();
  for (const auto& model : m.ensemble) j["ensemble"].push_back(model.ToJson());
  if (m.threshold) j["threshold"] = m.threshold->ToJson();
  j["banks"] = nlohmann::ordered_json::array();
  for (const auto& bank : m.banks) {
    nlohmann::ordered_json b;
    b["bound"] = bank.bound;
    for (const auto& [n, model] : bank.models) b["models"][std::to_string(n)] = model.ToJson();
    j["banks"].push_back(b);
  }
  Staged("cache", [&] { WriteFileAtomic(path, j.dump()); });
  models_ = std::move(m);
  return *models_;
}

std::vector<ScoredRun> Audit::ScoreWithBanks(const AttackModels& models, double r) {
  const TargetRows rows = Target(r);
  const UnitSpec units = DefaultUnits();
  auto run_for = [&](const std::vector<FeatureVector>& fvs, bool member) {
    std::vector<std::vector<double>> scores(models.banks.size(),
                                            std::vector<double>(fvs.size()));
    ParallelFor(fvs.size(), workers(Side::kTarget), [&](std::size_t i) {
      const auto& s = fvs[i].speaker_id;
      const auto u = member ? MemberUnits(Side::kTarget, s, r, units)
                            : NonMemberUnits(Side::kTarget, s, units);
      for (std::size_t b = 0; b < models.banks.size(); ++b) {
        scores[b][i] = BankInfer(models.banks[b], u, [&](std::span<const Voice> kept) {
                         return Features(Side::kTarget, kept);
                       }).probability;
      }
    });
    return scores;
  };
  return Staged("infer(bank)", [&] {
    Prewarm(Side::kTarget);
    const auto m = run_for(rows.members, true);
    const auto n = run_for(rows.non_members, false);
    std::vector<ScoredRun> runs;
    for (std::size_t b = 0; b < models.banks.size(); ++b) runs.push_back({m[b], n[b], 0.5});
    return runs;
  });
}

std::optional<OverfitReport> Audit::Overfit() {
  if (config_.srs.type != "synthetic") return std::nullopt;
  return Staged("overfit", [&] {
    std::vector<Voice> train;
    for (const auto& s : Speakers(PartitionLabel::kTargetTrain)) {
      auto v = VoicesOf(s, VoiceRole::kTrainVoice);
      train.insert(train.end(), v.begin(), v.end());
    }
    std::vector<Voice> test;
    for (const auto& s : Speakers(PartitionLabel::kTargetNonTrain)) {
      auto v = VoicesOf(s);
      test.insert(test.end(), v.begin(), v.end());
    }
    const auto train_trials =
        SampleTrials(train, config_.trials, DeriveSeed(config_.seed, {HashTag("trials-train")}));
    const auto test_trials =
        SampleTrials(test, config_.trials, DeriveSeed(config_.seed, {HashTag("trials-test")}));
    return std::optional<OverfitReport>(
        OverfitGap(*Srs(Side::kTarget), train, train_trials, test, test_trials));
  });
}

std::vector<ImportanceRow> Audit::PermutationImportance(const AttackModels& models,
                                                        const TargetRows& rows) {
  std::vector<FeatureVector> all(rows.members);
  all.insert(all.end(), rows.non_members.begin(), rows.non_members.end());
  const Eigen::MatrixXd x = FeatureMatrix(all);
  const std::size_t nm = rows.members.size();
  auto auroc = [&](const Eigen::MatrixXd& m) {
    std::vector<double> score(static_cast<std::size_t>(m.rows()), 0.0);
    if (models.threshold) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        score[static_cast<std::size_t>(i)] =
            m(i, static_cast<Eigen::Index>(models.threshold->feature_index));
      }
    } else {
      for (const auto& model : models.ensemble) {
        const auto p = model.PredictBatch(m);
        for (std::size_t i = 0; i < p.size(); ++i) score[i] += p[i];
      }
    }
    return Auroc(std::span(score).first(nm), std::span(score).subspan(nm));
  };
  const double base = auroc(x);
  std::vector<ImportanceRow> out;
  const auto& names = FeatureNames();
  for (std::size_t f = 0; f < names.size(); ++f) {
    double sum = 0.0;
    for (int p = 0; p < config_.permutations; ++p) {
      Eigen::MatrixXd xp = x;
      std::vector<std::size_t> order(all.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(DeriveSeed(config_.seed, {HashTag("permutation"), f, static_cast<std::uint64_t>(p)}));
      rng.Shuffle(order);
      const auto c = static_cast<Eigen::Index>(f);
      for (std::size_t i = 0; i < order.size(); ++i) {
        xp(static_cast<Eigen::Index>(i), c) = x(static_cast<Eigen::Index>(order[i]), c);
      }
      sum += base - auroc(xp);
    }
    out.push_back({names[f], sum / config_.permutations});
  }
  return out;
}

AuditReport Audit::Run() {
  AuditReport rep;
  rep.config_hash = hash_;
  const ShadowRows shadow = Shadow();
  rep.shadow_rows = shadow.r1.size() + shadow.r0.size() + shadow.non_members.size();
  const AttackModels models = TrainAttack();
  if (!models.banks.empty()) rep.bound = models.banks.front().bound;
  for (double r : config_.ratios) {
    const TargetRows rows = Target(r);
    const auto runs = models.banks.empty() ? models.Score(rows.members, rows.non_members)
                                           : ScoreWithBanks(models, r);
    RatioResult res{r, Staged("evaluate", [&] { return Evaluate(runs); })};
    if (!res.eval.warning.empty()) {
      rep.warnings.push_back("r_m=" + FormatRatio(r) + ": " + res.eval.warning);
    }
    rep.ratios.push_back(std::move(res));
  }
  rep.overfit = Overfit();
  if (config_.permutation_importance && !config_.ratios.empty()) {
    rep.importance = Staged("importance", [&] {
      return PermutationImportance(models, Target(config_.ratios.front()));
    });
  }
  rep.shadow_counts = counts(Side::kShadow);
  rep.target_counts = counts(Side::kTarget);
  WriteReport(rep);
  return rep;
}

nlohmann::ordered_json AuditReportToJson(const AuditReport& report, const AuditConfig& config) {
  nlohmann::ordered_json j;
  j["config_hash"] = report.config_hash;
  j["config"] = nlohmann::json(config);
  j["ratios"] = nlohmann::ordered_json::array();
  for (const auto& r : report.ratios) {
    j["ratios"].push_back({{"r", r.r},
                           {"auroc", r.eval.auroc},
                           {"accuracy", r.eval.accuracy},
                           {"balanced_accuracy", r.eval.balanced_accuracy},
                           {"tpr_at_fpr_0.01", r.eval.tpr_at_1pct},
                           {"tpr_at_fpr_0.001", r.eval.tpr_at_01pct},
                           {"n_members", r.eval.n_members},
                           {"n_nonmembers", r.eval.n_non_members}});
  }
  if (report.bound) j["bound"] = *report.bound;
  if (report.overfit) {
    j["overfit"] = {{"train_eer", report.overfit->train_eer},
                    {"test_eer", report.overfit->test_eer},
                    {"gap", report.overfit->gap}};
  }
  j["shadow_rows"] = report.shadow_rows;
  j["queries"] = {{"shadow", CountsJson(report.shadow_counts)},
                  {"target", CountsJson(report.target_counts)}};
  j["importance"] = nlohmann::ordered_json::array();
  for (const auto& row : report.importance) {
    j["importance"].push_back({{"feature", row.feature}, {"delta", row.delta}});
  }
  j["warnings"] = report.warnings;
  return j;
}

std::string SummaryText(const AuditReport& report, const AuditConfig& config) {
  std::ostringstream out;
  out << "spkmia audit " << report.config_hash.substr(0, 16) << "\n\n";
  out << "setting      " << config.setting.type;
  if (config.setting.type == "setting2") {
    out << " N=" << config.setting.n << " M=" << config.setting.m << " K=" << config.setting.k
        << " chunking=" << (config.setting.chunking ? "on" : "off");
  }
  out << "\naccess       " << AccessModeName(config.access);
  if (config.access != SrsAccessMode::kWhiteBox) {
    out << " (" << TechniqueName(config.techniques) << ")";
  }
  out << "\nattack       " << config.attack.model;
  if (config.attack.model == "threshold") out << " on " << config.attack.feature;
  out << ", mixing " << MixingModeName(config.attack.mixing);
  if (config.attack.vnd) out << ", VND";
  out << "\nshadow rows  " << report.shadow_rows << "\n";
  if (report.bound) out << "bound N'     " << *report.bound << "\n";
  if (config.srs.type == "synthetic") out << "srs gamma    " << config.srs.synthetic.gamma << "\n";

  if (!report.ratios.empty()) {
    out << "\nAttack vs r_m\n";
    out << "r_m     AUROC   acc     bal_acc TPR@1%  TPR@0.1%\n";
    for (const auto& r : report.ratios) {
      out << std::left << std::setw(8) << FormatRatio(r.r) << std::setw(8) << Fixed(r.eval.auroc)
          << std::setw(8) << Fixed(r.eval.accuracy) << std::setw(8)
          << Fixed(r.eval.balanced_accuracy) << std::setw(8) << Fixed(r.eval.tpr_at_1pct)
          << Fixed(r.eval.tpr_at_01pct) << "\n";
    }
  }
  if (report.overfit) {
    out << "\nSRS overfitting\ntrain EER " << Fixed(report.overfit->train_eer) << "  test EER "
        << Fixed(report.overfit->test_eer) << "  gap " << Fixed(report.overfit->gap) << "\n";
  }
  out << "\nQueries issued this run\n";
  for (const auto& [name, c] : {std::pair{"shadow", report.shadow_counts},
                                std::pair{"target", report.target_counts}}) {
    out << name << "  embed " << c.embed << "  enroll " << c.enroll << "  recognize "
        << c.recognize << "\n";
  }
  if (!report.importance.empty()) {
    out << "\nPermutation importance (mean AUROC drop, " << config.permutations
        << " permutations)\n";
    std::vector<ImportanceRow> rows = report.importance;
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.delta > b.delta; });
    for (const auto& row : rows) {
      out << std::left << std::setw(24) << row.feature << Fixed(row.delta) << "\n";
    }
  }
  for (const auto& w : report.warnings) out << "\nwarning: " << w << "\n";
  return out.str();
}

std::string GammaTable(std::span<const nlohmann::json> results) {
  struct Line {
    double gamma;
    std::string text;
  };
  std::vector<Line> lines;
  for (const auto& j : results) {
    double gamma = 0.0;
    const auto& srs = j.at("config").at("srs");
    if (srs.contains("synthetic")) gamma = srs["synthetic"].value("gamma", 0.0);
    std::ostringstream row;
    row << std::left << std::setw(8) << gamma;
    const auto& ratios = j.at("ratios");
    for (const auto& r : ratios) {
      row << std::setw(8) << Fixed(r.at("auroc").get<double>());
    }
    if (j.contains("overfit")) {
      row << std::setw(8) << Fixed(j["overfit"]["train_eer"].get<double>()) << std::setw(8)
          << Fixed(j["overfit"]["test_eer"].get<double>())
          << Fixed(j["overfit"]["gap"].get<double>());
    }
    lines.push_back({gamma, row.str()});
  }
  std::stable_sort(lines.begin(), lines.end(),
                   [](const Line& a, const Line& b) { return a.gamma < b.gamma; });
  std::ostringstream out;
  out << "Attack and SRS overfitting vs gamma\n";
  out << std::left << std::setw(8) << "gamma";
  if (!results.empty()) {
    for (const auto& r : results.front().at("ratios")) {
      out << std::setw(8) << ("r=" + FormatRatio(r.at("r").get<double>()));
    }
  }
  out << std::setw(8) << "trEER" << std::setw(8) << "teEER" << "gap\n";
  for (const auto& l : lines) out << l.text << "\n";
  return out.str();
}

void Audit::WriteReport(const AuditReport& report) {
  Staged("report", [&] {
    const auto dir = output_dir();
    std::vector<MetricRow> metrics;
    for (const auto& r : report.ratios) {
      const std::string p = "r_m=" + FormatRatio(r.r) + "/";
      const auto add = [&](const std::string& name, double v) {
        metrics.push_back({p + name, v, r.eval.n_members, r.eval.n_non_members, hash_});
      };
      add("auroc", r.eval.auroc);
      add("accuracy", r.eval.accuracy);
      add("balanced_accuracy", r.eval.balanced_accuracy);
      add("tpr_at_fpr_0.01", r.eval.tpr_at_1pct);
      add("tpr_at_fpr_0.001", r.eval.tpr_at_01pct);
    }
    if (report.overfit) {
      metrics.push_back({"srs/train_eer", report.overfit->train_eer, 0, 0, hash_});
      metrics.push_back({"srs/test_eer", report.overfit->test_eer, 0, 0, hash_});
      metrics.push_back({"srs/overfit_gap", report.overfit->gap, 0, 0, hash_});
    }
    if (report.bound) {
      metrics.push_back({"bound_n", static_cast<double>(*report.bound), 0, 0, hash_});
    }
    WriteFileAtomic(dir / "metrics.csv", MetricsCsv(metrics));
    for (std::size_t i = 0; i < report.ratios.size(); ++i) {
      const auto csv = RocCsv(report.ratios[i].eval.roc);
      if (i == 0) WriteFileAtomic(dir / "roc.csv", csv);
      WriteFileAtomic(dir / ("roc_r" + FormatRatio(report.ratios[i].r) + ".csv"), csv);
    }

    std::vector<QueryCountRow> rows;
    if (imposters_) {
      const auto k = imposters_->voices_per_imposter();
      std::size_t n = config_.setting.n;
      if (config_.setting.type == "setting1") {
        const auto members = Members(Side::kTarget);
        n = members.empty() ? 2 : std::max<std::size_t>(2, VoicesOf(members.front()).size());
      }
      rows = TableOneRows(n, k);
    }
    std::string counts_csv = QueryCountsCsv(rows);
    for (const auto& [name, c] : {std::pair{"executed-shadow", report.shadow_counts},
                                  std::pair{"executed-target", report.target_counts}}) {
      counts_csv += std::string(name) + "," +
                    (config_.access == SrsAccessMode::kWhiteBox
                         ? std::string("white-box")
                         : TechniqueName(config_.techniques)) +
                    ",,,," + std::to_string(c.enroll) + "," +
                    std::to_string(c.recognize + c.embed) + "," + std::to_string(c.total()) +
                    "\n";
    }
    WriteFileAtomic(dir / "query_counts.csv", counts_csv);

    if (shadow_rows_) {
      const auto all = shadow_rows_->All();
      std::string lines;
      for (const auto& fv : all) lines += FeatureVectorToJson(fv).dump() + "\n";
      WriteFileAtomic(dir / "features.jsonl", lines);
    }
    if (models_) {
      for (std::size_t i = 0; i < models_->ensemble.size(); ++i) {
        WriteFileAtomic(dir / "models" / ("classifier-" + std::to_string(i) + ".json"),
                        models_->ensemble[i].ToJson().dump(2) + "\n");
      }
      if (models_->threshold) {
        WriteFileAtomic(dir / "models" / "threshold.json",
                        models_->threshold->ToJson().dump(2) + "\n");
      }
      for (std::size_t b = 0; b < models_->banks.size(); ++b) {
        for (const auto& [n, model] : models_->banks[b].models) {
          WriteFileAtomic(dir / "models" /
                              ("bank-" + std::to_string(b) + "-n" + std::to_string(n) + ".json"),
                          model.ToJson().dump(2) + "\n");
        }
      }
    }
    WriteFileAtomic(dir / "summary.txt", SummaryText(report, config_));
    WriteFileAtomic(dir / "results.json", AuditReportToJson(report, config_).dump(2) + "\n");
  });
}

}  // namespace spkmia
