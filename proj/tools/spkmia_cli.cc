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

// Command-line front end. Every subcommand accepts the same configuration
// flags; --config loads a JSON document and flags given explicitly win.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spkmia/config.h"
#include "spkmia/dataset.h"
#include "spkmia/error.h"
#include "spkmia/file_util.h"
#include "spkmia/pipeline.h"
#include "spkmia/query_plan.h"
#include "spkmia/synthetic_srs.h"

namespace {

using nlohmann::json;
using spkmia::Audit;
using spkmia::AuditConfig;

constexpr int kConfigError = 2;
constexpr int kStageError = 3;

struct Flags {
  std::string config;
  std::string output_dir;
  std::uint64_t seed = 0;
  std::uint64_t partition_seed = 0;
  std::string dataset_dir;
  std::size_t num_speakers = 0;
  std::size_t voices = 0;
  std::uint64_t dataset_seed = 0;
  double gamma = 0;
  double beta = 0;
  std::uint64_t srs_seed = 0;
  std::string backend_command;
  std::string backend_host;
  int backend_port = 0;
  int timeout_ms = 0;
  std::string access;
  std::string setting;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t k = 0;
  std::size_t source_voices = 0;
  bool chunking = true;
  std::string attack_model;
  std::string feature;
  std::string mixing;
  bool vnd = false;
  std::size_t bound_step = 0;
  double alpha = 0;
  int epochs = 0;
  int repeats = 0;
  double learning_rate = 0;
  bool concat = false;
  bool group = false;
  bool share = false;
  std::vector<double> ratios;
  bool no_ratios = false;
  bool importance = false;
  std::size_t workers = 0;
  std::size_t trials = 0;
};

void AddConfigFlags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "audit configuration JSON");
  app->add_option("--output-dir,-o", f.output_dir, "report and cache directory");
  app->add_option("--seed", f.seed, "audit seed");
  app->add_option("--partition-seed", f.partition_seed);
  app->add_option("--dataset-dir", f.dataset_dir, "ingest voices from this directory");
  app->add_option("--num-speakers", f.num_speakers, "synthetic speakers");
  app->add_option("--voices-per-speaker", f.voices, "synthetic voices per speaker");
  app->add_option("--dataset-seed", f.dataset_seed);
  app->add_option("--gamma", f.gamma, "synthetic SRS memorization strength");
  app->add_option("--beta", f.beta, "synthetic SRS memorization width");
  app->add_option("--srs-seed", f.srs_seed);
  app->add_option("--backend-command", f.backend_command, "spawn an embedding backend");
  app->add_option("--backend-host", f.backend_host);
  app->add_option("--backend-port", f.backend_port);
  app->add_option("--timeout-ms", f.timeout_ms);
  app->add_option("--access", f.access)
      ->check(CLI::IsMember({"white-box", "black-box-verification", "black-box-identification"}));
  app->add_option("--setting", f.setting)->check(CLI::IsMember({"setting1", "setting2"}));
  app->add_option("-N,--num-voices", f.n, "inference voices per speaker");
  app->add_option("-M,--num-imposters", f.m);
  app->add_option("-K,--imposter-voices", f.k);
  app->add_option("--source-voices", f.source_voices);
  app->add_flag("--chunking,!--no-chunking", f.chunking);
  app->add_option("--attack", f.attack_model)->check(CLI::IsMember({"classifier", "threshold"}));
  app->add_option("--feature", f.feature, "threshold attack feature");
  app->add_option("--mixing", f.mixing)->check(CLI::IsMember({"mix", "r1", "r0"}));
  app->add_flag("--vnd", f.vnd, "voice-number-dependent model bank");
  app->add_option("--bound-step", f.bound_step);
  app->add_option("--alpha", f.alpha);
  app->add_option("--epochs", f.epochs);
  app->add_option("--repeats", f.repeats);
  app->add_option("--learning-rate", f.learning_rate);
  app->add_flag("--concat", f.concat);
  app->add_flag("--group", f.group);
  app->add_flag("--share", f.share);
  app->add_option("--ratios", f.ratios, "evaluation mixing ratios")->delimiter(',');
  app->add_flag("--no-ratios", f.no_ratios, "evaluate no mixing ratio");
  app->add_flag("--permutation-importance", f.importance);
  app->add_option("--workers", f.workers);
  app->add_option("--trials", f.trials, "verification trials for the overfitting gap");
}

std::vector<std::string> SplitWords(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

AuditConfig ResolveConfig(const CLI::App* app, const Flags& f) {
  json base;
  if (!f.config.empty()) {
    base = spkmia::LoadAuditConfig(f.config);
  } else {
    base = AuditConfig{};
  }
  auto given = [&](const char* name) { return app->count(name) > 0; };
  json patch = json::object();
  if (given("--output-dir")) patch["output_dir"] = f.output_dir;
  if (given("--seed")) patch["seed"] = f.seed;
  if (given("--partition-seed")) patch["partition_seed"] = f.partition_seed;
  if (given("--dataset-dir")) patch["dataset"] = {{"type", "directory"}, {"path", f.dataset_dir}};
  if (given("--num-speakers")) patch["dataset"]["synthetic"]["num_speakers"] = f.num_speakers;
  if (given("--voices-per-speaker")) {
    patch["dataset"]["synthetic"]["min_voices"] = f.voices;
    patch["dataset"]["synthetic"]["max_voices"] = f.voices;
  }
  if (given("--dataset-seed")) patch["dataset"]["synthetic"]["seed"] = f.dataset_seed;
  if (given("--gamma")) patch["srs"]["synthetic"]["gamma"] = f.gamma;
  if (given("--beta")) patch["srs"]["synthetic"]["beta"] = f.beta;
  if (given("--srs-seed")) patch["srs"]["synthetic"]["seed"] = f.srs_seed;
  if (given("--backend-command")) {
    patch["srs"]["type"] = "backend";
    patch["srs"]["command"] = SplitWords(f.backend_command);
  }
  if (given("--backend-host")) {
    patch["srs"]["type"] = "backend";
    patch["srs"]["host"] = f.backend_host;
  }
  if (given("--backend-port")) patch["srs"]["port"] = f.backend_port;
  if (given("--timeout-ms")) patch["srs"]["timeout_ms"] = f.timeout_ms;
  if (given("--access")) patch["access"] = f.access;
  if (given("--setting")) patch["setting"]["type"] = f.setting;
  if (given("--num-voices")) patch["setting"]["n"] = f.n;
  if (given("--num-imposters")) patch["setting"]["m"] = f.m;
  if (given("--imposter-voices")) patch["setting"]["k"] = f.k;
  if (given("--source-voices")) patch["setting"]["source_voices"] = f.source_voices;
  if (given("--chunking") || given("--no-chunking")) patch["setting"]["chunking"] = f.chunking;
  if (given("--attack")) patch["attack"]["model"] = f.attack_model;
  if (given("--feature")) patch["attack"]["feature"] = f.feature;
  if (given("--mixing")) patch["attack"]["mixing"] = f.mixing;
  if (given("--vnd")) patch["attack"]["vnd"] = f.vnd;
  if (given("--bound-step")) patch["attack"]["bound"]["step"] = f.bound_step;
  if (given("--alpha")) patch["attack"]["bound"]["alpha"] = f.alpha;
  if (given("--epochs")) patch["attack"]["train"]["epochs"] = f.epochs;
  if (given("--repeats")) patch["attack"]["train"]["repeats"] = f.repeats;
  if (given("--learning-rate")) patch["attack"]["train"]["learning_rate"] = f.learning_rate;
  if (given("--concat")) patch["techniques"]["concat"] = f.concat;
  if (given("--group")) patch["techniques"]["group"] = f.group;
  if (given("--share")) patch["techniques"]["share"] = f.share;
  if (given("--ratios")) patch["ratios"] = f.ratios;
  if (given("--no-ratios")) patch["ratios"] = json::array();
  if (given("--permutation-importance")) patch["permutation_importance"] = f.importance;
  if (given("--workers")) patch["workers"] = f.workers;
  if (given("--trials")) patch["trials"] = f.trials;
  base.merge_patch(patch);
  AuditConfig c = base.get<AuditConfig>();
  c.Validate();
  return c;
}

void Print(const std::string& s) { std::fwrite(s.data(), 1, s.size(), stdout); }

std::string Ratio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", r);
  return buf;
}

int Synth(Audit& audit, const std::string& out_dir) {
  const auto& data = audit.dataset();
  const std::filesystem::path root =
      out_dir.empty() ? audit.output_dir() / "dataset" : std::filesystem::path(out_dir);
  spkmia::WriteDatasetWav(data, root);
  Print("wrote " + std::to_string(data.num_voices()) + " voices of " +
        std::to_string(data.speakers().size()) + " speakers to " + root.string() + "\n");
  return 0;
}

int Partition(Audit& audit) {
  nlohmann::ordered_json j;
  for (auto label : spkmia::kAllPartitionLabels) {
    const auto speakers = audit.Speakers(label);
    j[std::string(spkmia::PartitionLabelName(label))] = speakers;
    Print(std::string(spkmia::PartitionLabelName(label)) + " " +
          std::to_string(speakers.size()) + "\n");
  }
  nlohmann::ordered_json splits;
  for (auto label : {spkmia::PartitionLabel::kShadowTrain, spkmia::PartitionLabel::kTargetTrain}) {
    for (const auto& s : audit.Speakers(label)) {
      nlohmann::ordered_json e;
      for (auto role : {spkmia::VoiceRole::kTrainVoice, spkmia::VoiceRole::kHeldOutVoice}) {
        std::vector<std::string> ids;
        for (const auto& v : audit.VoicesOf(s, role)) ids.push_back(v.voice_id());
        e[role == spkmia::VoiceRole::kTrainVoice ? "train" : "held_out"] = ids;
      }
      splits[s] = e;
    }
  }
  j["voice_splits"] = splits;
  spkmia::WriteFileAtomic(audit.output_dir() / "partition.json", j.dump(2) + "\n");
  return 0;
}

int TrainSrs(Audit& audit) {
  for (auto side : {spkmia::Side::kShadow, spkmia::Side::kTarget}) {
    auto model = audit.Srs(side);
    const std::string name(spkmia::SideName(side));
    if (auto synthetic = std::dynamic_pointer_cast<const spkmia::SyntheticSrs>(model)) {
      spkmia::WriteFileAtomic(audit.output_dir() / "srs" / (name + ".json"),
                              synthetic->ToJson().dump() + "\n");
    }
    Print(name + " SRS ready, dim " + std::to_string(model->dim()) + "\n");
  }
  return 0;
}

int Extract(Audit& audit) {
  const auto shadow = audit.Shadow();
  Print("shadow rows: r1 " + std::to_string(shadow.r1.size()) + ", r0 " +
        std::to_string(shadow.r0.size()) + ", non-members " +
        std::to_string(shadow.non_members.size()) + "\n");
  for (double r : audit.config().ratios) {
    const auto rows = audit.Target(r);
    Print("target rows at r_m=" + Ratio(r) + ": members " + std::to_string(rows.members.size()) +
          ", non-members " + std::to_string(rows.non_members.size()) + "\n");
  }
  return 0;
}

int TrainAttack(Audit& audit) {
  const auto models = audit.TrainAttack();
  const auto dir = audit.output_dir() / "models";
  for (std::size_t i = 0; i < models.ensemble.size(); ++i) {
    spkmia::WriteFileAtomic(dir / ("classifier-" + std::to_string(i) + ".json"),
                            models.ensemble[i].ToJson().dump(2) + "\n");
  }
  if (models.threshold) {
    spkmia::WriteFileAtomic(dir / "threshold.json", models.threshold->ToJson().dump(2) + "\n");
  }
  Print("trained " + std::to_string(models.ensemble.size()) + " classifier(s)" +
        (models.threshold ? std::string(", threshold model") : std::string()) +
        (models.banks.empty() ? std::string()
                              : ", " + std::to_string(models.banks.size()) + " bank(s)") +
        "\n");
  return 0;
}

int BoundN(Audit& audit) {
  const auto result = audit.Bound();
  nlohmann::ordered_json j;
  j["bound"] = result.bound;
  j["traces"] = nlohmann::ordered_json::array();
  const auto& names = spkmia::FeatureNames();
  for (const auto& t : result.traces) {
    j["traces"].push_back({{"feature", names[t.feature]},
                           {"dataset", t.dataset == 0 ? "member-train" : t.dataset == 1 ? "member-held-out" : "non-member"},
                           {"accepted_n", t.accepted_n},
                           {"p_values", t.p_values}});
  }
  spkmia::WriteFileAtomic(audit.output_dir() / "bound.json", j.dump(2) + "\n");
  Print("N' = " + std::to_string(result.bound) + "\n");
  return 0;
}

int Infer(Audit& audit) {
  const auto models = audit.TrainAttack();
  for (double r : audit.config().ratios) {
    const auto rows = audit.Target(r);
    const auto runs = models.banks.empty() ? models.Score(rows.members, rows.non_members)
                                           : audit.ScoreWithBanks(models, r);
    std::ostringstream csv;
    csv << "speaker_id,label,score,decision\n";
    csv.precision(10);
    auto emit = [&](const std::vector<spkmia::FeatureVector>& fvs, bool member) {
      for (std::size_t i = 0; i < fvs.size(); ++i) {
        double score = 0.0;
        for (const auto& run : runs) score += member ? run.members[i] : run.non_members[i];
        score /= static_cast<double>(runs.size());
        csv << fvs[i].speaker_id << "," << (member ? 1 : 0) << "," << score << ","
            << (score > runs.front().cut ? 1 : 0) << "\n";
      }
    };
    emit(rows.members, true);
    emit(rows.non_members, false);
    spkmia::WriteFileAtomic(audit.output_dir() / ("predictions_r" + Ratio(r) + ".csv"),
                            csv.str());
    Print("predictions at r_m=" + Ratio(r) + " written\n");
  }
  return 0;
}

int PlanQueries(const AuditConfig& c) {
  std::vector<std::size_t> k(c.setting.m, c.setting.k);
  const auto rows = spkmia::TableOneRows(c.setting.n, k);
  const std::string csv = spkmia::QueryCountsCsv(rows);
  spkmia::WriteFileAtomic(std::filesystem::path(c.output_dir) / "query_counts.csv", csv);
  Print(csv);
  return 0;
}

int Report(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<json> results;
  for (const auto& d : dirs) {
    results.push_back(json::parse(spkmia::ReadFile(std::filesystem::path(d) / "results.json")));
  }
  const std::string table = spkmia::GammaTable(results);
  if (!out.empty()) spkmia::WriteFileAtomic(out, table);
  Print(table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker-level membership inference audit toolkit"};
  app.require_subcommand(1);
  Flags flags;
  std::string synth_out;
  std::vector<std::string> report_dirs;
  std::string report_out;

  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"synth", "synthesize the dataset and write it as WAV files"},
      {"partition", "partition speakers and split member voices"},
      {"train-srs", "train the shadow and target SRSs"},
      {"extract", "extract shadow and target feature rows"},
      {"train-attack", "train the attack model(s)"},
      {"bound-n", "estimate the voice-count bound N'"},
      {"infer", "score target speakers"},
      {"evaluate", "evaluate and write the report"},
      {"plan-queries", "closed-form black-box query counts"},
      {"report", "tabulate results of several audits"},
      {"audit", "run every stage and print the summary"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    if (std::string(c.name) == "report") {
      sub->add_option("dirs", report_dirs, "audit output directories")->required();
      sub->add_option("--out", report_out, "also write the table here");
    } else {
      AddConfigFlags(sub, flags);
    }
    if (std::string(c.name) == "synth") sub->add_option("--out", synth_out, "WAV root");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();

  if (name == "report") {
    try {
      return Report(report_dirs, report_out);
    } catch (const std::exception& e) {
      std::cerr << "spkmia report: " << e.what() << "\n";
      return kStageError;
    }
  }

  AuditConfig config;
  try {
    config = ResolveConfig(sub, flags);
  } catch (const std::exception& e) {
    std::cerr << "spkmia: config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (name == "plan-queries") return PlanQueries(config);
    Audit audit(config);
    if (name == "synth") return Synth(audit, synth_out);
    if (name == "partition") return Partition(audit);
    if (name == "train-srs") return TrainSrs(audit);
    if (name == "extract") return Extract(audit);
    if (name == "train-attack") return TrainAttack(audit);
    if (name == "bound-n") return BoundN(audit);
    if (name == "infer") return Infer(audit);
    const auto report = audit.Run();
    if (name == "audit") Print(spkmia::SummaryText(report, config));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "spkmia " << name << ": " << e.what() << "\n";
    return kStageError;
  }
}
