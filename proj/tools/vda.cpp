// Copyright 2026 The vda Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// vda: VoIP degradation analysis pipeline.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "vda/error.hpp"
#include "vda/pipeline.hpp"

namespace {

using vda::pipeline::RunConfig;

void setup_logging() {
  auto logger = spdlog::stderr_logger_st("vda");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("VDA_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

struct Flags {
  std::string manifest;
  std::string out = ".";
  std::string metrics = "all";
  std::string outcome = "stoi";
  std::string reference = "zero-error";
  std::string features = "all";
  std::string variant;
  std::uint64_t seed = 7;
  int jobs = 1;
  int max_lag = 16000;
  int utterances = 16;
  double seconds = 1.2;
};

RunConfig to_config(const Flags& f) {
  RunConfig cfg;
  cfg.manifest_path = f.manifest;
  cfg.output_dir = f.out;
  cfg.metrics_selected = vda::metrics::MetricSelection::parse(f.metrics);
  cfg.outcome = vda::model::parse_outcome(f.outcome);
  cfg.reference = vda::model::parse_reference(f.reference);
  cfg.feature_mask = vda::model::parse_feature_mask(f.features);
  cfg.seed = f.seed;
  cfg.jobs = f.jobs;
  cfg.max_lag = f.max_lag;
  cfg.variant = f.variant;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  Flags f;
  CLI::App app{"VoIP degradation analysis: metrics, acoustic features and decomposition"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", f.out, "Output directory")->capture_default_str();
    sub->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  };
  auto add_manifest = [&](CLI::App* sub) {
    sub->add_option("--manifest", f.manifest, "Corpus manifest CSV")->required();
    sub->add_option("--max-lag", f.max_lag, "Alignment search range in samples")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--outcome", f.outcome, "Outcome metric")
        ->check(CLI::IsMember({"stoi", "pesq"}))
        ->capture_default_str();
    sub->add_option("--features", f.features, "Feature indices, comma separated, or 'all'")->capture_default_str();
  };

  auto* validate = app.add_subcommand("validate", "Check manifest entries and condition coverage");
  validate->add_option("--manifest", f.manifest, "Corpus manifest CSV")->required();

  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
  synth->add_option("--out", f.out, "Output directory")->capture_default_str();
  synth->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  synth->add_option("--utterances", f.utterances, "Utterance count")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--seconds", f.seconds, "Utterance duration")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--variant", f.variant, "Name of the enhanced variant");

  auto* metrics = app.add_subcommand("metrics", "Compute the objective metric suite per entry");
  add_manifest(metrics);
  add_common(metrics);
  metrics->add_option("--metrics", f.metrics, "Metric names, comma separated, or 'all'")->capture_default_str();
  metrics->add_option("--variant", f.variant, "Tag the output as metrics_<variant>.csv");

  auto* features = app.add_subcommand("features", "Extract acoustic feature errors per entry");
  add_manifest(features);
  add_common(features);

  auto* fit = app.add_subcommand("fit", "Fit the interaction regression");
  fit->add_option("--out", f.out, "Output directory")->capture_default_str();
  add_model(fit);

  auto* decompose = app.add_subcommand("decompose", "Three-fold decomposition per indicator");
  decompose->add_option("--out", f.out, "Output directory")->capture_default_str();
  add_model(decompose);
  decompose->add_option("--reference", f.reference, "Reference for the intercept row")
      ->check(CLI::IsMember({"zero-error", "stratum"}))
      ->capture_default_str();

  auto* report = app.add_subcommand("report", "Compare variant metrics against the baseline");
  report->add_option("--out", f.out, "Output directory")->capture_default_str();
  report->add_option("--variant", f.variant, "Restrict to one variant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : vda::exit_code(vda::ErrorKind::kUsage);
  }

  try {
    const RunConfig cfg = to_config(f);
    if (*validate) return vda::pipeline::cmd_validate(cfg, std::cout);
    if (*synth) {
      vda::pipeline::SynthOptions opts;
      opts.utterances = f.utterances;
      opts.seconds = f.seconds;
      if (!f.variant.empty()) opts.variant = f.variant;
      return vda::pipeline::cmd_synth(cfg, opts);
    }
    if (*metrics) return vda::pipeline::cmd_metrics(cfg);
    if (*features) return vda::pipeline::cmd_features(cfg);
    if (*fit) return vda::pipeline::cmd_fit(cfg);
    if (*decompose) return vda::pipeline::cmd_decompose(cfg);
    if (*report) return vda::pipeline::cmd_report(cfg);
  } catch (const vda::Error& e) {
    spdlog::error("{}", e.what());
    return vda::exit_code(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return vda::exit_code(vda::ErrorKind::kData);
  }
  return 0;
}
