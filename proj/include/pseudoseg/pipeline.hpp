#pragma once

// File-based orchestration of the pseudo-label stages over run manifests.
//
// Each image gets its own output directory. A stage reads its inputs through
// the manifest, writes artifacts into the output directory and records them
// in the returned manifest, which is also written as <out>/manifest.json.
// Paths in that manifest are bare file names for artifacts inside the output
// directory and absolute paths for everything else, so two runs into
// different directories produce byte-identical trees.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pseudoseg/ndio.hpp"
#include "pseudoseg/sgmloss.hpp"

namespace pseudoseg {

enum class Stage { Affinity, Multicut, Filter, Superpixel, Sgm, SelfTrain };

const char* to_string(Stage stage);
// Throws InvalidArgument for unknown names.
Stage stage_from_string(const std::string& name);
const std::vector<Stage>& all_stages();
// Upstream stages whose artifacts `stage` consumes.
std::vector<Stage> stage_dependencies(Stage stage);

struct PipelineConfig {
  // Applied on top of each manifest's own hyperparams.
  std::map<std::string, double> hyperparam_overrides;
  int k_target = 300;
  double compactness = 10.0;
  std::vector<Stage> stages = all_stages();
  std::uint64_t seed = 0;  // reserved; every stage is deterministic
  SgmOptions sgm;
  bool overlay = true;

  HyperParams hyperparams_for(const RunManifest& m) const;
};

// Keys: hyperparams (object), k_target, compactness, stages (list of names),
// seed, soft_include_self, soft_grad_through_target, overlay.
PipelineConfig config_from_json(const std::string& text);
PipelineConfig read_config(const std::filesystem::path& path);

// Throws StageDependencyViolation when a stage is listed before one of its
// dependencies or listed twice.
void validate_stage_order(const std::vector<Stage>& stages);

struct StageResult {
  RunManifest manifest;
  std::string summary_json;  // one-line JSON object
};

// Fills outputs, masks and superpixels that `manifest` lacks from a manifest
// an earlier run left in out_dir for the same image, so single stages can be
// chained across invocations. Returns `manifest` unchanged when there is none.
RunManifest adopt_prior_outputs(const RunManifest& manifest, const std::filesystem::path& out_dir);

// Runs one stage. Throws MissingInput when an input the stage reads is
// absent from the manifest or from disk.
StageResult run_stage(const PipelineConfig& cfg, Stage stage, const RunManifest& manifest,
                      const std::filesystem::path& out_dir);

// Stability scores only (the first half of the self-training stage).
StageResult run_stability(const PipelineConfig& cfg, const RunManifest& manifest,
                          const std::filesystem::path& out_dir);

// Renders <out>/overlay.ppm from the manifest's image and first mask stack.
StageResult run_overlay(const RunManifest& manifest, const std::filesystem::path& out_dir);

// Validates the stage order, runs every configured stage, then the overlay
// when enabled and possible.
StageResult run_pipeline(const PipelineConfig& cfg, const RunManifest& manifest,
                         const std::filesystem::path& out_dir);

// Runs `fn` on every manifest with up to `jobs` worker threads; results are
// returned in input order. The first failure (in input order) is rethrown
// after all workers finish.
std::vector<StageResult> run_batch(
    const std::vector<RunManifest>& manifests, int jobs,
    const std::function<StageResult(const RunManifest&)>& fn);

}  // namespace pseudoseg
