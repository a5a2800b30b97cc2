// pseudoseg: command-line front end for the pseudo-label pipeline.
//
// Exit codes: 0 success, 2 input error, 3 stage-contract violation (stage
// order, or an upstream artifact a stage needs is missing).

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pseudoseg/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pseudoseg;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitContract = 3;

struct CommonArgs {
  std::string manifest;
  std::string out;
  std::string config;
  int jobs = 1;
  int k_target = 0;
  std::vector<std::string> stages;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--manifest", args.manifest, "Run manifest (JSON object or array)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out, "Output root; one subdirectory per image id")->required();
  cmd->add_option("--config", args.config, "Pipeline config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--jobs", args.jobs, "Manifests processed concurrently")
      ->check(CLI::PositiveNumber);
}

PipelineConfig load_config(const CommonArgs& args) {
  PipelineConfig cfg = args.config.empty() ? PipelineConfig{} : read_config(args.config);
  if (args.k_target > 0) cfg.k_target = args.k_target;
  if (!args.stages.empty()) {
    cfg.stages.clear();
    for (const auto& s : args.stages) cfg.stages.push_back(stage_from_string(s));
  }
  return cfg;
}

int run(const std::string& command, const CommonArgs& args) {
  const auto cfg = load_config(args);
  const auto manifests = read_manifests(args.manifest);
  const fs::path out_root(args.out);

  auto per_image = [&](const RunManifest& m) -> StageResult {
    const auto dir = out_root / m.image_id;
    if (command == "pipeline") return run_pipeline(cfg, m, dir);
    // Single stages pick up what earlier invocations wrote into the same directory.
    const auto in = adopt_prior_outputs(m, dir);
    if (command == "stability") return run_stability(cfg, in, dir);
    if (command == "overlay") return run_overlay(in, dir);
    if (command == "sgm-loss") return run_stage(cfg, Stage::Sgm, in, dir);
    if (command == "adaptive-loss") return run_stage(cfg, Stage::SelfTrain, in, dir);
    return run_stage(cfg, stage_from_string(command), in, dir);
  };
  if (command == "pipeline") validate_stage_order(cfg.stages);
  const auto results = run_batch(manifests, args.jobs, per_image);

  nlohmann::json summary;
  summary["command"] = command;
  summary["images"] = results.size();
  auto entries = nlohmann::json::array();
  for (const auto& r : results) entries.push_back(nlohmann::json::parse(r.summary_json));
  summary["results"] = entries;
  std::cout << summary.dump() << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised instance-segmentation pseudo-label toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"affinity", "Pooled patch-affinity map from patch features"},
      {"multicut", "Partition the patch graph into candidate masks"},
      {"filter", "Rate foreground candidates and keep the top Q percent"},
      {"superpixel", "Generate (SNIC) or ingest superpixels and their statistics"},
      {"sgm-loss", "Superpixel-guided mask loss and gradient per coarse mask"},
      {"stability", "Stability scores of final-checkpoint masks"},
      {"adaptive-loss", "Boundary-band weights and adaptive loss per mask"},
      {"pipeline", "Run the configured stages in order"},
      {"overlay", "Render masks over the image as a PPM"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, args);
    if (name == "superpixel" || name == "pipeline") {
      cmd->add_option("--k-target", args.k_target, "Superpixel count target for SNIC")
          ->check(CLI::PositiveNumber);
    }
    if (name == "pipeline") {
      cmd->add_option("--stages", args.stages, "Stages to run, in order (overrides config)")
          ->delimiter(',');
    }
    subs.push_back(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  std::string command;
  for (auto* s : subs) {
    if (s->parsed()) command = s->get_name();
  }
  try {
    return run(command, args);
  } catch (const Error& e) {
    nlohmann::json err = {{"command", command}, {"error", to_string(e.code())}, {"message", e.what()}};
    std::cout << err.dump() << std::endl;
    std::cerr << "pseudoseg " << command << ": " << e.what() << "\n";
    const bool contract = e.code() == ErrorCode::StageDependencyViolation ||
                          e.code() == ErrorCode::MissingInput;
    return contract ? kExitContract : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "pseudoseg " << command << ": " << e.what() << "\n";
    return 1;
  }
}
