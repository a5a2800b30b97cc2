#include "pseudoseg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include <json.hpp>

#include "pseudoseg/affinity.hpp"
#include "pseudoseg/maskfilter.hpp"
#include "pseudoseg/multicut.hpp"
#include "pseudoseg/overlay.hpp"
#include "pseudoseg/selftrain.hpp"
#include "pseudoseg/superpixel.hpp"

namespace pseudoseg {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kAffinityFile = "affinity.npy";
constexpr const char* kCandidatesFile = "candidates.npy";
constexpr const char* kCandidatesMetaFile = "candidates.json";
constexpr const char* kMasksFile = "masks.npy";
constexpr const char* kFilterReportFile = "filter_report.json";
constexpr const char* kSuperpixelsFile = "superpixels.npy";
constexpr const char* kSuperpixelStatsFile = "superpixels.json";
constexpr const char* kSgmReportFile = "sgm_report.json";
constexpr const char* kSgmGradFile = "sgm_grad.npy";
constexpr const char* kStabilityFile = "stability.json";
constexpr const char* kWeightsFile = "adaptive_weights.npy";
constexpr const char* kAdaptiveGradFile = "adaptive_grad.npy";
constexpr const char* kAdaptiveReportFile = "adaptive_report.json";
constexpr const char* kOverlayFile = "overlay.ppm";
constexpr const char* kManifestFile = "manifest.json";

[[noreturn]] void missing(const RunManifest& m, const std::string& what) {
  throw Error(ErrorCode::MissingInput, m.image_id + ": missing input '" + what + "'");
}

fs::path require_path(const RunManifest& m, const std::string& value, const std::string& role) {
  if (value.empty()) missing(m, role);
  const auto p = m.resolve(value);
  if (!fs::exists(p)) missing(m, role + " (" + p.string() + ")");
  return p;
}

fs::path require_output(const RunManifest& m, const std::string& key) {
  const auto it = m.outputs.find(key);
  if (it == m.outputs.end()) missing(m, key);
  return require_path(m, it->second, key);
}

fs::path prepare_out_dir(const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());
  return fs::absolute(out_dir).lexically_normal();
}

// Rebases every path of the manifest onto out_dir: artifacts inside it become
// bare file names, everything else becomes absolute.
RunManifest rebase(const RunManifest& m, const fs::path& out_dir) {
  auto fix = [&](const std::string& p) -> std::string {
    if (p.empty()) return p;
    const auto abs = fs::absolute(m.resolve(p)).lexically_normal();
    if (abs.parent_path() == out_dir) return abs.filename().string();
    return abs.string();
  };
  RunManifest out = m;
  out.features = fix(m.features);
  out.image = fix(m.image);
  out.prob_map = fix(m.prob_map);
  out.superpixels = fix(m.superpixels);
  for (auto& p : out.masks) p = fix(p);
  for (auto& p : out.checkpoints) p = fix(p);
  for (auto& [k, p] : out.outputs) p = fix(p);
  out.base_dir = out_dir;
  return out;
}

StageResult finish(RunManifest m, const fs::path& out_dir, json summary) {
  write_manifest(m, out_dir / kManifestFile);
  summary["image_id"] = m.image_id;
  return {std::move(m), summary.dump()};
}

json rating_json(double r) { return std::isfinite(r) ? json(r) : json(nullptr); }

RgbImage load_image(const RunManifest& m) {
  return to_rgb_image(read_image_ppm(require_path(m, m.image, "image")));
}

StageResult stage_affinity(const RunManifest& in, const fs::path& out) {
  const auto features = PatchGrid::from_array(read_array(require_path(in, in.features, "features")));
  const auto a = build_affinity_map(features);
  write_array(from_grid(a), out / kAffinityFile);
  RunManifest m = rebase(in, out);
  m.outputs["affinity"] = kAffinityFile;
  double lo = 1.0, hi = -1.0;
  for (double v : a.values()) lo = std::min(lo, v), hi = std::max(hi, v);
  return finish(std::move(m), out,
                {{"stage", "affinity"},
                 {"n", features.n()},
                 {"dim", features.dim()},
                 {"degenerate_patches", features.degenerate_patches().size()},
                 {"min", lo},
                 {"max", hi}});
}

StageResult stage_multicut(const RunManifest& in, const HyperParams& hp, const fs::path& out) {
  const auto features = PatchGrid::from_array(read_array(require_path(in, in.features, "features")));
  const auto affinity = to_double_grid(read_array(require_output(in, "affinity")), "affinity");
  const auto graph = build_multicut_graph(features, hp.tau_cut);
  const auto partition = solve_multicut(graph);
  const auto masks = partition_to_masks(partition, features.n());

  json entries = json::array();
  int foreground = 0;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const bool fg = is_foreground(masks[i]);
    foreground += fg;
    double sum = 0.0;
    for (std::size_t p = 0; p < masks[i].size(); ++p) sum += masks[i][p] ? affinity[p] : 0.0;
    entries.push_back({{"mask_index", i},
                       {"cluster_id", i},
                       {"foreground", fg},
                       {"area", mask_area(masks[i])},
                       {"mean_affinity", sum / static_cast<double>(mask_area(masks[i]))}});
  }
  const double objective = multicut_objective(graph, partition);
  json meta = {{"n", features.n()},
               {"clusters", partition.k},
               {"objective", objective},
               {"tau_cut", hp.tau_cut},
               {"masks", entries}};
  write_array(from_mask_stack(masks, features.n(), features.n()), out / kCandidatesFile);
  write_text(meta.dump(), out / kCandidatesMetaFile);

  RunManifest m = rebase(in, out);
  m.outputs["candidates"] = kCandidatesFile;
  m.outputs["candidates_meta"] = kCandidatesMetaFile;
  return finish(std::move(m), out,
                {{"stage", "multicut"},
                 {"clusters", partition.k},
                 {"foreground", foreground},
                 {"objective", objective}});
}

StageResult stage_filter(const RunManifest& in, const HyperParams& hp, const fs::path& out) {
  const auto affinity = to_double_grid(read_array(require_output(in, "affinity")), "affinity");
  const auto candidates = to_mask_stack(read_array(require_output(in, "candidates")), "candidates");
  json meta;
  try {
    meta = json::parse(read_text(require_output(in, "candidates_meta")));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("candidates sidecar: ") + e.what());
  }
  const auto& entries = meta.at("masks");
  if (entries.size() != candidates.size()) {
    throw Error(ErrorCode::ShapeMismatch, "candidates sidecar does not match the mask stack");
  }

  // Background clusters (two or more corners) leave before rating.
  std::vector<std::size_t> source;
  std::vector<ScoredMask> scored;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!entries[i].at("foreground").get<bool>()) continue;
    source.push_back(i);
    scored.push_back({candidates[i], rate_mask(candidates[i], affinity), false});
  }
  if (!scored.empty()) scored = select_top_q(std::move(scored), hp.q_percent);

  json report = json::array();
  std::vector<Mask> kept;
  for (std::size_t j = 0; j < scored.size(); ++j) {
    report.push_back({{"mask_index", source[j]},
                      {"rating", rating_json(scored[j].rating)},
                      {"kept", scored[j].kept}});
    if (scored[j].kept) kept.push_back(scored[j].mask);
  }
  write_text(report.dump(), out / kFilterReportFile);
  write_array(from_mask_stack(kept, affinity.rows(), affinity.cols()), out / kMasksFile);

  RunManifest m = rebase(in, out);
  m.masks = {kMasksFile};
  m.outputs["filter_report"] = kFilterReportFile;
  return finish(std::move(m), out,
                {{"stage", "filter"},
                 {"candidates", candidates.size()},
                 {"rated", scored.size()},
                 {"kept", kept.size()},
                 {"q_percent", hp.q_percent}});
}

SuperpixelSeg load_or_build_superpixels(const PipelineConfig& cfg, const RunManifest& in,
                                        const RgbImage& image) {
  if (!in.superpixels.empty()) {
    return ingest_labels(
        to_label_grid(read_array(require_path(in, in.superpixels, "superpixels")), "superpixels"),
        image);
  }
  return snic_superpixels(image, {cfg.k_target, cfg.compactness});
}

StageResult stage_superpixel(const PipelineConfig& cfg, const RunManifest& in,
                             const fs::path& out) {
  const auto image = load_image(in);
  const bool ingested = !in.superpixels.empty();
  const auto seg = load_or_build_superpixels(cfg, in, image);
  write_array(from_grid(seg.labels), out / kSuperpixelsFile);
  write_text(superpixel_stats_json(seg), out / kSuperpixelStatsFile);
  RunManifest m = rebase(in, out);
  m.superpixels = kSuperpixelsFile;
  m.outputs["superpixel_stats"] = kSuperpixelStatsFile;
  return finish(std::move(m), out,
                {{"stage", "superpixel"},
                 {"source", ingested ? "ingested" : "snic"},
                 {"K", seg.k},
                 {"edges", seg.edges.size()}});
}

std::vector<Mask> load_pixel_masks(const RunManifest& in, int rows, int cols) {
  if (in.masks.empty()) missing(in, "masks");
  const auto stack = to_mask_stack(read_array(require_path(in, in.masks.front(), "masks")), "masks");
  std::vector<Mask> out;
  out.reserve(stack.size());
  for (const auto& m : stack) {
    out.push_back(m.rows() == rows && m.cols() == cols ? m : upsample_nearest(m, rows, cols));
  }
  return out;
}

StageResult stage_sgm(const PipelineConfig& cfg, const RunManifest& in, const HyperParams& hp,
                      const fs::path& out) {
  const auto image = load_image(in);
  const auto prob = to_double_grid(read_array(require_path(in, in.prob_map, "prob_map")), "prob_map");
  if (in.superpixels.empty()) missing(in, "superpixels");
  const auto seg = ingest_labels(
      to_label_grid(read_array(require_path(in, in.superpixels, "superpixels")), "superpixels"),
      image);
  const auto masks = load_pixel_masks(in, image.height, image.width);
  const auto ctx = prepare_sgm(seg, hp);

  json reports = json::array();
  std::vector<Grid<double>> grads;
  double total = 0.0;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    auto r = sgm_loss(ctx, prob, masks[i], cfg.sgm);
    json flags = json::array();
    if (r.no_labeled_superpixels) flags.push_back("no_labeled_superpixels");
    reports.push_back({{"mask_index", i},
                       {"hard", r.hard},
                       {"soft", r.soft},
                       {"total", r.total},
                       {"n_s", r.n_labeled},
                       {"flags", flags}});
    total += r.total;
    grads.push_back(std::move(r.grad));
  }
  write_text(json{{"K", seg.k}, {"masks", reports}}.dump(), out / kSgmReportFile);
  write_array(from_grid_stack(grads, image.height, image.width), out / kSgmGradFile);
  RunManifest m = rebase(in, out);
  m.outputs["sgm_report"] = kSgmReportFile;
  m.outputs["sgm_grad"] = kSgmGradFile;
  return finish(std::move(m), out,
                {{"stage", "sgm"},
                 {"masks", masks.size()},
                 {"K", seg.k},
                 {"mean_total", masks.empty() ? 0.0 : total / masks.size()}});
}

struct Stability {
  std::vector<Mask> last;
  std::vector<double> z;
  std::vector<double> z_bar;
};

Stability compute_stability(const RunManifest& in, const HyperParams& hp) {
  if (in.checkpoints.empty()) missing(in, "checkpoints");
  if (static_cast<int>(in.checkpoints.size()) != hp.e_checkpoints) {
    throw Error(ErrorCode::InvalidArgument,
                in.image_id + ": manifest lists " + std::to_string(in.checkpoints.size()) +
                    " checkpoints, e_checkpoints is " + std::to_string(hp.e_checkpoints));
  }
  std::vector<CheckpointMaskSet> sets;
  for (std::size_t j = 0; j < in.checkpoints.size(); ++j) {
    const auto stack = to_mask_stack(
        read_array(require_path(in, in.checkpoints[j], "checkpoint_" + std::to_string(j + 1))),
        "checkpoint");
    CheckpointMaskSet set{static_cast<int>(j + 1), {}};
    for (const auto& mask : stack) set.masks.push_back({in.image_id, mask});
    sets.push_back(std::move(set));
  }
  const CheckpointMaskSet last = std::move(sets.back());
  sets.pop_back();
  Stability s;
  for (const auto& tagged : last.masks) {
    s.last.push_back(tagged.mask);
    s.z.push_back(stability_score(tagged, sets));
  }
  if (!s.z.empty()) s.z_bar = minmax_normalize(s.z, hp.epsilon);
  return s;
}

void write_stability(const Stability& s, const fs::path& out) {
  json entries = json::array();
  for (std::size_t i = 0; i < s.z.size(); ++i) {
    entries.push_back({{"mask_index", i}, {"Z", s.z[i]}, {"Z_bar", s.z_bar[i]}});
  }
  write_text(entries.dump(), out / kStabilityFile);
}

StageResult stage_selftrain(const RunManifest& in, const HyperParams& hp, const fs::path& out) {
  const auto s = compute_stability(in, hp);
  const auto prob = to_double_grid(read_array(require_path(in, in.prob_map, "prob_map")), "prob_map");
  write_stability(s, out);

  json reports = json::array();
  std::vector<Grid<double>> weights, grads;
  for (std::size_t i = 0; i < s.last.size(); ++i) {
    auto w = weight_map(s.last[i], s.z_bar[i], hp.d_hat);
    auto loss = adaptive_loss(prob, s.last[i], w);
    reports.push_back({{"mask_index", i}, {"loss", loss.value}, {"Z_bar", s.z_bar[i]}});
    weights.push_back(std::move(w));
    grads.push_back(std::move(loss.grad));
  }
  write_text(reports.dump(), out / kAdaptiveReportFile);
  write_array(from_grid_stack(weights, prob.rows(), prob.cols()), out / kWeightsFile);
  write_array(from_grid_stack(grads, prob.rows(), prob.cols()), out / kAdaptiveGradFile);

  RunManifest m = rebase(in, out);
  m.outputs["stability"] = kStabilityFile;
  m.outputs["adaptive_report"] = kAdaptiveReportFile;
  m.outputs["adaptive_weights"] = kWeightsFile;
  m.outputs["adaptive_grad"] = kAdaptiveGradFile;
  return finish(std::move(m), out,
                {{"stage", "selftrain"}, {"masks", s.last.size()}, {"e", hp.e_checkpoints}});
}

}  // namespace

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::Affinity: return "affinity";
    case Stage::Multicut: return "multicut";
    case Stage::Filter: return "filter";
    case Stage::Superpixel: return "superpixel";
    case Stage::Sgm: return "sgm";
    case Stage::SelfTrain: return "selftrain";
  }
  return "?";
}

Stage stage_from_string(const std::string& name) {
  for (Stage s : all_stages()) {
    if (name == to_string(s)) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown stage '" + name + "'");
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {Stage::Affinity,   Stage::Multicut, Stage::Filter,
                                            Stage::Superpixel, Stage::Sgm,      Stage::SelfTrain};
  return stages;
}

std::vector<Stage> stage_dependencies(Stage stage) {
  switch (stage) {
    case Stage::Affinity: return {};
    case Stage::Multicut: return {Stage::Affinity};
    case Stage::Filter: return {Stage::Affinity, Stage::Multicut};
    case Stage::Superpixel: return {};
    case Stage::Sgm: return {Stage::Filter, Stage::Superpixel};
    case Stage::SelfTrain: return {};
  }
  return {};
}

HyperParams PipelineConfig::hyperparams_for(const RunManifest& m) const {
  HyperParams hp = m.hyperparams;
  for (const auto& [key, value] : hyperparam_overrides) {
    if (key == "q_percent") hp.q_percent = value;
    else if (key == "alpha1") hp.alpha1 = value;
    else if (key == "alpha2") hp.alpha2 = value;
    else if (key == "e_checkpoints") hp.e_checkpoints = static_cast<int>(value);
    else if (key == "epsilon") hp.epsilon = value;
    else if (key == "d_hat") hp.d_hat = value;
    else if (key == "tau_cut") hp.tau_cut = value;
    else throw Error(ErrorCode::InvalidArgument, "unknown hyperparameter '" + key + "'");
  }
  hp.validate();
  return hp;
}

PipelineConfig config_from_json(const std::string& text) {
  PipelineConfig cfg;
  try {
    const auto j = json::parse(text);
    if (j.contains("hyperparams")) {
      for (const auto& [key, value] : j.at("hyperparams").items()) {
        cfg.hyperparam_overrides[key] = value.get<double>();
      }
    }
    cfg.k_target = j.value("k_target", cfg.k_target);
    cfg.compactness = j.value("compactness", cfg.compactness);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.sgm.include_self = j.value("soft_include_self", cfg.sgm.include_self);
    cfg.sgm.grad_through_target = j.value("soft_grad_through_target", cfg.sgm.grad_through_target);
    cfg.overlay = j.value("overlay", cfg.overlay);
    if (j.contains("stages")) {
      cfg.stages.clear();
      for (const auto& s : j.at("stages")) cfg.stages.push_back(stage_from_string(s.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  return cfg;
}

PipelineConfig read_config(const fs::path& path) { return config_from_json(read_text(path)); }

void validate_stage_order(const std::vector<Stage>& stages) {
  for (std::size_t i = 0; i < stages.size(); ++i) {
    for (std::size_t j = i + 1; j < stages.size(); ++j) {
      if (stages[i] == stages[j]) {
        throw Error(ErrorCode::StageDependencyViolation,
                    std::string("stage '") + to_string(stages[i]) + "' listed twice");
      }
    }
    for (Stage dep : stage_dependencies(stages[i])) {
      const auto at = std::find(stages.begin(), stages.end(), dep);
      if (at != stages.end() && static_cast<std::size_t>(at - stages.begin()) > i) {
        throw Error(ErrorCode::StageDependencyViolation,
                    std::string("stage '") + to_string(stages[i]) + "' requested before '" +
                        to_string(dep) + "'");
      }
    }
  }
}

RunManifest adopt_prior_outputs(const RunManifest& manifest, const fs::path& out_dir) {
  const auto path = out_dir / kManifestFile;
  if (!fs::exists(path)) return manifest;
  const auto priors = read_manifests(path);
  if (priors.size() != 1 || priors[0].image_id != manifest.image_id) return manifest;
  const auto& prior = priors[0];
  auto abs = [&](const std::string& p) { return fs::absolute(prior.resolve(p)).lexically_normal().string(); };
  RunManifest out = manifest;
  for (const auto& [key, p] : prior.outputs) out.outputs.try_emplace(key, abs(p));
  if (out.masks.empty()) {
    for (const auto& p : prior.masks) out.masks.push_back(abs(p));
  }
  if (out.superpixels.empty() && !prior.superpixels.empty()) out.superpixels = abs(prior.superpixels);
  return out;
}

StageResult run_stage(const PipelineConfig& cfg, Stage stage, const RunManifest& manifest,
                      const fs::path& out_dir) {
  const auto out = prepare_out_dir(out_dir);
  const auto hp = cfg.hyperparams_for(manifest);
  switch (stage) {
    case Stage::Affinity: return stage_affinity(manifest, out);
    case Stage::Multicut: return stage_multicut(manifest, hp, out);
    case Stage::Filter: return stage_filter(manifest, hp, out);
    case Stage::Superpixel: return stage_superpixel(cfg, manifest, out);
    case Stage::Sgm: return stage_sgm(cfg, manifest, hp, out);
    case Stage::SelfTrain: return stage_selftrain(manifest, hp, out);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown stage");
}

StageResult run_stability(const PipelineConfig& cfg, const RunManifest& manifest,
                          const fs::path& out_dir) {
  const auto out = prepare_out_dir(out_dir);
  const auto hp = cfg.hyperparams_for(manifest);
  const auto s = compute_stability(manifest, hp);
  write_stability(s, out);
  RunManifest m = rebase(manifest, out);
  m.outputs["stability"] = kStabilityFile;
  double lo = 0.0, hi = 0.0;
  if (!s.z.empty()) {
    lo = *std::min_element(s.z.begin(), s.z.end());
    hi = *std::max_element(s.z.begin(), s.z.end());
  }
  return finish(std::move(m), out,
                {{"stage", "stability"}, {"masks", s.z.size()}, {"z_min", lo}, {"z_max", hi}});
}

StageResult run_overlay(const RunManifest& manifest, const fs::path& out_dir) {
  const auto out = prepare_out_dir(out_dir);
  const auto image = load_image(manifest);
  const auto masks = load_pixel_masks(manifest, image.height, image.width);
  write_image_ppm(from_rgb_image(render_overlay(image, masks)), out / kOverlayFile);
  RunManifest m = rebase(manifest, out);
  m.outputs["overlay"] = kOverlayFile;
  return finish(std::move(m), out, {{"stage", "overlay"}, {"masks", masks.size()}});
}

StageResult run_pipeline(const PipelineConfig& cfg, const RunManifest& manifest,
                         const fs::path& out_dir) {
  validate_stage_order(cfg.stages);
  StageResult current{manifest, {}};
  json stages = json::array();
  for (Stage s : cfg.stages) {
    current = run_stage(cfg, s, current.manifest, out_dir);
    stages.push_back(json::parse(current.summary_json));
  }
  if (cfg.overlay && !current.manifest.image.empty() && !current.manifest.masks.empty()) {
    current = run_overlay(current.manifest, out_dir);
    stages.push_back(json::parse(current.summary_json));
  }
  json summary = {{"image_id", manifest.image_id}, {"stages", stages}};
  if (cfg.stages.empty()) current = {rebase(manifest, prepare_out_dir(out_dir)), {}};
  write_manifest(current.manifest, prepare_out_dir(out_dir) / kManifestFile);
  return {current.manifest, summary.dump()};
}

std::vector<StageResult> run_batch(const std::vector<RunManifest>& manifests, int jobs,
                                   const std::function<StageResult(const RunManifest&)>& fn) {
  std::vector<StageResult> results(manifests.size());
  std::vector<std::exception_ptr> errors(manifests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < manifests.size(); i = next++) {
      try {
        results[i] = fn(manifests[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, jobs));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(n_threads, manifests.size()); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace pseudoseg
