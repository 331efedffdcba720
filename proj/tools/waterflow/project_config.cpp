// SPDX-License-Identifier: Apache-2.0
#include "project_config.hpp"

#include "waterflow/error.hpp"
#include "waterflow/json_fields.hpp"
#include "waterflow/ltns.hpp"

namespace wf::cli {

using nlohmann::json;

json to_json(const ProjectConfig& c) {
  json fams = json::array();
  for (auto f : c.dataset.families) fams.push_back(family_name(f));
  const auto& t = c.diffusion.train;
  const auto& ft = c.flow_training;
  return {
      {"seed", c.seed},
      {"paths", {{"checkpoints", c.checkpoints.string()}, {"outputs", c.outputs.string()}}},
      {"dataset", {{"seed", c.dataset.seed}, {"count", c.dataset.count}, {"families", fams}}},
      {"diffusion",
       {{"T", c.diffusion.T},
        {"beta_start", c.diffusion.beta_start},
        {"beta_end", c.diffusion.beta_end},
        {"steps", t.steps},
        {"batch", t.batch},
        {"lr", t.lr},
        {"seed", t.seed},
        {"hidden", t.hidden}}},
      {"embed",
       {{"key_seed", c.embed.key_seed},
        {"radius", c.embed.radius},
        {"ssim_threshold", c.embed.ssim_threshold},
        {"scope", scope_name(c.embed.scope)},
        {"store_wstar", c.embed.store_wstar}}},
      {"detection",
       {{"mode", c.detection.mode == DetectionMode::kStored ? "stored" : "recompute"},
        {"threshold", c.detection.threshold},
        {"dof", c.detection.dof == DofConvention::kMaskCount ? "mask" : "twice_mask"}}},
      {"flow_training",
       {{"epochs", ft.epochs},
        {"batch", ft.batch},
        {"lr", ft.adam.lr},
        {"checkpoint_interval", ft.checkpoint_interval},
        {"power_iterations", ft.power_iterations},
        {"seed", ft.seed},
        {"lambda_2", ft.weights.l2},
        {"lambda_s", ft.weights.ssim},
        {"lambda_p", ft.weights.perceptual},
        {"lambda_n", ft.weights.spectral},
        {"spectral_scale", ft.weights.spectral_scale ? json(*ft.weights.spectral_scale) : json(nullptr)},
        {"hidden", ft.flow.hidden},
        {"blocks", ft.flow.blocks},
        {"lipschitz", ft.flow.lipschitz}}},
      {"jobs", c.jobs}};
}

ProjectConfig project_config_from_json(const json& j) {
  ProjectConfig c;
  JsonFields top(j, "config");
  top.get("seed", c.seed);
  if (const json* p = top.sub("paths")) {
    JsonFields f(*p, "config.paths");
    std::string ck = c.checkpoints.string(), out = c.outputs.string();
    f.get("checkpoints", ck);
    f.get("outputs", out);
    f.finish();
    c.checkpoints = ck;
    c.outputs = out;
  }
  if (const json* d = top.sub("dataset")) {
    JsonFields f(*d, "config.dataset");
    f.get("seed", c.dataset.seed);
    f.get("count", c.dataset.count);
    std::vector<std::string> fams;
    f.get("families", fams);
    if (!fams.empty()) {
      c.dataset.families.clear();
      for (const auto& n : fams) c.dataset.families.push_back(parse_family(n));
    }
    f.finish();
  }
  if (const json* d = top.sub("diffusion")) {
    JsonFields f(*d, "config.diffusion");
    f.get("T", c.diffusion.T);
    f.get("beta_start", c.diffusion.beta_start);
    f.get("beta_end", c.diffusion.beta_end);
    f.get("steps", c.diffusion.train.steps);
    f.get("batch", c.diffusion.train.batch);
    f.get("lr", c.diffusion.train.lr);
    f.get("seed", c.diffusion.train.seed);
    f.get("hidden", c.diffusion.train.hidden);
    f.finish();
  }
  if (const json* e = top.sub("embed")) {
    JsonFields f(*e, "config.embed");
    f.get("key_seed", c.embed.key_seed);
    f.get("radius", c.embed.radius);
    f.get("ssim_threshold", c.embed.ssim_threshold);
    std::string scope = scope_name(c.embed.scope);
    f.get("scope", scope);
    c.embed.scope = parse_injection_scope(scope);
    f.get("store_wstar", c.embed.store_wstar);
    f.finish();
  }
  if (const json* d = top.sub("detection")) {
    JsonFields f(*d, "config.detection");
    std::string mode = "stored", dof = "mask";
    f.get("mode", mode);
    f.get("threshold", c.detection.threshold);
    f.get("dof", dof);
    f.finish();
    c.detection.mode = parse_detection_mode(mode);
    if (dof != "mask" && dof != "twice_mask") throw ConfigError("config.detection.dof must be 'mask' or 'twice_mask'");
    c.detection.dof = dof == "mask" ? DofConvention::kMaskCount : DofConvention::kTwiceMaskCount;
  }
  if (const json* t = top.sub("flow_training")) {
    JsonFields f(*t, "config.flow_training");
    auto& ft = c.flow_training;
    f.get("epochs", ft.epochs);
    f.get("batch", ft.batch);
    f.get("lr", ft.adam.lr);
    f.get("checkpoint_interval", ft.checkpoint_interval);
    f.get("power_iterations", ft.power_iterations);
    f.get("seed", ft.seed);
    f.get("lambda_2", ft.weights.l2);
    f.get("lambda_s", ft.weights.ssim);
    f.get("lambda_p", ft.weights.perceptual);
    f.get("lambda_n", ft.weights.spectral);
    if (const json* sc = f.sub("spectral_scale"); sc && !sc->is_null()) {
      if (!sc->is_number()) throw ConfigError("config.flow_training.spectral_scale: expected a number or null");
      ft.weights.spectral_scale = sc->get<double>();
    }
    f.get("hidden", ft.flow.hidden);
    f.get("blocks", ft.flow.blocks);
    f.get("lipschitz", ft.flow.lipschitz);
    f.finish();
  }
  top.get("jobs", c.jobs);
  top.finish();
  if (c.jobs == 0) throw ConfigError("config.jobs must be at least 1");
  return c;
}

ProjectConfig load_project_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return project_config_from_json(j);
}

}  // namespace wf::cli
