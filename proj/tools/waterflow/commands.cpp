// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>

#include "log.hpp"
#include "waterflow/attacks.hpp"
#include "waterflow/bench.hpp"
#include "waterflow/error.hpp"
#include "waterflow/image_io.hpp"
#include "waterflow/ltns.hpp"
#include "waterflow/metrics.hpp"
#include "waterflow/version.hpp"

namespace wf::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Emits the reproducibility header: enough to replay the run exactly.
void start(const std::string& command, const ProjectConfig& cfg, const json& params) {
  const json effective = {{"config", to_json(cfg)}, {"params", params}};
  Log::get().event("start", {{"command", command},
                             {"version", kVersion},
                             {"seed", cfg.seed},
                             {"config_hash", fnv1a_hex(effective.dump())},
                             {"config", effective["config"]},
                             {"params", params}});
}

fs::path or_default(const std::string& given, const fs::path& fallback) { return given.empty() ? fallback : fs::path(given); }

Diffusion load_diffusion(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("denoiser checkpoint not found: " + path.string());
  Diffusion d;
  d.predictor = std::make_shared<ConvNetPredictor>(load_denoiser(path, &d.sched));
  d.predictor_id = path.filename().string();
  return d;
}

struct LoadedFlow {
  FlowParams params;
  json meta = json::object();
  std::string id;
};

LoadedFlow load_flow_arg(const std::string& arg, const ProjectConfig& cfg, const Shape& shape) {
  if (arg == "identity") {
    FlowConfig fc = cfg.flow_training.flow;
    fc.channels = shape.c;
    fc.h = shape.h;
    fc.w = shape.w;
    return {FlowParams::identity(fc), json::object(), "identity"};
  }
  const fs::path p = or_default(arg, cfg.checkpoints / "flow" / "flow_best.json");
  if (!fs::exists(p)) throw ConfigError("flow checkpoint not found: " + p.string());
  LoadedFlow f;
  f.params = load_flow(p, &f.meta);
  f.id = p.filename().string();
  return f;
}

std::vector<RealTensor> load_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("not a dataset directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".ltns") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no .ltns images in " + dir.string());
  std::vector<RealTensor> out;
  for (const auto& f : files) out.push_back(read_ltns_real(f));
  return out;
}

std::vector<RealTensor> training_images(const std::string& data, const ProjectConfig& cfg) {
  if (!data.empty()) return load_images(data);
  return generate_toy_dataset(cfg.dataset);
}

json report_json(const DetectionReport& r) {
  return {{"sigma2", r.sigma2},
          {"sigma2_clamped", r.sigma2_clamped},
          {"eta", r.eta},
          {"q", r.q},
          {"lambda", r.lambda},
          {"p_value", r.p_value},
          {"detection_probability", r.detection_probability},
          {"decision", r.decision}};
}

json psnr_json(double db) { return psnr_is_identical(db) ? json("identical") : json(db); }

}  // namespace

ProjectConfig resolve_config(const GlobalOptions& g) {
  ProjectConfig cfg = g.config.empty() ? ProjectConfig{} : load_project_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.jobs) {
    if (*g.jobs == 0) throw ConfigError("--jobs must be at least 1");
    cfg.jobs = *g.jobs;
  }
  return cfg;
}

int cmd_dataset(const GlobalOptions& g, const DatasetOptions& o) {
  ProjectConfig cfg = resolve_config(g);
  if (o.count) cfg.dataset.count = *o.count;
  if (o.seed) cfg.dataset.seed = *o.seed;
  if (!o.families.empty()) {
    cfg.dataset.families.clear();
    for (const auto& f : o.families) cfg.dataset.families.push_back(parse_family(f));
  }
  const fs::path out = or_default(o.out, cfg.outputs / "dataset");
  start("dataset", cfg, {{"out", out.string()}, {"pnm", o.pnm}});
  const auto images = generate_toy_dataset(cfg.dataset);
  json fams = json::array();
  for (auto f : cfg.dataset.families) fams.push_back(family_name(f));
  for (std::size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%03zu", i);
    write_ltns(out / (std::string(name) + ".ltns"), images[i]);
    if (o.pnm) write_pnm(out / (std::string(name) + ".pgm"), images[i]);
  }
  const auto& s = cfg.dataset.shape;
  write_file(out / "dataset.json", json({{"seed", cfg.dataset.seed},
                                         {"count", cfg.dataset.count},
                                         {"families", fams},
                                         {"shape", {s.c, s.h, s.w}}})
                                       .dump(2) +
                                       "\n");
  Log::get().event("done", {{"images", images.size()}, {"out", out.string()}});
  return 0;
}

int cmd_train_denoiser(const GlobalOptions& g, const TrainDenoiserOptions& o) {
  ProjectConfig cfg = resolve_config(g);
  auto& t = cfg.diffusion.train;
  if (o.steps) t.steps = *o.steps;
  if (o.batch) t.batch = *o.batch;
  if (o.lr) t.lr = *o.lr;
  const fs::path out = or_default(o.out, cfg.checkpoints / "denoiser.json");
  start("train-denoiser", cfg, {{"out", out.string()}, {"data", o.data}});
  const auto images = training_images(o.data, cfg);
  const NoiseSchedule sched = make_schedule(cfg.diffusion.T, cfg.diffusion.beta_start, cfg.diffusion.beta_end);
  const auto res = train_denoiser(images, sched, t);
  for (std::size_t i = 0; i < res.loss_history.size(); i += 100)
    Log::get().event("denoiser_step", {{"step", i}, {"loss", res.loss_history[i]}});
  save_denoiser(out, res.params, sched,
                {{"initial_loss", res.initial_loss}, {"final_loss", res.final_loss}, {"steps", t.steps},
                 {"seed", t.seed}});
  Log::get().event("done", {{"checkpoint", out.string()}, {"initial_loss", res.initial_loss},
                            {"final_loss", res.final_loss}});
  return 0;
}

int cmd_train_flow(const GlobalOptions& g, const TrainFlowOptions& o) {
  ProjectConfig cfg = resolve_config(g);
  if (o.lambda_n) cfg.flow_training.weights.spectral = *o.lambda_n;
  if (o.radius) cfg.embed.radius = *o.radius;
  if (o.key_seed) cfg.embed.key_seed = *o.key_seed;
  if (o.epochs) cfg.flow_training.epochs = *o.epochs;
  const fs::path den = or_default(o.denoiser, cfg.checkpoints / "denoiser.json");
  const fs::path out = or_default(o.out, cfg.checkpoints / "flow");
  start("train-flow", cfg, {{"denoiser", den.string()}, {"out", out.string()}, {"data", o.data}});
  const Diffusion diffusion = load_diffusion(den);
  const auto images = training_images(o.data, cfg);
  const Shape s = images.front().shape();
  const TreeRingKey key = tree_ring_key(cfg.embed.key_seed, cfg.embed.radius, s.h, s.w);
  FlowTrainConfig t = cfg.flow_training;
  t.radius = cfg.embed.radius;
  t.scope = cfg.embed.scope;
  t.output_dir = out;
  const auto res = train_flow(images, diffusion, key, t);
  for (const auto& ck : res.checkpoints) Log::get().event("flow_checkpoint", {{"step", ck.step}, {"loss", ck.loss}});
  Log::get().event("done", {{"best", (out / "flow_best.json").string()},
                            {"best_step", res.best_checkpoint.step},
                            {"best_loss", res.best_checkpoint.loss},
                            {"initial_loss", res.initial_loss},
                            {"steps", res.steps}});
  return 0;
}

int cmd_embed(const GlobalOptions& g, const EmbedOptions& o) {
  ProjectConfig cfg = resolve_config(g);
  const RealTensor x0 = read_image(o.in, o.channels);
  const fs::path den = or_default(o.denoiser, cfg.checkpoints / "denoiser.json");
  const LoadedFlow flow = load_flow_arg(o.flow, cfg, x0.shape());
  // Precedence: flag, then the key the flow was trained with, then the config.
  EmbedConfig ec = cfg.embed;
  if (flow.meta.contains("key_seed")) ec.key_seed = flow.meta.at("key_seed").get<std::uint64_t>();
  if (flow.meta.contains("radius")) ec.radius = flow.meta.at("radius").get<double>();
  if (o.key_seed) ec.key_seed = *o.key_seed;
  if (o.radius) ec.radius = *o.radius;
  if (o.ssim_threshold) ec.ssim_threshold = *o.ssim_threshold;
  if (o.scope) ec.scope = parse_injection_scope(*o.scope);
  if (o.store_wstar) ec.store_wstar = *o.store_wstar;
  cfg.embed = ec;
  fs::path record = o.record.empty() ? fs::path(o.out).replace_extension(".record.json") : fs::path(o.record);
  start("embed", cfg, {{"in", o.in}, {"out", o.out}, {"record", record.string()}, {"denoiser", den.string()},
                       {"flow", flow.id}});
  const Diffusion diffusion = load_diffusion(den);
  const Shape& s = x0.shape();
  const TreeRingKey key = tree_ring_key(ec.key_seed, ec.radius, s.h, s.w);
  const EmbedResult r = embed(x0, key, flow.params, diffusion, ec, flow.id);
  write_image(o.out, r.image);
  save_record(record, r.record);
  const json summary = {{"out", o.out},
                        {"record", record.string()},
                        {"gamma", r.record.gamma},
                        {"psnr", psnr_json(psnr(r.image, x0))},
                        {"ssim", ssim(r.image, x0)},
                        {"inversion_s", r.timing.inversion_s},
                        {"generation_s", r.timing.generation_s},
                        {"total_s", r.timing.total_s}};
  std::cout << summary.dump() << "\n";
  Log::get().event("done", summary);
  return 0;
}

int cmd_attack(const GlobalOptions& g, const AttackOptions& o) {
  ProjectConfig cfg = resolve_config(g);
  AttackParams p;
  p.seed = o.seed ? *o.seed : cfg.seed;
  if (o.jpeg_quality) p.jpeg_quality = *o.jpeg_quality;
  if (o.regen_level) p.regen_level = *o.regen_level;
  if (o.noise_std) p.noise_std = *o.noise_std;
  const auto kinds = expand_attack(o.kind);
  const bool needs_model = std::find(kinds.begin(), kinds.end(), AttackKind::kRegen) != kinds.end();
  const fs::path den = or_default(o.denoiser, cfg.checkpoints / "denoiser.json");
  start("attack", cfg, {{"in", o.in}, {"out", o.out}, {"kind", o.kind}, {"seed", p.seed},
                        {"jpeg_quality", p.jpeg_quality}, {"regen_level", p.regen_level}, {"noise_std", p.noise_std},
                        {"denoiser", needs_model ? json(den.string()) : json(nullptr)}});
  const RealTensor x = read_image(o.in, o.channels);
  std::optional<Diffusion> diffusion;
  if (needs_model) diffusion = load_diffusion(den);
  const RealTensor y = composite(x, kinds, p, diffusion ? &*diffusion : nullptr);
  write_image(o.out, y);
  Log::get().event("done", {{"out", o.out}, {"psnr", psnr_json(psnr(y, x))}});
  return 0;
}

int cmd_detect(const GlobalOptions& g, const DetectOptions& o) {
  ProjectConfig cfg = resolve_config(g);
  if (o.mode) cfg.detection.mode = parse_detection_mode(*o.mode);
  if (o.threshold) cfg.detection.threshold = *o.threshold;
  if (o.twice_dof) cfg.detection.dof = DofConvention::kTwiceMaskCount;
  const fs::path den = or_default(o.denoiser, cfg.checkpoints / "denoiser.json");
  start("detect", cfg, {{"in", o.in}, {"record", o.record}, {"denoiser", den.string()}, {"flow", o.flow}});
  const RealTensor x = read_image(o.in, o.channels);
  const WatermarkRecord record = load_record(o.record);
  const Diffusion diffusion = load_diffusion(den);
  std::optional<LoadedFlow> flow;
  if (cfg.detection.mode == DetectionMode::kRecompute) flow = load_flow_arg(o.flow, cfg, x.shape());
  const DetectionReport r = detect(x, record, diffusion, flow ? &flow->params : nullptr, cfg.detection);
  const json out = report_json(r);
  std::cout << out.dump() << "\n";
  Log::get().event("done", out);
  return r.decision ? 0 : 1;
}

int cmd_bench_run(const GlobalOptions& g, const BenchOptions& o) {
  ProjectConfig cfg = resolve_config(g);
  BenchmarkSpec spec = load_benchmark_spec(o.spec);
  if (g.jobs) spec.jobs = *g.jobs;
  start("bench run", cfg, {{"spec", to_json(spec)}});
  const ResultTable t = run_benchmark(spec);
  json summary = t.to_json()["summary"];
  Log::get().event("done", {{"out", spec.output_dir.string()}, {"summary", summary}});
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_bench_sweep(const GlobalOptions& g, const BenchOptions& o) {
  ProjectConfig cfg = resolve_config(g);
  BenchmarkSpec spec = load_benchmark_spec(o.spec);
  if (g.jobs) spec.jobs = *g.jobs;
  const SweepAxis axis = parse_sweep_axis(o.axis);
  std::vector<double> points = o.points;
  if (points.empty()) {
    switch (axis) {
      case SweepAxis::kLambdaN:
        points = spec.sweep_lambda_n;
        break;
      case SweepAxis::kRadius:
        points = spec.sweep_radius;
        break;
      case SweepAxis::kSsimThreshold:
        points = spec.sweep_ssim_threshold;
        break;
    }
  }
  start("bench sweep", cfg, {{"spec", to_json(spec)}, {"axis", o.axis}, {"points", points}});
  const auto pts = run_sweep(spec, axis, points);
  json trend = json::array();
  for (const auto& p : pts)
    trend.push_back({{"value", p.value},
                     {"mean_post_attack_auc", p.mean_post_attack_auc},
                     {"psnr_mean", p.psnr_mean},
                     {"clean_wdr", p.clean_wdr}});
  Log::get().event("done", {{"out", spec.output_dir.string()}, {"trend", trend}});
  std::cout << json({{"axis", o.axis}, {"points", trend}}).dump() << "\n";
  return 0;
}

int cmd_convert(const GlobalOptions& g, const ConvertOptions& o) {
  ProjectConfig cfg = resolve_config(g);
  start("convert", cfg, {{"in", o.in}, {"out", o.out}, {"channels", o.channels}});
  write_image(o.out, read_image(o.in, o.channels));
  Log::get().event("done", {{"out", o.out}});
  return 0;
}

}  // namespace wf::cli
