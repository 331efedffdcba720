// SPDX-License-Identifier: Apache-2.0
#include "waterflow/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "waterflow/denoiser.hpp"
#include "waterflow/error.hpp"
#include "waterflow/fft.hpp"
#include "waterflow/json_fields.hpp"
#include "waterflow/ltns.hpp"
#include "waterflow/metrics.hpp"
#include "waterflow/rng.hpp"

namespace wf {

using nlohmann::json;

double wdr(const std::vector<double>& probs, double threshold) {
  if (probs.empty()) throw ContractError("wdr: empty report list");
  const auto hits = std::count_if(probs.begin(), probs.end(), [&](double p) { return p > threshold; });
  return static_cast<double>(hits) / static_cast<double>(probs.size());
}

double wdr(const std::vector<DetectionReport>& reports, double threshold) {
  std::vector<double> probs;
  probs.reserve(reports.size());
  for (const auto& r : reports) probs.push_back(r.detection_probability);
  return wdr(probs, threshold);
}

double auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  if (pos.empty() || neg.empty()) throw ContractError("auc: both score lists must be nonempty");
  // Rank-sum form of the Mann–Whitney statistic with mid-ranks for ties.
  std::vector<std::pair<double, int>> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) all.emplace_back(s, 1);
  for (double s : neg) all.emplace_back(s, 0);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 1) rank_sum += mid;
    i = j;
  }
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double tpr_at_fpr(const std::vector<double>& pos, const std::vector<double>& neg, double fpr) {
  if (pos.empty() || neg.empty()) throw ContractError("tpr_at_fpr: both score lists must be nonempty");
  if (!(fpr >= 0.0 && fpr <= 1.0)) throw ConfigError("tpr_at_fpr: fpr must be in [0, 1]");
  std::vector<double> sorted = neg;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto allowed = static_cast<std::size_t>(std::floor(fpr * static_cast<double>(neg.size()) + 1e-9));
  const double t = allowed < sorted.size() ? sorted[allowed] : -std::numeric_limits<double>::infinity();
  const auto hits = std::count_if(pos.begin(), pos.end(), [&](double s) { return s > t; });
  return static_cast<double>(hits) / static_cast<double>(pos.size());
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Spec (de)serialisation

namespace {

json dataset_json(const ToyDatasetConfig& d) {
  json fams = json::array();
  for (auto f : d.families) fams.push_back(family_name(f));
  return {{"seed", d.seed}, {"count", d.count}, {"families", fams}};
}

ToyDatasetConfig dataset_from(const json& j, const std::string& where, ToyDatasetConfig d) {
  JsonFields f(j, where);
  f.get("seed", d.seed);
  f.get("count", d.count);
  std::vector<std::string> fams;
  f.get("families", fams);
  if (!fams.empty()) {
    d.families.clear();
    for (const auto& n : fams) d.families.push_back(parse_family(n));
  }
  f.finish();
  if (d.count == 0) throw ConfigError(where + ".count must be positive");
  return d;
}

std::string dof_name(DofConvention d) { return d == DofConvention::kMaskCount ? "mask" : "twice_mask"; }

std::string mode_name(DetectionMode m) { return m == DetectionMode::kStored ? "stored" : "recompute"; }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

json to_json(const BenchmarkSpec& s) {
  json modes = json::array();
  for (auto m : s.modes) modes.push_back(mode_name(m));
  const auto& w = s.training.weights;
  json training = {{"epochs", s.training.epochs},
                   {"batch", s.training.batch},
                   {"lr", s.training.adam.lr},
                   {"checkpoint_interval", s.training.checkpoint_interval},
                   {"power_iterations", s.training.power_iterations},
                   {"seed", s.training.seed},
                   {"lambda_2", w.l2},
                   {"lambda_s", w.ssim},
                   {"lambda_p", w.perceptual},
                   {"lambda_n", w.spectral},
                   {"spectral_scale", w.spectral_scale ? json(*w.spectral_scale) : json(nullptr)},
                   {"hidden", s.training.flow.hidden},
                   {"blocks", s.training.flow.blocks},
                   {"lipschitz", s.training.flow.lipschitz}};
  const auto& a = s.attack_params;
  return {{"seed", s.seed},
          {"dataset", dataset_json(s.dataset)},
          {"train_dataset", dataset_json(s.train_dataset)},
          {"denoiser", s.denoiser.string()},
          {"flow", s.flow ? json(s.flow->string()) : json(nullptr)},
          {"embed",
           {{"key_seed", s.embed.key_seed},
            {"radius", s.embed.radius},
            {"ssim_threshold", s.embed.ssim_threshold},
            {"scope", scope_name(s.embed.scope)},
            {"store_wstar", s.embed.store_wstar}}},
          {"attacks", s.attacks},
          {"attack_params",
           {{"brightness", a.brightness},
            {"contrast", a.contrast},
            {"jpeg_quality", a.jpeg_quality},
            {"noise_std", a.noise_std},
            {"blur_ksize", a.blur_ksize},
            {"blur_sigma", a.blur_sigma},
            {"regen_level", a.regen_level}}},
          {"detection", {{"threshold", s.detection.threshold}, {"modes", modes}, {"dof", dof_name(s.detection.dof)}}},
          {"identity_baseline", s.identity_baseline},
          {"training", training},
          {"sweep",
           {{"lambda_n", s.sweep_lambda_n}, {"radius", s.sweep_radius}, {"ssim_threshold", s.sweep_ssim_threshold}}},
          {"output_dir", s.output_dir.string()},
          {"jobs", s.jobs}};
}

BenchmarkSpec benchmark_spec_from_json(const json& j) {
  BenchmarkSpec s;
  JsonFields top(j, "spec");
  top.get("seed", s.seed);
  if (const json* d = top.sub("dataset")) s.dataset = dataset_from(*d, "spec.dataset", s.dataset);
  if (const json* d = top.sub("train_dataset")) s.train_dataset = dataset_from(*d, "spec.train_dataset", s.train_dataset);
  std::string denoiser;
  top.get("denoiser", denoiser);
  s.denoiser = denoiser;
  if (const json* fl = top.sub("flow"); fl && !fl->is_null()) {
    if (!fl->is_string()) throw ConfigError("spec.flow: expected a path or null");
    s.flow = fl->get<std::string>();
  }
  if (const json* e = top.sub("embed")) {
    JsonFields f(*e, "spec.embed");
    f.get("key_seed", s.embed.key_seed);
    f.get("radius", s.embed.radius);
    f.get("ssim_threshold", s.embed.ssim_threshold);
    std::string scope = scope_name(s.embed.scope);
    f.get("scope", scope);
    s.embed.scope = parse_injection_scope(scope);
    f.get("store_wstar", s.embed.store_wstar);
    f.finish();
  }
  top.get("attacks", s.attacks);
  for (const auto& a : s.attacks) (void)expand_attack(a);
  if (const json* a = top.sub("attack_params")) {
    JsonFields f(*a, "spec.attack_params");
    auto& p = s.attack_params;
    f.get("brightness", p.brightness);
    f.get("contrast", p.contrast);
    f.get("jpeg_quality", p.jpeg_quality);
    f.get("noise_std", p.noise_std);
    f.get("blur_ksize", p.blur_ksize);
    f.get("blur_sigma", p.blur_sigma);
    f.get("regen_level", p.regen_level);
    f.finish();
  }
  if (const json* d = top.sub("detection")) {
    JsonFields f(*d, "spec.detection");
    f.get("threshold", s.detection.threshold);
    std::vector<std::string> modes;
    f.get("modes", modes);
    if (d->contains("modes")) {
      s.modes.clear();
      for (const auto& m : modes) s.modes.push_back(parse_detection_mode(m));
      if (s.modes.empty()) throw ConfigError("spec.detection.modes must not be empty");
    }
    std::string dof = dof_name(s.detection.dof);
    f.get("dof", dof);
    if (dof == "mask") {
      s.detection.dof = DofConvention::kMaskCount;
    } else if (dof == "twice_mask") {
      s.detection.dof = DofConvention::kTwiceMaskCount;
    } else {
      throw ConfigError("spec.detection.dof must be 'mask' or 'twice_mask'");
    }
    f.finish();
  }
  top.get("identity_baseline", s.identity_baseline);
  if (const json* t = top.sub("training")) {
    JsonFields f(*t, "spec.training");
    auto& c = s.training;
    f.get("epochs", c.epochs);
    f.get("batch", c.batch);
    f.get("lr", c.adam.lr);
    f.get("checkpoint_interval", c.checkpoint_interval);
    f.get("power_iterations", c.power_iterations);
    f.get("seed", c.seed);
    f.get("lambda_2", c.weights.l2);
    f.get("lambda_s", c.weights.ssim);
    f.get("lambda_p", c.weights.perceptual);
    f.get("lambda_n", c.weights.spectral);
    if (const json* sc = f.sub("spectral_scale"); sc && !sc->is_null()) {
      if (!sc->is_number()) throw ConfigError("spec.training.spectral_scale: expected a number or null");
      c.weights.spectral_scale = sc->get<double>();
    }
    f.get("hidden", c.flow.hidden);
    f.get("blocks", c.flow.blocks);
    f.get("lipschitz", c.flow.lipschitz);
    f.finish();
  }
  if (const json* sw = top.sub("sweep")) {
    JsonFields f(*sw, "spec.sweep");
    f.get("lambda_n", s.sweep_lambda_n);
    f.get("radius", s.sweep_radius);
    f.get("ssim_threshold", s.sweep_ssim_threshold);
    f.finish();
  }
  std::string out = s.output_dir.string();
  top.get("output_dir", out);
  s.output_dir = out;
  top.get("jobs", s.jobs);
  top.finish();
  if (s.jobs == 0) throw ConfigError("spec.jobs must be at least 1");
  if (!(s.detection.threshold >= 0.0 && s.detection.threshold < 1.0))
    throw ConfigError("spec.detection.threshold must be in [0, 1)");
  return s;
}

BenchmarkSpec load_benchmark_spec(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  BenchmarkSpec s = benchmark_spec_from_json(j);
  // Relative paths are taken relative to the spec file.
  const auto base = path.parent_path();
  auto resolve = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  resolve(s.denoiser);
  if (s.flow) resolve(*s.flow);
  resolve(s.output_dir);
  return s;
}

// ---------------------------------------------------------------------------
// Result table

const ResultRow* ResultTable::find(const std::string& variant, const std::string& mode,
                                   const std::string& attack) const {
  for (const auto& r : rows)
    if (r.variant == variant && r.mode == mode && r.attack == attack) return &r;
  return nullptr;
}

double ResultTable::mean_post_attack_auc(const std::string& variant, const std::string& mode) const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.variant != variant || r.mode != mode || r.attack == "none") continue;
    total += r.auc;
    ++n;
  }
  if (n == 0) throw ContractError("mean_post_attack_auc: no attacked rows for " + variant + "/" + mode);
  return total / static_cast<double>(n);
}

std::string ResultTable::csv() const {
  std::string out = "variant,mode,attack,n,wdr,auc,tpr_at_1fpr,psnr_mean,ssim_mean\n";
  for (const auto& r : rows) {
    out += r.variant + "," + r.mode + "," + r.attack + "," + std::to_string(r.n) + "," + fmt(r.wdr) + "," +
           fmt(r.auc) + "," + fmt(r.tpr_at_1fpr) + "," + fmt(r.psnr_mean) + "," + fmt(r.ssim_mean) + "\n";
  }
  return out;
}

std::string ResultTable::timing_csv() const {
  std::string out = "variant,image,inversion_s,generation_s,embed_total_s\n";
  for (const auto& t : timing) {
    out += t.variant + "," + std::to_string(t.image) + "," + fmt(t.timing.inversion_s) + "," +
           fmt(t.timing.generation_s) + "," + fmt(t.timing.total_s) + "\n";
  }
  return out;
}

json ResultTable::to_json() const {
  json rows_j = json::array();
  std::vector<std::pair<std::string, std::string>> groups;
  for (const auto& r : rows) {
    rows_j.push_back({{"variant", r.variant},
                      {"mode", r.mode},
                      {"attack", r.attack},
                      {"n", r.n},
                      {"wdr", r.wdr},
                      {"auc", r.auc},
                      {"tpr_at_1fpr", r.tpr_at_1fpr},
                      {"psnr_mean", std::isfinite(r.psnr_mean) ? json(r.psnr_mean) : json("identical")},
                      {"ssim_mean", r.ssim_mean}});
    std::pair<std::string, std::string> g{r.variant, r.mode};
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  }
  json summary = json::object();
  for (const auto& [v, m] : groups) {
    bool attacked = false;
    for (const auto& r : rows) attacked = attacked || (r.variant == v && r.mode == m && r.attack != "none");
    summary[v + "/" + m] = {{"mean_post_attack_auc", attacked ? json(mean_post_attack_auc(v, m)) : json(nullptr)}};
  }
  return {{"rows", rows_j}, {"summary", summary}};
}

// ---------------------------------------------------------------------------
// Benchmark driver

namespace {

struct Variant {
  std::string name;
  const FlowParams* flow;
};

Diffusion load_diffusion(const std::filesystem::path& path) {
  if (path.empty()) throw ConfigError("bench: no denoiser checkpoint given");
  if (!std::filesystem::exists(path)) throw ConfigError("bench: denoiser checkpoint not found: " + path.string());
  Diffusion d;
  auto params = load_denoiser(path, &d.sched);
  d.predictor = std::make_shared<ConvNetPredictor>(std::move(params));
  d.predictor_id = path.filename().string();
  return d;
}

FlowTrainConfig training_config(const BenchmarkSpec& spec, const Shape& shape) {
  FlowTrainConfig t = spec.training;
  t.radius = spec.embed.radius;
  t.scope = spec.embed.scope;
  t.flow.channels = shape.c;
  t.flow.h = shape.h;
  t.flow.w = shape.w;
  t.flow.seed = spec.training.seed;
  return t;
}

FlowParams obtain_flow(const BenchmarkSpec& spec, const Diffusion& diffusion, const TreeRingKey& key,
                       const std::optional<std::filesystem::path>& train_dir) {
  if (spec.flow) {
    if (!std::filesystem::exists(*spec.flow)) throw ConfigError("bench: flow checkpoint not found: " + spec.flow->string());
    nlohmann::json meta;
    FlowParams flow = load_flow(*spec.flow, &meta);
    // A flow trained against a different key or disk would silently degrade detection.
    if (meta.contains("key_seed") && meta.at("key_seed").get<std::uint64_t>() != spec.embed.key_seed)
      throw ConfigError("bench: flow checkpoint was trained with key_seed " + meta.at("key_seed").dump() +
                        ", spec uses " + std::to_string(spec.embed.key_seed));
    if (meta.contains("radius") && meta.at("radius").get<double>() != spec.embed.radius)
      throw ConfigError("bench: flow checkpoint was trained with radius " + meta.at("radius").dump());
    return flow;
  }
  const auto images = generate_toy_dataset(spec.train_dataset);
  FlowTrainConfig t = training_config(spec, spec.train_dataset.shape);
  t.output_dir = train_dir;
  return train_flow(images, diffusion, key, t).best;
}

// Per-image outcome: [variant][mode][attack] with attack 0 = "none".
struct Cell {
  double pos = 0.0;
  double neg = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

ResultTable evaluate(const BenchmarkSpec& spec, const Diffusion& diffusion, const TreeRingKey& key,
                     const FlowParams& trained) {
  const auto images = generate_toy_dataset(spec.dataset);
  const FlowParams identity = FlowParams::identity(trained.cfg);
  std::vector<Variant> variants{{"waterflow", &trained}};
  if (spec.identity_baseline) variants.push_back({"identity", &identity});
  std::vector<std::string> attacks{"none"};
  attacks.insert(attacks.end(), spec.attacks.begin(), spec.attacks.end());
  const std::size_t nv = variants.size(), nm = spec.modes.size(), na = attacks.size();

  std::vector<std::vector<Cell>> cells(images.size(), std::vector<Cell>(nv * nm * na));
  std::vector<std::vector<EmbedTiming>> timings(images.size(), std::vector<EmbedTiming>(nv));

  parallel_for(images.size(), spec.jobs, [&](std::size_t i) {
    const RealTensor& x0 = images[i];
    // Watermarked and original copies see the same attack randomness, so the
    // attacked originals are shared by every variant.
    auto attack_params = [&](std::size_t a) {
      AttackParams p = spec.attack_params;
      p.seed = derive_seed(derive_seed(spec.seed, i), a);
      return p;
    };
    std::vector<ComplexTensor> neg_spec;
    for (std::size_t a = 0; a < na; ++a) {
      const RealTensor neg_img = a == 0 ? x0 : apply_attack(x0, attacks[a], attack_params(a), &diffusion);
      neg_spec.push_back(recover_spectrum(neg_img, diffusion));
    }
    for (std::size_t v = 0; v < nv; ++v) {
      const FlowParams& flow = *variants[v].flow;
      const EmbedResult e = embed(x0, key, flow, diffusion, spec.embed, variants[v].name);
      timings[i][v] = e.timing;
      for (std::size_t a = 0; a < na; ++a) {
        const RealTensor pos_img = a == 0 ? e.image : apply_attack(e.image, attacks[a], attack_params(a), &diffusion);
        const ComplexTensor pos_spec = recover_spectrum(pos_img, diffusion);
        const double q_psnr = psnr(pos_img, x0);
        const double q_ssim = ssim(pos_img, x0);
        for (std::size_t m = 0; m < nm; ++m) {
          DetectionConfig dc = spec.detection;
          dc.mode = spec.modes[m];
          Cell& c = cells[i][(v * nm + m) * na + a];
          c.pos = detect_spectrum(pos_spec, e.record, &flow, dc).detection_probability;
          c.neg = detect_spectrum(neg_spec[a], e.record, &flow, dc).detection_probability;
          c.psnr = q_psnr;
          c.ssim = q_ssim;
        }
      }
    }
  });

  ResultTable table;
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t m = 0; m < nm; ++m)
      for (std::size_t a = 0; a < na; ++a) {
        std::vector<double> pos, neg;
        double psnr_sum = 0.0, ssim_sum = 0.0;
        for (std::size_t i = 0; i < images.size(); ++i) {
          const Cell& c = cells[i][(v * nm + m) * na + a];
          pos.push_back(c.pos);
          neg.push_back(c.neg);
          psnr_sum += c.psnr;
          ssim_sum += c.ssim;
        }
        const double n = static_cast<double>(images.size());
        table.rows.push_back({variants[v].name, mode_name(spec.modes[m]), attacks[a], images.size(),
                              wdr(pos, spec.detection.threshold), auc(pos, neg), tpr_at_fpr(pos, neg, 0.01),
                              psnr_sum / n, ssim_sum / n});
      }
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t i = 0; i < images.size(); ++i) table.timing.push_back({variants[v].name, i, timings[i][v]});
  return table;
}

void write_table(const ResultTable& table, const BenchmarkSpec& spec, const std::filesystem::path& dir) {
  write_file(dir / "results.csv", table.csv());
  json j = table.to_json();
  j["spec"] = to_json(spec);
  write_file(dir / "results.json", j.dump(2) + "\n");
  write_file(dir / "timing.csv", table.timing_csv());
}

}  // namespace

ResultTable run_benchmark(const BenchmarkSpec& spec, bool write_outputs) {
  if (spec.jobs == 0) throw ConfigError("bench: jobs must be at least 1");
  const Diffusion diffusion = load_diffusion(spec.denoiser);
  const Shape& s = spec.dataset.shape;
  const TreeRingKey key = tree_ring_key(spec.embed.key_seed, spec.embed.radius, s.h, s.w);
  std::optional<std::filesystem::path> train_dir;
  if (write_outputs) train_dir = spec.output_dir / "flow";
  const FlowParams flow = obtain_flow(spec, diffusion, key, train_dir);
  ResultTable table = evaluate(spec, diffusion, key, flow);
  if (write_outputs) write_table(table, spec, spec.output_dir);
  return table;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "lambda_n") return SweepAxis::kLambdaN;
  if (name == "radius") return SweepAxis::kRadius;
  if (name == "ssim_threshold") return SweepAxis::kSsimThreshold;
  throw ConfigError("sweep axis must be lambda_n, radius or ssim_threshold, got '" + name + "'");
}

std::string sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kLambdaN:
      return "lambda_n";
    case SweepAxis::kRadius:
      return "radius";
    case SweepAxis::kSsimThreshold:
      return "ssim_threshold";
  }
  return "unknown";
}

std::vector<SweepPoint> run_sweep(const BenchmarkSpec& spec, SweepAxis axis, const std::vector<double>& points,
                                  bool write_outputs) {
  if (points.size() < 2) throw ContractError("run_sweep: at least two axis points are required");
  const Diffusion diffusion = load_diffusion(spec.denoiser);
  const Shape& s = spec.dataset.shape;
  const std::string axis_name = sweep_axis_name(axis);

  // The s* axis shares one flow across points; the others retrain per point.
  std::optional<FlowParams> shared;
  if (axis == SweepAxis::kSsimThreshold) {
    const TreeRingKey key = tree_ring_key(spec.embed.key_seed, spec.embed.radius, s.h, s.w);
    std::optional<std::filesystem::path> dir;
    if (write_outputs) dir = spec.output_dir / "flow";
    shared = obtain_flow(spec, diffusion, key, dir);
  }

  std::vector<SweepPoint> out;
  for (std::size_t k = 0; k < points.size(); ++k) {
    BenchmarkSpec p = spec;
    p.identity_baseline = false;
    p.modes = {DetectionMode::kStored};
    const double value = points[k];
    switch (axis) {
      case SweepAxis::kLambdaN:
        p.training.weights.spectral = value;
        p.flow.reset();
        break;
      case SweepAxis::kRadius:
        p.embed.radius = value;
        p.flow.reset();
        break;
      case SweepAxis::kSsimThreshold:
        p.embed.ssim_threshold = value;
        break;
    }
    const auto dir = spec.output_dir / (axis_name + "_" + std::to_string(k));
    const TreeRingKey key = tree_ring_key(p.embed.key_seed, p.embed.radius, s.h, s.w);
    std::optional<std::filesystem::path> train_dir;
    if (write_outputs) train_dir = dir / "flow";
    const FlowParams flow = shared ? *shared : obtain_flow(p, diffusion, key, train_dir);
    SweepPoint pt;
    pt.value = value;
    pt.table = evaluate(p, diffusion, key, flow);
    const ResultRow* clean = pt.table.find("waterflow", "stored", "none");
    pt.psnr_mean = clean->psnr_mean;
    pt.clean_wdr = clean->wdr;
    pt.mean_post_attack_auc = p.attacks.empty() ? clean->auc : pt.table.mean_post_attack_auc("waterflow", "stored");
    if (write_outputs) write_table(pt.table, p, dir);
    out.push_back(std::move(pt));
  }

  if (write_outputs) {
    std::string csv = "axis,value,mean_post_attack_auc,psnr_mean,clean_wdr\n";
    json trend = json::array();
    for (const auto& pt : out) {
      csv += axis_name + "," + fmt(pt.value) + "," + fmt(pt.mean_post_attack_auc) + "," + fmt(pt.psnr_mean) + "," +
             fmt(pt.clean_wdr) + "\n";
      trend.push_back({{"value", pt.value},
                       {"mean_post_attack_auc", pt.mean_post_attack_auc},
                       {"psnr_mean", pt.psnr_mean},
                       {"clean_wdr", pt.clean_wdr}});
    }
    write_file(spec.output_dir / "sweep.csv", csv);
    write_file(spec.output_dir / "sweep.json", json({{"axis", axis_name}, {"points", trend}}).dump(2) + "\n");
  }
  return out;
}

}  // namespace wf
