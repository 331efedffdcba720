// SPDX-License-Identifier: Apache-2.0
#include "waterflow/embed.hpp"

#include <algorithm>
#include <chrono>

#include <nlohmann/json.hpp>

#include "waterflow/error.hpp"
#include "waterflow/fft.hpp"
#include "waterflow/ltns.hpp"
#include "waterflow/metrics.hpp"

namespace wf {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RealTensor clamp01(RealTensor x) {
  for (auto& v : x.data()) v = std::clamp(v, 0.0, 1.0);
  return x;
}

}  // namespace

LatentWatermark watermark_latent(const RealTensor& zT, const TreeRingKey& key, const CircularMask& mask,
                                 const FlowParams& flow, InjectionScope scope) {
  const auto& s = zT.shape();
  LatentWatermark out;
  out.injected = inject_tree_ring(fft2_centered(zT), key, mask, scope);
  out.wstar = apply_flow(out.injected, flow);
  out.embedded = masked_blend(out.injected.channel_tensor(s.c - 1), out.wstar, mask);
  out.latent = RealTensor(s);
  if (s.c > 1) {
    // Untouched channels are copied, not round-tripped, so they stay bit-exact.
    const RealTensor others = scope == InjectionScope::kLastChannel ? zT : ifft2_centered_real(out.injected);
    std::copy(others.data().begin(), others.data().begin() + static_cast<std::ptrdiff_t>((s.c - 1) * s.plane()),
              out.latent.data().begin());
  }
  const RealTensor last = ifft2_centered_real(out.embedded);
  std::copy(last.data().begin(), last.data().end(),
            out.latent.data().begin() + static_cast<std::ptrdiff_t>((s.c - 1) * s.plane()));
  return out;
}

ComplexTensor realized_wstar(const ComplexTensor& wstar, const CircularMask& mask) {
  const ComplexTensor sym = hermitian_part(wstar);
  ComplexTensor out(wstar.shape());
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (mask.bits[i] == 0.0) continue;
    out.re()[i] = sym.re()[i];
    out.im()[i] = sym.im()[i];
  }
  return out;
}

std::pair<RealTensor, double> adaptive_enhance(const RealTensor& x0, const RealTensor& xhat, double s_star) {
  require_same_shape(x0.shape(), xhat.shape(), "adaptive_enhance");
  if (!(s_star > 0.0 && s_star <= 1.0)) throw ConfigError("adaptive_enhance: SSIM threshold must be in (0, 1]");
  auto blend = [&](double gamma) {
    RealTensor out(x0.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = gamma * x0[i] + (1.0 - gamma) * xhat[i];
    return out;
  };
  if (ssim(xhat, x0) >= s_star) return {xhat, 0.0};
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ssim(blend(mid), x0) >= s_star) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  RealTensor out = blend(hi);
  // Guard against a non-monotone SSIM curve: γ = 1 reproduces x0 and always qualifies.
  if (ssim(out, x0) < s_star) return {x0, 1.0};
  return {std::move(out), hi};
}

EmbedResult embed(const RealTensor& x0, const TreeRingKey& key, const FlowParams& flow, const Diffusion& diffusion,
                  const EmbedConfig& cfg, const std::string& flow_id) {
  if (!diffusion.predictor) throw ConfigError("embed: no noise predictor loaded");
  const auto& s = x0.shape();
  const CircularMask mask = circular_mask(s.h, s.w, cfg.radius);
  if (key.pattern.shape() != Shape{1, s.h, s.w}) throw DimensionError("embed: key plane does not match image");

  EmbedResult res;
  const auto t0 = Clock::now();
  const RealTensor zT = diffusion.invert(image_to_latent(x0));
  res.timing.inversion_s = seconds_since(t0);

  LatentWatermark lw = watermark_latent(zT, key, mask, flow, cfg.scope);

  const auto t1 = Clock::now();
  res.generated = clamp01(latent_to_image(diffusion.generate(lw.latent)));
  res.timing.generation_s = seconds_since(t1);

  auto [image, gamma] = adaptive_enhance(x0, res.generated, cfg.ssim_threshold);
  res.image = std::move(image);
  res.timing.total_s = seconds_since(t0);

  auto& r = res.record;
  r.key_seed = key.seed;
  r.radius = key.radius;
  r.scope = cfg.scope;
  r.flow_id = flow_id;
  if (cfg.store_wstar) r.wstar = realized_wstar(lw.wstar, mask);
  r.gamma = gamma;
  r.ssim_threshold = cfg.ssim_threshold;
  r.schedule_id = diffusion.schedule_id;
  r.predictor_id = diffusion.predictor_id;
  r.h = s.h;
  r.w = s.w;
  res.wstar_raw = std::move(lw.wstar);
  return res;
}

void save_record(const std::filesystem::path& json_path, const WatermarkRecord& record) {
  nlohmann::json j = {
      {"key_seed", record.key_seed},
      {"radius", record.radius},
      {"scope", scope_name(record.scope)},
      {"flow_id", record.flow_id},
      {"gamma", record.gamma},
      {"ssim_threshold", record.ssim_threshold},
      {"schedule_id", record.schedule_id},
      {"predictor_id", record.predictor_id},
      {"plane", {record.h, record.w}},
  };
  if (record.wstar) {
    auto blob = json_path;
    blob.replace_extension(".wstar.ltns");
    write_ltns(blob, *record.wstar);
    j["wstar"] = blob.filename().string();
  } else {
    j["wstar"] = nullptr;
  }
  write_file(json_path, j.dump(2) + "\n");
}

WatermarkRecord load_record(const std::filesystem::path& json_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(json_path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(json_path.string() + ": " + e.what());
  }
  WatermarkRecord r;
  try {
    r.key_seed = j.at("key_seed").get<std::uint64_t>();
    r.radius = j.at("radius").get<double>();
    r.scope = parse_injection_scope(j.at("scope").get<std::string>());
    r.flow_id = j.value("flow_id", "");
    r.gamma = j.at("gamma").get<double>();
    r.ssim_threshold = j.at("ssim_threshold").get<double>();
    r.schedule_id = j.value("schedule_id", "");
    r.predictor_id = j.value("predictor_id", "");
    r.h = j.at("plane")[0].get<std::size_t>();
    r.w = j.at("plane")[1].get<std::size_t>();
    if (!j.at("wstar").is_null()) r.wstar = read_ltns_complex(json_path.parent_path() / j.at("wstar").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(json_path.string() + ": malformed watermark record: " + e.what());
  }
  return r;
}

}  // namespace wf
