// SPDX-License-Identifier: Apache-2.0
// Fixtures shared by the unit tests.
#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "waterflow/dataset.hpp"
#include "waterflow/denoiser.hpp"
#include "waterflow/diffusion.hpp"
#include "waterflow/rng.hpp"

namespace testsupport {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("waterflow_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline wf::Diffusion linear_diffusion(double slope = 0.1) {
  wf::Diffusion d;
  d.sched = wf::make_schedule(50, 1e-4, 0.02);
  d.predictor = std::make_shared<wf::LinearPredictor>(slope);
  d.predictor_id = "linear";
  return d;
}

/// Small trained denoiser, built once per process (about 15 s).
inline const wf::Diffusion& trained_diffusion() {
  static const wf::Diffusion d = [] {
    wf::ToyDatasetConfig dc;
    dc.seed = 0;
    dc.count = 32;
    const auto images = wf::generate_toy_dataset(dc);
    wf::Diffusion out;
    out.sched = wf::make_schedule(50, 1e-4, 0.02);
    wf::DenoiserTrainConfig tc;
    tc.steps = 400;
    const auto res = wf::train_denoiser(images, out.sched, tc);
    out.predictor = std::make_shared<wf::ConvNetPredictor>(res.params);
    out.predictor_id = "test-convnet";
    return out;
  }();
  return d;
}

}  // namespace testsupport

#include "waterflow/flow.hpp"

namespace testsupport {

/// Writes the shared trained denoiser to `dir/den.json` and returns the path.
inline std::filesystem::path save_trained_denoiser(const std::filesystem::path& dir) {
  const auto& d = trained_diffusion();
  const auto& net = dynamic_cast<const wf::ConvNetPredictor&>(*d.predictor);
  const auto path = dir / "den.json";
  wf::save_denoiser(path, net.params(), d.sched);
  return path;
}

/// Identity flow checkpoint tagged with the key it goes with.
inline std::filesystem::path save_identity_flow(const std::filesystem::path& dir, std::uint64_t key_seed, double radius) {
  wf::FlowConfig fc;
  const auto path = dir / "flow_identity.json";
  wf::save_flow(path, wf::FlowParams::identity(fc), {{"key_seed", key_seed}, {"radius", radius}});
  return path;
}

}  // namespace testsupport
