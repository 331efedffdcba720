// SPDX-License-Identifier: Apache-2.0
#include <exception>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "log.hpp"
#include "waterflow/error.hpp"
#include "waterflow/version.hpp"

using namespace wf::cli;

namespace {

int fail(const std::string& kind, const std::string& message) {
  Log::get().error(kind, message);
  std::cout << nlohmann::json({{"error", {{"kind", kind}, {"message", message}}}}).dump() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-space image watermarking with learned Fourier patterns"};
  app.set_version_flag("--version", wf::kVersion);
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config, "Project config JSON (flags override it)")->check(CLI::ExistingFile);
  app.add_option("--jobs", g.jobs, "Worker threads for per-image jobs");
  app.add_option("--seed", g.seed, "Run seed");
  app.add_flag("--quiet", g.quiet, "Suppress JSON log lines");

  DatasetOptions dataset;
  auto* ds = app.add_subcommand("dataset", "Generate the procedural toy dataset");
  ds->add_option("--out", dataset.out, "Output directory");
  ds->add_option("--count", dataset.count);
  ds->add_option("--seed", dataset.seed, "Dataset seed");
  ds->add_option("--families", dataset.families, "gradient, disk, checkerboard, stripes")->delimiter(',');
  ds->add_flag("--pnm", dataset.pnm, "Also write PGM previews");

  TrainDenoiserOptions td;
  auto* tds = app.add_subcommand("train-denoiser", "Train the toy noise predictor");
  tds->add_option("--out", td.out, "Checkpoint manifest path");
  tds->add_option("--data", td.data, "Directory of .ltns images (default: generated dataset)");
  tds->add_option("--steps", td.steps);
  tds->add_option("--batch", td.batch);
  tds->add_option("--lr", td.lr);

  TrainFlowOptions tf;
  auto* tfs = app.add_subcommand("train-flow", "Train the watermark flow pair");
  tfs->add_option("--denoiser", tf.denoiser);
  tfs->add_option("--out", tf.out, "Checkpoint directory");
  tfs->add_option("--data", tf.data);
  tfs->add_option("--lambda-n", tf.lambda_n);
  tfs->add_option("--radius", tf.radius);
  tfs->add_option("--key-seed", tf.key_seed);
  tfs->add_option("--epochs", tf.epochs);

  EmbedOptions em;
  auto* ems = app.add_subcommand("embed", "Watermark one image");
  ems->add_option("--input,--in", em.in)->required();
  ems->add_option("--out", em.out)->required();
  ems->add_option("--record", em.record, "Record path (default: <out>.record.json)");
  ems->add_option("--denoiser", em.denoiser);
  ems->add_option("--flow", em.flow, "Flow manifest, or 'identity'");
  ems->add_option("--radius", em.radius);
  ems->add_option("--ssim-threshold", em.ssim_threshold);
  ems->add_option("--key-seed", em.key_seed);
  ems->add_option("--scope", em.scope, "last or all");
  ems->add_option("--store-wstar", em.store_wstar, "Persist W* in the record (true/false)");
  ems->add_option("--channels", em.channels, "Stacked channels in a PGM input");

  AttackOptions at;
  auto* ats = app.add_subcommand("attack", "Apply one attack or a composite");
  ats->add_option("--input,--in", at.in)->required();
  ats->add_option("--out", at.out)->required();
  ats->add_option("--kind", at.kind, "brightness, contrast, jpeg, rotate90, gnoise, gblur, regen, all, all_no_rotation")
      ->required();
  ats->add_option("--denoiser", at.denoiser, "Needed for regen");
  ats->add_option("--seed", at.seed, "Seed for the stochastic stages");
  ats->add_option("--quality,--jpeg-quality", at.jpeg_quality);
  ats->add_option("--regen-level", at.regen_level);
  ats->add_option("--std,--noise-std", at.noise_std);
  ats->add_option("--channels", at.channels);

  DetectOptions dt;
  auto* dts = app.add_subcommand("detect", "Test an image for a watermark (exit 0 = detected, 1 = not)");
  dts->add_option("--input,--in", dt.in)->required();
  dts->add_option("--record", dt.record)->required();
  dts->add_option("--denoiser", dt.denoiser);
  dts->add_option("--flow", dt.flow, "Needed for --mode recompute");
  dts->add_option("--mode", dt.mode, "stored or recompute");
  dts->add_option("--threshold", dt.threshold);
  dts->add_flag("--twice-dof", dt.twice_dof, "Use q = 2|M|");
  dts->add_option("--channels", dt.channels);

  BenchOptions bench;
  auto* bs = app.add_subcommand("bench", "Benchmark harness");
  bs->require_subcommand(1);
  auto* br = bs->add_subcommand("run", "Run a benchmark spec");
  br->add_option("--spec", bench.spec)->required()->check(CLI::ExistingFile);
  auto* bw = bs->add_subcommand("sweep", "Sweep one axis of a benchmark spec");
  bw->add_option("--spec", bench.spec)->required()->check(CLI::ExistingFile);
  bw->add_option("--axis", bench.axis, "lambda_n, radius or ssim_threshold")->required();
  bw->add_option("--points", bench.points)->delimiter(',');

  ConvertOptions cv;
  auto* cvs = app.add_subcommand("convert", "Convert between .ltns and PGM/PPM");
  cvs->add_option("--in", cv.in)->required();
  cvs->add_option("--out", cv.out)->required();
  cvs->add_option("--channels", cv.channels, "Stacked channels in a PGM input");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }
  Log::get().set_quiet(g.quiet);

  try {
    if (*ds) return cmd_dataset(g, dataset);
    if (*tds) return cmd_train_denoiser(g, td);
    if (*tfs) return cmd_train_flow(g, tf);
    if (*ems) return cmd_embed(g, em);
    if (*ats) return cmd_attack(g, at);
    if (*dts) return cmd_detect(g, dt);
    if (*br) return cmd_bench_run(g, bench);
    if (*bw) return cmd_bench_sweep(g, bench);
    if (*cvs) return cmd_convert(g, cv);
  } catch (const wf::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return fail("usage", "no subcommand");
}
