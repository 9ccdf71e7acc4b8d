#include "run_config.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>

int main(int argc, char** argv) {
  boxuq::cli::RunConfig cfg;

  CLI::App app{
      "boxuq: label-uncertainty inference, spatial rendering and "
      "probabilistic IoU evaluation for LiDAR bounding boxes"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_config("--config")
      ->description("key = value file; flags override file values");

  app.add_option("--dataset", cfg.dataset,
                 "dataset root with velodyne/, label_2/ and calib/");
  app.add_option("--frames", cfg.frames, "comma separated frame ids")
      ->delimiter(',');
  app.add_option("--weight", cfg.weight, "prior weight w")
      ->check(CLI::PositiveNumber);
  app.add_option("--sigma", cfg.sigma,
                 "measurement noise [m], or \"em\" to fit it");
  app.add_option("--resolution", cfg.resolution, "grid resolution [m]")
      ->check(CLI::PositiveNumber);
  app.add_option("--interior", cfg.interior,
                 "interior lattice size per axis")
      ->check(CLI::PositiveNumber);
  app.add_option("--samples", cfg.samples, "Monte Carlo samples")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "seed for every stochastic stage");
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--report", cfg.report,
                 "eval report: recall, alignment, roc or corner-tv");
  app.add_option("--metric", cfg.metric, "matching metric")
      ->check(CLI::IsMember({"iou", "jiou"}));
  app.add_option("--thresholds", cfg.thresholds,
                 "comma separated match thresholds")
      ->delimiter(',');
  app.add_option("--object", cfg.object, "render selector frame[:index]");
  app.add_option("--mode", cfg.mode, "render mode")
      ->check(CLI::IsMember({"pg", "pdq"}));
  app.add_option("--class", cfg.cls, "class filter; empty keeps all");
  app.add_option("--min-length", cfg.min_length,
                 "drop labels shorter than this [m]")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--bad-fraction", cfg.bad_fraction,
                 "corrupted-label fraction for the roc report")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--detections", cfg.detections, "detections JSONL path");

  CLI::App* infer =
      app.add_subcommand("infer", "write per-object box posteriors");
  CLI::App* render =
      app.add_subcommand("render", "rasterize one object's spatial density");
  CLI::App* jiou =
      app.add_subcommand("jiou", "per-detection IoU and JIoU table");
  CLI::App* eval = app.add_subcommand("eval", "evaluation reports");
  for (CLI::App* sub : {infer, render, jiou, eval}) sub->fallthrough();
  // Detections may also be given as a positional after the subcommand.
  jiou->add_option("detections_file", cfg.detections, "detections JSONL path");
  eval->add_option("detections_file", cfg.detections, "detections JSONL path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (infer->parsed()) return boxuq::cli::cmd_infer(cfg);
    if (render->parsed()) return boxuq::cli::cmd_render(cfg);
    if (jiou->parsed()) return boxuq::cli::cmd_jiou(cfg);
    if (eval->parsed()) return boxuq::cli::cmd_eval(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
