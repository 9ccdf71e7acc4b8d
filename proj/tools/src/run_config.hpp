#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace boxuq::cli {

// Batch-run parameters shared by every subcommand. Defaults mirror the
// library defaults: sigma 0.2 m, unit prior weight, 0.1 m grids, 1024 Monte
// Carlo samples over a 16x16 interior lattice.
struct RunConfig {
  std::string dataset;               // KITTI-layout root directory
  std::vector<std::string> frames;   // frame ids, e.g. 000012
  double weight = 1.0;               // prior weight w
  std::string sigma = "0.2";         // measurement noise [m], or "em"
  double resolution = 0.1;           // grid resolution [m]
  int interior = 16;                 // interior lattice size per axis
  int samples = 1024;                // Monte Carlo samples
  std::uint64_t seed = 0;            // seeds every stochastic stage
  std::string out = "out";           // output directory
  std::string report = "recall";     // eval report kind
  std::string metric = "iou";        // matching metric: iou | jiou
  std::vector<double> thresholds = {0.1, 0.2, 0.3, 0.4, 0.5,
                                    0.6, 0.7, 0.8, 0.9};
  std::string object;                // render selector: frame[:index]
  std::string mode = "pg";           // render mode: pg | pdq
  std::string cls = "Car";           // class filter; empty keeps all
  double min_length = 0.0;           // drop labels shorter than this [m]
  double bad_fraction = 0.3;         // corrupted-label fraction for roc
  std::string detections;            // detections JSONL path
};

int cmd_infer(const RunConfig& cfg);
int cmd_render(const RunConfig& cfg);
int cmd_jiou(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);

}  // namespace boxuq::cli
