#include "pipeline.hpp"
#include "run_config.hpp"

#include <boxuq/jaccard.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <stdexcept>

namespace boxuq::cli {

namespace {

// Shared lattice holding the supports of both posteriors.
GridSpec union_spec(const LabelPosterior& a, const LabelPosterior& b,
                    double resolution, const RasterOptions& raster) {
  const GridSpec sa =
      default_grid_spec(a, resolution, raster.samples, raster.seed);
  const GridSpec sb =
      default_grid_spec(b, resolution, raster.samples, raster.seed);
  const Eigen::Vector2d lo = sa.origin.cwiseMin(sb.origin);
  const Eigen::Vector2d hi = sa.max_corner().cwiseMax(sb.max_corner());
  return GridSpec::cover(lo, hi, resolution);
}

double jiou_both_probabilistic(const DetectionRecord& det,
                               const LabelPosterior& label_posterior,
                               double resolution,
                               const RasterOptions& raster) {
  const LabelPosterior det_posterior = detection_posterior(det);
  const GridSpec spec =
      union_spec(det_posterior, label_posterior, resolution, raster);
  const SpatialGrid a = rasterize_pg(det_posterior, spec, raster);
  const SpatialGrid b = rasterize_pg(label_posterior, spec, raster);
  return jiou_grids(a, b).value;
}

}  // namespace

int cmd_jiou(const RunConfig& cfg) {
  if (cfg.detections.empty())
    throw std::invalid_argument("detections path is required");
  const std::vector<InferredObject> objects = infer_objects(cfg);
  const EvalSet set =
      make_eval_set(objects, read_detections_jsonl(cfg.detections), cfg.cls);

  // Pair each detection with the best same-frame same-class label by plain
  // IoU; any positive overlap qualifies.
  EvalOptions match_opts;
  match_opts.metric = MatchMetric::kIou;
  match_opts.threshold = 1e-9;
  match_opts.resolution = cfg.resolution;
  match_opts.raster = raster_options(cfg);
  const MatchResult match = match_detections(set, match_opts);

  std::filesystem::create_directories(cfg.out);
  const std::string path =
      (std::filesystem::path(cfg.out) / "jiou.csv").string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(10);
  out << "frame,det_id,label_id,score,iou,jiou_label,jiou_both\n";

  for (std::size_t d = 0; d < set.detections.size(); ++d) {
    const DetectionRecord& det = set.detections[d];
    const int label = match.detection_match[d];
    double iou = 0.0, jiou_label = 0.0, jiou_both = 0.0;
    if (label >= 0) {
      const LabelPosterior& posterior = set.label_posteriors[label];
      iou = iou_bev(det.box, set.labels[label].box);
      jiou_label = jiou_box_vs_posterior(det.box, posterior, cfg.resolution,
                                         match_opts.raster)
                       .value;
      jiou_both = jiou_both_probabilistic(det, posterior, cfg.resolution,
                                          match_opts.raster);
    }
    out << det.frame << ',' << d << ',' << label << ',' << det.score << ','
        << iou << ',' << jiou_label << ',' << jiou_both << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
  std::cerr << "wrote " << set.detections.size() << " rows to " << path
            << '\n';
  return 0;
}

}  // namespace boxuq::cli
