#include "pipeline.hpp"
#include "run_config.hpp"

#include <boxuq/eval.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace boxuq::cli {

namespace {

// The LiDAR sits at the ground-frame origin.
const Eigen::Vector2d kObserver = Eigen::Vector2d::Zero();

EvalOptions eval_options(const RunConfig& cfg, double threshold) {
  EvalOptions opts;
  opts.metric = cfg.metric == "jiou" ? MatchMetric::kJiou : MatchMetric::kIou;
  opts.threshold = threshold;
  opts.resolution = cfg.resolution;
  opts.raster = raster_options(cfg);
  return opts;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out) / name).string();
}

std::vector<DetectionRecord> load_detections(const RunConfig& cfg) {
  if (cfg.detections.empty())
    throw std::invalid_argument("detections path is required for --report " +
                                cfg.report);
  return read_detections_jsonl(cfg.detections);
}

int report_recall(const RunConfig& cfg,
                  const std::vector<InferredObject>& objects) {
  const EvalSet set = make_eval_set(objects, load_detections(cfg), cfg.cls);
  std::vector<double> thresholds = cfg.thresholds;
  std::sort(thresholds.begin(), thresholds.end());

  EvalOptions iou_opts = eval_options(cfg, 0.0);
  iou_opts.metric = MatchMetric::kIou;
  EvalOptions jiou_opts = iou_opts;
  jiou_opts.metric = MatchMetric::kJiou;
  const std::vector<double> recall_iou = recall_sweep(set, iou_opts, thresholds);
  const std::vector<double> recall_jiou =
      recall_sweep(set, jiou_opts, thresholds);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < thresholds.size(); ++i)
    rows.push_back({thresholds[i], recall_iou[i], recall_jiou[i]});
  write_csv(out_path(cfg, "recall.csv"),
            {"threshold", "recall_iou", "recall_jiou"}, rows);
  write_svg_plot(out_path(cfg, "recall.svg"), "Recall vs match threshold",
                 "threshold", "recall",
                 {{"IoU", thresholds, recall_iou},
                  {"JIoU", thresholds, recall_jiou}});

  const double mid = thresholds[thresholds.size() / 2];
  iou_opts.threshold = mid;
  jiou_opts.threshold = mid;
  std::cout << "ap_iou " << average_precision(set, iou_opts) << '\n'
            << "ap_jiou " << average_precision(set, jiou_opts) << '\n'
            << "ap_threshold " << mid << '\n';
  std::cerr << "wrote " << out_path(cfg, "recall.csv") << " and "
            << out_path(cfg, "recall.svg") << '\n';
  return 0;
}

int report_alignment(const RunConfig& cfg,
                     const std::vector<InferredObject>& objects) {
  const EvalSet set = make_eval_set(objects, load_detections(cfg), cfg.cls);
  std::vector<double> thresholds = cfg.thresholds;
  std::sort(thresholds.begin(), thresholds.end());

  std::vector<std::vector<double>> rows;
  std::vector<double> origin, center, corner;
  for (const double t : thresholds) {
    const AlignmentAblation ablation =
        alignment_ablation(set, eval_options(cfg, t), kObserver);
    rows.push_back({t, ablation.ap_origin, ablation.ap_center,
                    ablation.ap_corner, ablation.center_delta(),
                    ablation.corner_delta()});
    origin.push_back(ablation.ap_origin);
    center.push_back(ablation.ap_center);
    corner.push_back(ablation.ap_corner);
  }
  write_csv(out_path(cfg, "alignment.csv"),
            {"threshold", "ap_origin", "ap_center", "ap_corner",
             "delta_center", "delta_corner"},
            rows);
  write_svg_plot(out_path(cfg, "alignment.svg"), "Alignment ablation",
                 "threshold", "AP",
                 {{"origin", thresholds, origin},
                  {"center-aligned", thresholds, center},
                  {"corner-aligned", thresholds, corner}});
  std::cerr << "wrote " << out_path(cfg, "alignment.csv") << " and "
            << out_path(cfg, "alignment.svg") << '\n';
  return 0;
}

int report_roc(const RunConfig& cfg,
               const std::vector<InferredObject>& objects) {
  if (objects.empty()) throw std::runtime_error("no labels to corrupt");
  std::vector<LabeledBox> labels;
  for (const InferredObject& object : objects)
    labels.push_back({object.frame, object.cls, object.box});
  LabelCorruption corruption;
  corruption.fraction = cfg.bad_fraction;
  const std::vector<bool> bad = corrupt_labels(labels, corruption, cfg.seed);

  const InferenceParams params = inference_params(cfg);
  const RasterOptions raster = raster_options(cfg);
  std::vector<double> jiou_scores, hull_scores, point_scores;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const LabelQualityScores scores = label_quality_scores(
        objects[i].points, labels[i].box, params, cfg.resolution, raster);
    jiou_scores.push_back(scores.jiou_gt);
    hull_scores.push_back(scores.hull_iou);
    point_scores.push_back(scores.num_points);
  }

  const struct {
    const char* name;
    const std::vector<double>* scores;
  } kinds[] = {{"jiou", &jiou_scores},
               {"hull", &hull_scores},
               {"points", &point_scores}};
  std::vector<PlotSeries> series;
  for (const auto& kind : kinds) {
    const RocCurve curve = label_quality_roc(*kind.scores, bad);
    std::vector<std::vector<double>> rows;
    PlotSeries s{kind.name, {}, {}};
    for (const RocPoint& p : curve.points) {
      rows.push_back({p.threshold, p.tpr, p.fpr});
      s.x.push_back(p.fpr);
      s.y.push_back(p.tpr);
    }
    series.push_back(std::move(s));
    write_csv(out_path(cfg, std::string("roc_") + kind.name + ".csv"),
              {"threshold", "tpr", "fpr"}, rows);
    std::cout << "auc_" << kind.name << ' ' << curve.auc << '\n';
  }
  write_svg_plot(out_path(cfg, "roc.svg"), "Bad-label detection ROC", "FPR",
                 "TPR", series);
  std::cerr << "wrote roc_{jiou,hull,points}.csv and roc.svg under " << cfg.out
            << '\n';
  return 0;
}

int report_corner_tv(const RunConfig& cfg,
                     const std::vector<InferredObject>& objects) {
  std::vector<TvObject> tv_objects;
  for (const InferredObject& object : objects)
    tv_objects.push_back({object.box, object.points});
  const CornerTvReport report =
      corner_tv_report(tv_objects, kObserver, inference_params(cfg),
                       cfg.samples, cfg.seed);

  std::vector<std::vector<double>> rows;
  std::vector<double> ranks, tvs;
  for (int rank = 0; rank < 4; ++rank) {
    rows.push_back({double(rank + 1), report.mean_corner_tv[rank]});
    ranks.push_back(rank + 1);
    tvs.push_back(report.mean_corner_tv[rank]);
  }
  rows.push_back({0.0, report.mean_center_tv});
  write_csv(out_path(cfg, "corner_tv.csv"), {"rank", "mean_tv"}, rows);
  write_svg_plot(out_path(cfg, "corner_tv.svg"),
                 "Mean corner total variance by distance rank", "corner rank",
                 "total variance [m^2]", {{"corners", ranks, tvs}});

  for (int rank = 0; rank < 4; ++rank)
    std::cout << 'C' << rank + 1 << ' ' << report.mean_corner_tv[rank] << '\n';
  std::cout << "center " << report.mean_center_tv << '\n';
  std::cerr << "used " << report.objects_used << " objects, skipped "
            << report.objects_skipped << '\n';
  return 0;
}

}  // namespace

int cmd_eval(const RunConfig& cfg) {
  const std::vector<InferredObject> objects = infer_objects(cfg);
  std::filesystem::create_directories(cfg.out);
  if (cfg.report == "recall") return report_recall(cfg, objects);
  if (cfg.report == "alignment") return report_alignment(cfg, objects);
  if (cfg.report == "roc") return report_roc(cfg, objects);
  if (cfg.report == "corner-tv") return report_corner_tv(cfg, objects);
  throw std::invalid_argument(
      "--report must be recall, alignment, roc or corner-tv");
}

}  // namespace boxuq::cli
