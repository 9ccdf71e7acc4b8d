#pragma once

#include "boxuq/data_io.hpp"
#include "boxuq/jaccard.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace boxuq {

struct LabeledBox {
  std::string frame;
  std::string cls;
  BoxParams box;
};

enum class MatchMetric { kIou, kJiou };

struct EvalOptions {
  MatchMetric metric = MatchMetric::kIou;
  double threshold = 0.7;
  double resolution = 0.1;  // grid resolution for JIoU matching
  RasterOptions raster;
};

struct EvalSet {
  std::vector<LabeledBox> labels;
  // Parallel to labels when non-empty; otherwise labels count as deltas.
  std::vector<LabelPosterior> label_posteriors;
  std::vector<DetectionRecord> detections;
};

// One-to-one greedy matching in descending score order (stable on input order
// for equal scores): each detection takes the unmatched same-frame same-class
// label with the highest metric value when it reaches the threshold.
struct MatchResult {
  std::vector<int> label_match;      // per label: detection index or -1
  std::vector<int> detection_match;  // per detection: label index or -1
  std::vector<double> detection_iou;   // metric values for matched pairs
  std::vector<double> detection_jiou;
};

MatchResult match_detections(const EvalSet& set, const EvalOptions& opts);

double recall(const MatchResult& result);

// Recall per threshold under one metric; labels must be non-empty.
std::vector<double> recall_sweep(const EvalSet& set, const EvalOptions& opts,
                                 const std::vector<double>& thresholds);

// 40-recall-point interpolated average precision at opts.threshold.
double average_precision(const EvalSet& set, const EvalOptions& opts);

// AP before and after replacing each detection's size with its best-overlap
// label's size, keeping either the predicted center or the observer-nearest
// predicted corner.
struct AlignmentAblation {
  double ap_origin = 0.0;
  double ap_center = 0.0;
  double ap_corner = 0.0;

  double center_delta() const { return ap_center - ap_origin; }
  double corner_delta() const { return ap_corner - ap_origin; }
};

AlignmentAblation alignment_ablation(const EvalSet& set,
                                     const EvalOptions& opts,
                                     const Eigen::Vector2d& observer);

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) start, monotone sweep
  double auc = 0.0;
};

// Sweep over unique score values, predicting "bad" when score <= threshold;
// AUC by the trapezoid rule. Needs at least one bad and one good flag.
RocCurve label_quality_roc(const std::vector<double>& scores,
                           const std::vector<bool>& bad_flags);

struct TvObject {
  BoxParams box;
  ObjectPoints points;
};

struct CornerTvReport {
  std::array<double, 4> mean_corner_tv{};  // ranked C1 (nearest) .. C4
  double mean_center_tv = 0.0;
  int objects_used = 0;
  int objects_skipped = 0;
};

// Per-object inference followed by corner total variances ranked by observer
// distance; objects whose inference throws are skipped and counted.
CornerTvReport corner_tv_report(const std::vector<TvObject>& objects,
                                const Eigen::Vector2d& observer,
                                const InferenceParams& params,
                                int samples = 1024, uint64_t seed = 0);

// Synthetic detector: labels plus Gaussian parameter noise.
struct DetectorNoise {
  double center_sigma = 0.0;  // per-axis [m]
  double size_sigma = 0.0;    // l and w [m]
  double yaw_sigma = 0.0;     // [rad]
  // Size noise repositions the box so the observer-nearest label corner
  // stays fixed.
  bool corner_anchored = false;
  Eigen::Vector2d observer = Eigen::Vector2d::Zero();
  // Emitted variance = variance_scale * true noise variance; 0 omits the
  // variance block entirely.
  double variance_scale = 1.0;
  double miss_rate = 0.0;  // fraction of labels dropped
};

// Deterministic given seed. Score = exp(-center error - size error - |yaw
// error|), so a noiseless detector scores 1.
std::vector<DetectionRecord> synthesize_detections(
    const std::vector<LabeledBox>& labels, const DetectorNoise& noise,
    uint64_t seed);

// Marks a seeded fraction of labels as bad and corrupts their boxes in place
// (center shift + size inflation); returns the bad flags.
struct LabelCorruption {
  double fraction = 0.3;
  double center_shift = 0.5;  // [m]
  double size_scale = 1.4;
};

std::vector<bool> corrupt_labels(std::vector<LabeledBox>& labels,
                                 const LabelCorruption& spec, uint64_t seed);

// Points along the box edges whose outward normal faces the observer (the
// L-shape a LiDAR sees), with isotropic Gaussian noise.
struct LShapeOptions {
  double point_spacing = 0.05;  // [m]
  double noise_sigma = 0.05;    // [m]
};

ObjectPoints synthesize_lshape_points(const BoxParams& box,
                                      const Eigen::Vector2d& observer,
                                      const LShapeOptions& opts, uint64_t seed);

// Label-quality scores for ROC comparison.
struct LabelQualityScores {
  double jiou_gt = 0.0;
  double hull_iou = 0.0;
  double num_points = 0.0;
};

LabelQualityScores label_quality_scores(const ObjectPoints& points,
                                        const BoxParams& label,
                                        const InferenceParams& params,
                                        double resolution,
                                        const RasterOptions& raster,
                                        int k_max = 512);

// Report writers.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<PlotSeries>& series);

}  // namespace boxuq
