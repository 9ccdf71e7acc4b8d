#include "boxuq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace boxuq {

namespace {

// Memoizes the pairwise metrics; JIoU rasterizes both sides onto a shared
// lattice, so it is only computed for pairs the matcher actually inspects.
class PairScorer {
 public:
  PairScorer(const EvalSet& set, const EvalOptions& opts)
      : set_(set), opts_(opts) {}

  double iou(int det, int label) const {
    return memo(iou_cache_, det, label, [&] {
      return iou_bev(set_.detections[det].box, set_.labels[label].box);
    });
  }

  double jiou(int det, int label) const {
    return memo(jiou_cache_, det, label, [&] {
      const LabelPosterior det_post =
          detection_posterior(set_.detections[det]);
      const LabelPosterior label_post =
          set_.label_posteriors.empty()
              ? LabelPosterior::delta(set_.labels[label].box)
              : set_.label_posteriors[label];
      const GridSpec spec = pair_spec(det_post, label_post);
      const SpatialGrid a = rasterize_pg(det_post, spec, opts_.raster);
      const SpatialGrid b = rasterize_pg(label_post, spec, opts_.raster);
      return jiou_grids(a, b).value;
    });
  }

  double metric(int det, int label) const {
    return opts_.metric == MatchMetric::kIou ? iou(det, label)
                                             : jiou(det, label);
  }

 private:
  GridSpec pair_spec(const LabelPosterior& a, const LabelPosterior& b) const {
    const GridSpec sa = default_grid_spec(a, opts_.resolution,
                                          opts_.raster.samples,
                                          opts_.raster.seed);
    const GridSpec sb = default_grid_spec(b, opts_.resolution,
                                          opts_.raster.samples,
                                          opts_.raster.seed);
    const Eigen::Vector2d lo = sa.origin.cwiseMin(sb.origin);
    const Eigen::Vector2d hi = sa.max_corner().cwiseMax(sb.max_corner());
    return GridSpec::cover(lo, hi, opts_.resolution);
  }

  template <typename F>
  double memo(std::map<std::pair<int, int>, double>& cache, int det, int label,
              F&& compute) const {
    const auto key = std::make_pair(det, label);
    if (const auto it = cache.find(key); it != cache.end()) return it->second;
    const double v = compute();
    cache.emplace(key, v);
    return v;
  }

  const EvalSet& set_;
  const EvalOptions& opts_;
  mutable std::map<std::pair<int, int>, double> iou_cache_;
  mutable std::map<std::pair<int, int>, double> jiou_cache_;
};

std::vector<int> score_order(const std::vector<DetectionRecord>& detections) {
  std::vector<int> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return detections[a].score > detections[b].score;
  });
  return order;
}

MatchResult greedy_match(const EvalSet& set, const PairScorer& scorer,
                         double threshold) {
  MatchResult result;
  result.label_match.assign(set.labels.size(), -1);
  result.detection_match.assign(set.detections.size(), -1);
  result.detection_iou.assign(set.detections.size(), 0.0);
  result.detection_jiou.assign(set.detections.size(), 0.0);
  for (int det : score_order(set.detections)) {
    const DetectionRecord& rec = set.detections[det];
    int best_label = -1;
    double best_value = 0.0;
    for (size_t li = 0; li < set.labels.size(); ++li) {
      if (result.label_match[li] != -1) continue;
      const LabeledBox& label = set.labels[li];
      if (label.frame != rec.frame || label.cls != rec.cls) continue;
      const double v = scorer.metric(det, static_cast<int>(li));
      if (v > best_value) {
        best_value = v;
        best_label = static_cast<int>(li);
      }
    }
    if (best_label >= 0 && best_value >= threshold) {
      result.label_match[best_label] = det;
      result.detection_match[det] = best_label;
      result.detection_iou[det] = scorer.iou(det, best_label);
      result.detection_jiou[det] = scorer.jiou(det, best_label);
    }
  }
  return result;
}

double ap_r40(const EvalSet& set, const EvalOptions& opts,
              const PairScorer& scorer) {
  if (set.labels.empty()) throw std::invalid_argument("no labels");
  std::vector<char> label_taken(set.labels.size(), 0);
  std::vector<double> precision, recall_at;
  int tp = 0;
  int seen = 0;
  for (int det : score_order(set.detections)) {
    const DetectionRecord& rec = set.detections[det];
    int best_label = -1;
    double best_value = 0.0;
    for (size_t li = 0; li < set.labels.size(); ++li) {
      if (label_taken[li]) continue;
      const LabeledBox& label = set.labels[li];
      if (label.frame != rec.frame || label.cls != rec.cls) continue;
      const double v = scorer.metric(det, static_cast<int>(li));
      if (v > best_value) {
        best_value = v;
        best_label = static_cast<int>(li);
      }
    }
    ++seen;
    if (best_label >= 0 && best_value >= opts.threshold) {
      label_taken[best_label] = 1;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / seen);
    recall_at.push_back(static_cast<double>(tp) / set.labels.size());
  }
  double ap = 0.0;
  for (int k = 1; k <= 40; ++k) {
    const double r = k / 40.0;
    double best = 0.0;
    for (size_t i = 0; i < precision.size(); ++i) {
      if (recall_at[i] >= r) best = std::max(best, precision[i]);
    }
    ap += best;
  }
  return ap / 40.0;
}

}  // namespace

MatchResult match_detections(const EvalSet& set, const EvalOptions& opts) {
  if (set.labels.empty()) throw std::invalid_argument("no labels");
  if (!set.label_posteriors.empty() &&
      set.label_posteriors.size() != set.labels.size()) {
    throw std::invalid_argument("label posterior count mismatch");
  }
  const PairScorer scorer(set, opts);
  return greedy_match(set, scorer, opts.threshold);
}

double recall(const MatchResult& result) {
  if (result.label_match.empty()) throw std::invalid_argument("no labels");
  const auto matched = std::count_if(result.label_match.begin(),
                                     result.label_match.end(),
                                     [](int d) { return d >= 0; });
  return static_cast<double>(matched) / result.label_match.size();
}

std::vector<double> recall_sweep(const EvalSet& set, const EvalOptions& opts,
                                 const std::vector<double>& thresholds) {
  if (set.labels.empty()) throw std::invalid_argument("no labels");
  const PairScorer scorer(set, opts);
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    out.push_back(recall(greedy_match(set, scorer, t)));
  }
  return out;
}

double average_precision(const EvalSet& set, const EvalOptions& opts) {
  const PairScorer scorer(set, opts);
  return ap_r40(set, opts, scorer);
}

AlignmentAblation alignment_ablation(const EvalSet& set,
                                     const EvalOptions& opts,
                                     const Eigen::Vector2d& observer) {
  AlignmentAblation out;
  out.ap_origin = average_precision(set, opts);
  for (AlignMode mode : {AlignMode::kCenter, AlignMode::kCorner}) {
    EvalSet surgied = set;
    for (DetectionRecord& det : surgied.detections) {
      int best_label = -1;
      double best_iou = 0.0;
      for (size_t li = 0; li < set.labels.size(); ++li) {
        const LabeledBox& label = set.labels[li];
        if (label.frame != det.frame || label.cls != det.cls) continue;
        const double v = iou_bev(det.box, label.box);
        if (v > best_iou) {
          best_iou = v;
          best_label = static_cast<int>(li);
        }
      }
      if (best_label >= 0) {
        det.box = align_box(det.box, set.labels[best_label].box, mode,
                            observer);
      }
    }
    const double ap = average_precision(surgied, opts);
    (mode == AlignMode::kCenter ? out.ap_center : out.ap_corner) = ap;
  }
  return out;
}

RocCurve label_quality_roc(const std::vector<double>& scores,
                           const std::vector<bool>& bad_flags) {
  if (scores.size() != bad_flags.size() || scores.empty()) {
    throw std::invalid_argument("scores and flags must align");
  }
  const auto bad_total = std::count(bad_flags.begin(), bad_flags.end(), true);
  const auto good_total = static_cast<long>(scores.size()) - bad_total;
  if (bad_total == 0 || good_total == 0) {
    throw std::invalid_argument("need at least one bad and one good label");
  }
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  RocCurve curve;
  curve.points.push_back({-std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (double t : thresholds) {
    long tp = 0, fp = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] <= t) {
        (bad_flags[i] ? tp : fp) += 1;
      }
    }
    curve.points.push_back({t, static_cast<double>(tp) / bad_total,
                            static_cast<double>(fp) / good_total});
  }
  for (size_t i = 1; i < curve.points.size(); ++i) {
    curve.auc += 0.5 * (curve.points[i].tpr + curve.points[i - 1].tpr) *
                 (curve.points[i].fpr - curve.points[i - 1].fpr);
  }
  return curve;
}

CornerTvReport corner_tv_report(const std::vector<TvObject>& objects,
                                const Eigen::Vector2d& observer,
                                const InferenceParams& params, int samples,
                                uint64_t seed) {
  CornerTvReport report;
  std::array<double, 4> sums{};
  double center_sum = 0.0;
  for (const TvObject& obj : objects) {
    try {
      const LabelPosterior post =
          infer_label_posterior(obj.points, obj.box, params);
      const auto tv = corner_total_variance(post, observer, samples, seed);
      const PointGaussian center =
          point_moments(UnitPoint{0, 0, 0}, post, samples, seed);
      for (int i = 0; i < 4; ++i) sums[i] += tv[i];
      center_sum += center.total_variance();
      ++report.objects_used;
    } catch (const std::exception&) {
      ++report.objects_skipped;
    }
  }
  if (report.objects_used > 0) {
    for (int i = 0; i < 4; ++i) {
      report.mean_corner_tv[i] = sums[i] / report.objects_used;
    }
    report.mean_center_tv = center_sum / report.objects_used;
  }
  return report;
}

std::vector<DetectionRecord> synthesize_detections(
    const std::vector<LabeledBox>& labels, const DetectorNoise& noise,
    uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<DetectionRecord> out;
  for (const LabeledBox& label : labels) {
    // Fixed draw count per label keeps the stream aligned across configs.
    const double dc1 = normal(rng) * noise.center_sigma;
    const double dc2 = normal(rng) * noise.center_sigma;
    const double dl = normal(rng) * noise.size_sigma;
    const double dw = normal(rng) * noise.size_sigma;
    const double dyaw = normal(rng) * noise.yaw_sigma;
    const double miss_draw = uniform(rng);
    if (miss_draw < noise.miss_rate) continue;

    DetectionRecord det;
    det.frame = label.frame;
    det.cls = label.cls;
    BoxParams box = label.box;
    box.l = std::max(box.l + dl, 0.1);
    box.w = std::max(box.w + dw, 0.1);
    box.yaw = normalize_angle(box.yaw + dyaw);
    if (noise.corner_anchored) {
      const auto corners = box_corners_bev(label.box);
      const std::array<Eigen::Vector2d, 4> unit = {
          Eigen::Vector2d{-0.5, 0.5}, Eigen::Vector2d{-0.5, -0.5},
          Eigen::Vector2d{0.5, -0.5}, Eigen::Vector2d{0.5, 0.5}};
      int nearest = 0;
      double best = (corners[0] - noise.observer).squaredNorm();
      for (int i = 1; i < 4; ++i) {
        const double d = (corners[i] - noise.observer).squaredNorm();
        if (d < best) {
          best = d;
          nearest = i;
        }
      }
      const double c = std::cos(box.yaw);
      const double s = std::sin(box.yaw);
      const Eigen::Vector2d off(box.l * unit[nearest].x(),
                                box.w * unit[nearest].y());
      box.c1 = corners[nearest].x() - (c * off.x() - s * off.y());
      box.c2 = corners[nearest].y() - (s * off.x() + c * off.y());
    } else {
      box.c1 += dc1;
      box.c2 += dc2;
    }
    det.box = box;
    det.score = std::exp(-std::hypot(box.c1 - label.box.c1,
                                     box.c2 - label.box.c2) -
                         std::hypot(dl, dw) - std::abs(dyaw));
    if (noise.variance_scale > 0.0) {
      Eigen::Matrix<double, 7, 1> var;
      const double c2 = noise.center_sigma * noise.center_sigma;
      const double s2 = noise.size_sigma * noise.size_sigma;
      var << c2, c2, 0.0, s2, s2, 0.0, noise.yaw_sigma * noise.yaw_sigma;
      det.variances = var * noise.variance_scale;
    }
    out.push_back(std::move(det));
  }
  return out;
}

std::vector<bool> corrupt_labels(std::vector<LabeledBox>& labels,
                                 const LabelCorruption& spec, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<bool> bad(labels.size(), false);
  for (size_t i = 0; i < labels.size(); ++i) {
    const double pick = uniform(rng);
    const double angle = uniform(rng) * 2.0 * std::numbers::pi;
    if (pick >= spec.fraction) continue;
    bad[i] = true;
    labels[i].box.c1 += spec.center_shift * std::cos(angle);
    labels[i].box.c2 += spec.center_shift * std::sin(angle);
    labels[i].box.l *= spec.size_scale;
    labels[i].box.w *= spec.size_scale;
  }
  return bad;
}

ObjectPoints synthesize_lshape_points(const BoxParams& box,
                                      const Eigen::Vector2d& observer,
                                      const LShapeOptions& opts,
                                      uint64_t seed) {
  box.validate();
  if (opts.point_spacing <= 0.0) {
    throw std::invalid_argument("point spacing must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto corners = box_corners_bev(box);
  ObjectPoints out;
  for (int e = 0; e < 4; ++e) {
    const Eigen::Vector2d a = corners[e];
    const Eigen::Vector2d b = corners[(e + 1) % 4];
    const Eigen::Vector2d mid = 0.5 * (a + b);
    const Eigen::Vector2d tangent = (b - a).normalized();
    const Eigen::Vector2d outward(tangent.y(), -tangent.x());
    if (outward.dot(observer - mid) <= 0.0) continue;  // back face
    const double len = (b - a).norm();
    const int n = std::max(1, static_cast<int>(std::floor(len /
                                                          opts.point_spacing)));
    for (int k = 0; k < n; ++k) {
      const double t = (k + 0.5) / n;
      Eigen::Vector2d p = a + t * (b - a);
      p.x() += normal(rng) * opts.noise_sigma;
      p.y() += normal(rng) * opts.noise_sigma;
      out.points.push_back(p);
    }
  }
  return out;
}

LabelQualityScores label_quality_scores(const ObjectPoints& points,
                                        const BoxParams& label,
                                        const InferenceParams& params,
                                        double resolution,
                                        const RasterOptions& raster,
                                        int k_max) {
  LabelQualityScores scores;
  const LabelPosterior post = infer_label_posterior(points, label, params);
  scores.jiou_gt =
      jiou_box_vs_posterior(label, post, resolution, raster).value;
  scores.hull_iou = cvx_hull_iou(label, points);
  scores.num_points = num_points_score(points, k_max);
  return scores;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  out << std::setprecision(10);
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("row width does not match header");
    }
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
}

namespace {

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<PlotSeries>& series) {
  if (series.empty()) throw std::invalid_argument("no series to plot");
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const PlotSeries& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty()) {
      throw std::invalid_argument("series needs matching non-empty x/y");
    }
    for (double v : s.x) {
      x_lo = std::min(x_lo, v);
      x_hi = std::max(x_hi, v);
    }
    for (double v : s.y) {
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  }
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) y_hi = y_lo + 1.0;

  const double width = 720, height = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const auto px = [&](double x) {
    return ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr);
  };
  const auto py = [&](double y) {
    return height - mb - (y - y_lo) / (y_hi - y_lo) * (height - mt - mb);
  };
  static const std::array<const char*, 5> palette = {
      "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title
      << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
      << width - mr << "\" y2=\"" << height - mb
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / 4.0;
    const double yv = y_lo + (y_hi - y_lo) * i / 4.0;
    out << "<text x=\"" << px(xv) << "\" y=\"" << height - mb + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << svg_num(xv) << "</text>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << svg_num(yv) << "</text>\n";
  }
  out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\">" << xlabel << "</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\" transform=\"rotate(-90 16 "
      << (mt + height - mb) / 2 << ")\">" << ylabel << "</text>\n";
  for (size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    const char* color = palette[si % palette.size()];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (i) out << ' ';
      out << svg_num(px(s.x[i])) << ',' << svg_num(py(s.y[i]));
    }
    out << "\"/>\n";
    const double ly = mt + 16 + 16 * static_cast<double>(si);
    out << "<line x1=\"" << width - mr - 130 << "\" y1=\"" << ly << "\" x2=\""
        << width - mr - 106 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << width - mr - 100 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.name
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace boxuq
