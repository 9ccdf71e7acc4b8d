#include "pipeline.hpp"

#include <boxuq/data_io.hpp>
#include <boxuq/inference.hpp>

#include <algorithm>
#include <future>
#include <stdexcept>
#include <thread>
#include <utility>

namespace boxuq::cli {

namespace {

bool keep_object(const RunConfig& cfg, const FrameObject& object) {
  if (!cfg.cls.empty() && object.cls != cfg.cls) return false;
  return object.box.l >= cfg.min_length;
}

std::vector<InferredObject> process_frame(const RunConfig& cfg,
                                          const InferenceParams& params,
                                          const std::string& frame_id) {
  const FrameRecord frame = load_kitti_frame(cfg.dataset, frame_id);
  std::vector<InferredObject> out;
  int index = 0;
  for (const FrameObject& object : frame.objects) {
    if (!keep_object(cfg, object)) continue;
    InferredObject rec;
    rec.frame = frame_id;
    rec.index = index++;
    rec.cls = object.cls;
    rec.box = object.box;
    rec.points = segment_points(frame.cloud, object.box, params.margin);
    if (params.estimate_sigma && rec.points.count() > 0) {
      const GenerativeSurfaceModel model = GenerativeSurfaceModel::boundary(
          object.box, params.spacing, params.sigma);
      rec.sigma = em_sigma(rec.points, model, object.box, params.em).sigma;
      InferenceParams fixed = params;
      fixed.estimate_sigma = false;
      fixed.sigma = rec.sigma;
      rec.posterior = infer_label_posterior(rec.points, object.box, fixed);
    } else {
      rec.sigma = rec.points.count() > 0 ? params.sigma : 0.0;
      rec.posterior = infer_label_posterior(rec.points, object.box, params);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

InferenceParams inference_params(const RunConfig& cfg) {
  InferenceParams params;
  params.prior_weight = cfg.weight;
  if (cfg.sigma == "em") {
    params.estimate_sigma = true;
  } else {
    params.sigma = std::stod(cfg.sigma);
    if (params.sigma <= 0.0)
      throw std::invalid_argument("sigma must be positive or \"em\"");
  }
  return params;
}

RasterOptions raster_options(const RunConfig& cfg) {
  RasterOptions opts;
  opts.interior_nx = cfg.interior;
  opts.interior_ny = cfg.interior;
  opts.samples = cfg.samples;
  opts.seed = cfg.seed;
  return opts;
}

std::vector<InferredObject> infer_objects(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw std::invalid_argument("--dataset is required");
  const InferenceParams params = inference_params(cfg);

  // Bounded look-ahead pool; results consumed strictly in input order.
  const std::size_t workers =
      std::max<std::size_t>(1, std::thread::hardware_concurrency());
  std::vector<std::future<std::vector<InferredObject>>> pending;
  pending.reserve(cfg.frames.size());
  std::vector<InferredObject> out;
  std::size_t next = 0;
  for (std::size_t i = 0; i < cfg.frames.size(); ++i) {
    pending.push_back(std::async(std::launch::async, process_frame,
                                 std::cref(cfg), std::cref(params),
                                 std::cref(cfg.frames[i])));
    while (pending.size() - next >= workers) {
      for (InferredObject& rec : pending[next++].get())
        out.push_back(std::move(rec));
    }
  }
  while (next < pending.size()) {
    for (InferredObject& rec : pending[next++].get())
      out.push_back(std::move(rec));
  }
  return out;
}

EvalSet make_eval_set(const std::vector<InferredObject>& objects,
                      std::vector<DetectionRecord> detections,
                      const std::string& cls) {
  EvalSet set;
  for (const InferredObject& object : objects) {
    set.labels.push_back({object.frame, object.cls, object.box});
    set.label_posteriors.push_back(object.posterior);
  }
  if (!cls.empty()) {
    std::erase_if(detections,
                  [&](const DetectionRecord& d) { return d.cls != cls; });
  }
  set.detections = std::move(detections);
  return set;
}

}  // namespace boxuq::cli
