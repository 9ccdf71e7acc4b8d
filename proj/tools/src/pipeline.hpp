#pragma once

#include "run_config.hpp"

#include <boxuq/eval.hpp>

#include <string>
#include <vector>

namespace boxuq::cli {

// One labelled object after segmentation and posterior inference.
struct InferredObject {
  std::string frame;
  int index = 0;  // position within the frame's kept labels
  std::string cls;
  BoxParams box;  // ground frame
  ObjectPoints points;
  LabelPosterior posterior;
  double sigma = 0.0;  // noise scale used; EM estimate when requested
};

InferenceParams inference_params(const RunConfig& cfg);
RasterOptions raster_options(const RunConfig& cfg);

// Runs segmentation + inference over cfg.frames with a worker pool; results
// come back in frame order regardless of completion order.
std::vector<InferredObject> infer_objects(const RunConfig& cfg);

// Labels + posteriors from inferred objects, detections filtered to the same
// class set.
EvalSet make_eval_set(const std::vector<InferredObject>& objects,
                      std::vector<DetectionRecord> detections,
                      const std::string& cls);

}  // namespace boxuq::cli
