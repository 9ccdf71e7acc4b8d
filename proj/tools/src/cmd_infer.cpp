#include "pipeline.hpp"
#include "run_config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace boxuq::cli {

int cmd_infer(const RunConfig& cfg) {
  const std::vector<InferredObject> objects = infer_objects(cfg);

  std::filesystem::create_directories(cfg.out);
  const std::string path =
      (std::filesystem::path(cfg.out) / "posteriors.jsonl").string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);

  for (const InferredObject& object : objects) {
    nlohmann::json rec;
    rec["frame"] = object.frame;
    rec["index"] = object.index;
    rec["class"] = object.cls;
    rec["k"] = object.points.count();
    rec["sigma"] = object.sigma;
    rec["mean"] = {{"cx", object.box.c1}, {"cy", object.box.c2},
                   {"cz", object.box.c3}, {"l", object.box.l},
                   {"w", object.box.w},   {"h", object.box.h},
                   {"yaw", object.box.yaw}};
    std::vector<double> cov(25);
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 5; ++c) cov[r * 5 + c] = object.posterior.covariance(r, c);
    rec["cov"] = cov;
    out << rec.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
  std::cerr << "wrote " << objects.size() << " posterior records to " << path
            << '\n';
  return 0;
}

}  // namespace boxuq::cli
