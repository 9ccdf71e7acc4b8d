#include "pipeline.hpp"
#include "run_config.hpp"

#include <boxuq/spatial.hpp>

#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>

namespace boxuq::cli {

namespace {

// Selector "frame" or "frame:index".
std::pair<std::string, int> parse_selector(const std::string& selector) {
  if (selector.empty())
    throw std::invalid_argument("--object frame[:index] is required");
  const auto colon = selector.find(':');
  if (colon == std::string::npos) return {selector, 0};
  return {selector.substr(0, colon),
          std::stoi(selector.substr(colon + 1))};
}

}  // namespace

int cmd_render(const RunConfig& cfg) {
  const auto [frame_id, index] = parse_selector(cfg.object);
  RunConfig narrowed = cfg;
  narrowed.frames = {frame_id};
  const std::vector<InferredObject> objects = infer_objects(narrowed);

  const InferredObject* target = nullptr;
  for (const InferredObject& object : objects)
    if (object.index == index) target = &object;
  if (target == nullptr)
    throw std::runtime_error("no object " + std::to_string(index) +
                             " in frame " + frame_id);

  const RasterOptions raster = raster_options(cfg);
  const GridSpec spec = default_grid_spec(target->posterior, cfg.resolution,
                                          raster.samples, raster.seed);
  SpatialGrid grid;
  if (cfg.mode == "pg") {
    grid = rasterize_pg(target->posterior, spec, raster);
  } else if (cfg.mode == "pdq") {
    grid = rasterize_pdq(target->posterior, spec, raster.samples, raster.seed);
  } else {
    throw std::invalid_argument("--mode must be pg or pdq");
  }

  std::filesystem::create_directories(cfg.out);
  const std::string stem =
      frame_id + "_" + std::to_string(index) + "_" + cfg.mode;
  const auto dir = std::filesystem::path(cfg.out);
  write_grid_csv(grid, (dir / (stem + ".csv")).string());
  write_grid_pgm16(grid, (dir / (stem + ".pgm")).string());

  std::cout << "mass " << grid.mass() << '\n' << "peak " << grid.peak() << '\n';
  std::cerr << "wrote " << (dir / (stem + ".csv")).string() << " and "
            << (dir / (stem + ".pgm")).string() << '\n';
  return 0;
}

}  // namespace boxuq::cli
