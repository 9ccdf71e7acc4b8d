#pragma once

#include <boxuq/data_io.hpp>
#include <boxuq/eval.hpp>
#include <boxuq/geometry.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace boxuq::test {

// Self-deleting unique directory under the system temp root.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& relative = "") const;

 private:
  std::filesystem::path path_;
};

// Car-like box with random pose: center within +-20 m, length 3-6 m, width
// 1.4-2.2 m, height 1.3-1.9 m, any yaw.
BoxParams random_box(std::mt19937_64& rng);

// One object of a synthetic frame; the cloud is the L-shape the observer
// would see, at the box's mid height.
struct DatasetObject {
  BoxParams box;  // ground frame, geometric center
  std::string cls = "Car";
  uint64_t cloud_seed = 1;
  LShapeOptions lshape;
};

// Writes velodyne/<id>.bin, label_2/<id>.txt and calib/<id>.txt under root
// using the nominal camera mount.
void write_kitti_frame(const std::filesystem::path& root,
                       const std::string& frame_id,
                       const std::vector<DatasetObject>& objects,
                       const Eigen::Vector2d& observer = Eigen::Vector2d::Zero(),
                       const PointCloud& extra_points = {});

// Label line for a ground-frame box: camera-frame fields with the bottom-face
// center, full double precision.
std::string kitti_label_line(const BoxParams& ground_box,
                             const std::string& cls, const Calibration& calib);

void write_calib_file(const std::filesystem::path& path,
                      const Calibration& calib);

}  // namespace boxuq::test
