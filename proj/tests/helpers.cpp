#include "helpers.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace boxuq::test {

namespace {

std::filesystem::path unique_temp_dir() {
  static std::atomic<int> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  std::filesystem::path dir;
  do {
    std::ostringstream name;
    name << "boxuq_test_" << ::getpid() << '_' << counter++;
    dir = base / name.str();
  } while (std::filesystem::exists(dir));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TempDir::TempDir() : path_(unique_temp_dir()) {}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string TempDir::str(const std::string& relative) const {
  return relative.empty() ? path_.string() : (path_ / relative).string();
}

BoxParams random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> center(-20.0, 20.0);
  std::uniform_real_distribution<double> length(3.0, 6.0);
  std::uniform_real_distribution<double> width(1.4, 2.2);
  std::uniform_real_distribution<double> height(1.3, 1.9);
  std::uniform_real_distribution<double> angle(-3.14, 3.14);
  BoxParams box;
  box.c1 = center(rng);
  box.c2 = center(rng);
  box.c3 = 0.5 * 1.6;
  box.l = length(rng);
  box.w = width(rng);
  box.h = height(rng);
  box.yaw = angle(rng);
  return box;
}

std::string kitti_label_line(const BoxParams& ground_box,
                             const std::string& cls,
                             const Calibration& calib) {
  const BoxParams cam = apply_calibration_inverse(ground_box, calib);
  std::ostringstream line;
  line << std::setprecision(17);
  line << cls << " 0 0 0 0 0 50 50 " << cam.h << ' ' << cam.w << ' ' << cam.l
       << ' ' << cam.c1 << ' ' << cam.c2 + 0.5 * cam.h << ' ' << cam.c3 << ' '
       << cam.yaw;
  return line.str();
}

void write_calib_file(const std::filesystem::path& path,
                      const Calibration& calib) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  for (int i = 0; i < 4; ++i) {
    out << 'P' << i << ':';
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) out << ' ' << calib.p[i](r, c);
    out << '\n';
  }
  out << "R0_rect:";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out << ' ' << calib.r0_rect(r, c);
  out << '\n';
  out << "Tr_velo_to_cam:";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) out << ' ' << calib.tr_velo_to_cam(r, c);
  out << '\n';
}

void write_kitti_frame(const std::filesystem::path& root,
                       const std::string& frame_id,
                       const std::vector<DatasetObject>& objects,
                       const Eigen::Vector2d& observer,
                       const PointCloud& extra_points) {
  const Calibration calib = Calibration::nominal();
  std::filesystem::create_directories(root / "velodyne");
  std::filesystem::create_directories(root / "label_2");
  std::filesystem::create_directories(root / "calib");

  PointCloud cloud = extra_points;
  std::ofstream labels(root / "label_2" / (frame_id + ".txt"));
  if (!labels) throw std::runtime_error("cannot write labels");
  for (const DatasetObject& object : objects) {
    const ObjectPoints bev = synthesize_lshape_points(
        object.box, observer, object.lshape, object.cloud_seed);
    for (const Eigen::Vector2d& p : bev.points) {
      cloud.push_back({static_cast<float>(p.x()), static_cast<float>(p.y()),
                       static_cast<float>(object.box.c3), 0.5f});
    }
    labels << kitti_label_line(object.box, object.cls, calib) << '\n';
  }
  write_velodyne_bin(cloud, (root / "velodyne" / (frame_id + ".bin")).string());
  write_calib_file(root / "calib" / (frame_id + ".txt"), calib);
}

}  // namespace boxuq::test
