#pragma once

#include "boxuq/inference.hpp"
#include "boxuq/point_cloud.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace boxuq {

// One KITTI label line. The box stays in the camera frame (x right, y down,
// z forward) with the center at the bottom face, exactly as annotated.
struct KittiLabel {
  std::string type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  std::array<double, 4> bbox{};  // image-plane box, kept verbatim
  BoxParams box_camera;          // yaw field holds rotation_y
  std::optional<double> score;
  bool dont_care = false;  // DontCare rows carry -1 dimensions
};

KittiLabel parse_kitti_label_line(const std::string& line, int line_number);
std::vector<KittiLabel> read_kitti_label_file(const std::string& path);

struct Calibration {
  Eigen::Matrix3d r0_rect = Eigen::Matrix3d::Identity();
  Eigen::Matrix4d tr_velo_to_cam = Eigen::Matrix4d::Identity();
  // P0..P3, kept verbatim.
  std::array<Eigen::Matrix<double, 3, 4>, 4> p{
      Eigen::Matrix<double, 3, 4>::Zero(), Eigen::Matrix<double, 3, 4>::Zero(),
      Eigen::Matrix<double, 3, 4>::Zero(),
      Eigen::Matrix<double, 3, 4>::Zero()};

  // Plain mathematical identity (camera frame == ground frame).
  static Calibration identity();
  // Canonical camera mount: x_cam = -y_ground, y_cam = -z_ground,
  // z_cam = x_ground.
  static Calibration nominal();
};

Calibration read_kitti_calib_file(const std::string& path);

// Maps the camera-frame box into the ground frame through the inverse
// rectified-camera chain (R0 * Tr_velo_to_cam)^-1; yaw converts via the
// heading direction (cos r_y, 0, -sin r_y). Pure rigid transform; the
// bottom-face convention is the loader's concern.
BoxParams apply_calibration(const BoxParams& camera_box,
                            const Calibration& calib);
BoxParams apply_calibration_inverse(const BoxParams& ground_box,
                                    const Calibration& calib);

// Little-endian float32 quadruples (x, y, z, intensity).
PointCloud decode_velodyne(const std::string& bytes);
PointCloud read_velodyne_bin(const std::string& path);
void write_velodyne_bin(const PointCloud& cloud, const std::string& path);

struct FrameObject {
  std::string cls;
  BoxParams box;  // ground frame, center at the geometric center
  KittiLabel raw;
};

struct FrameRecord {
  std::string id;
  PointCloud cloud;  // ground (LiDAR) frame
  std::vector<FrameObject> objects;
  Calibration calibration;
};

// Reads velodyne/<frame>.bin, label_2/<frame>.txt and calib/<frame>.txt,
// drops DontCare rows, lifts bottom-face centers to geometric centers and
// transforms labels into the ground frame.
FrameRecord load_kitti_frame(const std::string& dataset_dir,
                             const std::string& frame_id);

struct DetectionRecord {
  std::string frame;
  std::string cls;
  double score = 0.0;  // in [0, 1]
  BoxParams box;       // ground frame
  // Diagonal variances for (c1, c2, c3, l, w, h, yaw) when present.
  std::optional<Eigen::Matrix<double, 7, 1>> variances;
};

std::vector<DetectionRecord> read_detections_jsonl(std::istream& in);
std::vector<DetectionRecord> read_detections_jsonl(const std::string& path);
void write_detections_jsonl(const std::vector<DetectionRecord>& records,
                            std::ostream& out);
void write_detections_jsonl(const std::vector<DetectionRecord>& records,
                            const std::string& path);

// Box posterior carried by a detection: diagonal BEV covariance from the
// variance block, or a delta when absent.
LabelPosterior detection_posterior(const DetectionRecord& det);

// IoU between the label rectangle and the convex hull of the object points;
// fewer than 3 points score 0.
double cvx_hull_iou(const BoxParams& label, const ObjectPoints& points);

// min(K / k_max, 1).
double num_points_score(const ObjectPoints& points, int k_max = 512);

}  // namespace boxuq
