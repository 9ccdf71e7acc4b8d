#include "boxuq/data_io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace boxuq {

namespace {

using json = nlohmann::json;

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& tok, int line_number) {
  try {
    size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_number) +
                             ": non-numeric field '" + tok + "'");
  }
}

Eigen::Matrix4d camera_from_ground(const Calibration& calib) {
  Eigen::Matrix4d r0 = Eigen::Matrix4d::Identity();
  r0.topLeftCorner<3, 3>() = calib.r0_rect;
  return r0 * calib.tr_velo_to_cam;
}

BoxParams map_box(const BoxParams& box, const Eigen::Matrix4d& transform,
                  bool to_ground) {
  const Eigen::Matrix3d rot = transform.topLeftCorner<3, 3>();
  const double det = std::abs(rot.determinant());
  if (det < 1e-9) throw std::invalid_argument("singular calibration");
  const Eigen::Vector4d c =
      transform * Eigen::Vector4d(box.c1, box.c2, box.c3, 1.0);
  BoxParams out = box;
  out.c1 = c.x();
  out.c2 = c.y();
  out.c3 = c.z();
  if (to_ground) {
    // rotation_y spins about the camera -y axis; its heading direction is
    // (cos r_y, 0, -sin r_y).
    const Eigen::Vector3d dir =
        rot * Eigen::Vector3d(std::cos(box.yaw), 0.0, -std::sin(box.yaw));
    out.yaw = normalize_angle(std::atan2(dir.y(), dir.x()));
  } else {
    const Eigen::Vector3d dir =
        rot * Eigen::Vector3d(std::cos(box.yaw), std::sin(box.yaw), 0.0);
    out.yaw = normalize_angle(std::atan2(-dir.z(), dir.x()));
  }
  return out;
}

const std::array<const char*, 7> kBoxKeys = {"cx", "cy", "cz", "l",
                                             "w",  "h",  "yaw"};

json box_to_json(const BoxParams& box) {
  return json{{"cx", box.c1}, {"cy", box.c2}, {"cz", box.c3}, {"l", box.l},
              {"w", box.w},   {"h", box.h},   {"yaw", box.yaw}};
}

BoxParams box_from_json(const json& j, int line_number) {
  for (const char* key : kBoxKeys) {
    if (!j.contains(key) || !j[key].is_number()) {
      throw std::runtime_error("line " + std::to_string(line_number) +
                               ": box missing numeric '" + key + "'");
    }
  }
  BoxParams box;
  box.c1 = j["cx"];
  box.c2 = j["cy"];
  box.c3 = j["cz"];
  box.l = j["l"];
  box.w = j["w"];
  box.h = j["h"];
  box.yaw = j["yaw"];
  box.validate();
  return box;
}

}  // namespace

KittiLabel parse_kitti_label_line(const std::string& line, int line_number) {
  const auto tokens = split_ws(line);
  if (tokens.size() != 15 && tokens.size() != 16) {
    throw std::runtime_error("line " + std::to_string(line_number) +
                             ": expected 15 or 16 fields, got " +
                             std::to_string(tokens.size()));
  }
  KittiLabel label;
  label.type = tokens[0];
  label.dont_care = label.type == "DontCare";
  label.truncated = to_double(tokens[1], line_number);
  label.occluded =
      static_cast<int>(std::lround(to_double(tokens[2], line_number)));
  label.alpha = to_double(tokens[3], line_number);
  for (int i = 0; i < 4; ++i) {
    label.bbox[i] = to_double(tokens[4 + i], line_number);
  }
  BoxParams& box = label.box_camera;
  box.h = to_double(tokens[8], line_number);
  box.w = to_double(tokens[9], line_number);
  box.l = to_double(tokens[10], line_number);
  box.c1 = to_double(tokens[11], line_number);
  box.c2 = to_double(tokens[12], line_number);
  box.c3 = to_double(tokens[13], line_number);
  box.yaw = normalize_angle(to_double(tokens[14], line_number));
  if (tokens.size() == 16) label.score = to_double(tokens[15], line_number);
  if (!label.dont_care) box.validate();
  return label;
}

std::vector<KittiLabel> read_kitti_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<KittiLabel> out;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    out.push_back(parse_kitti_label_line(line, line_number));
  }
  return out;
}

Calibration Calibration::identity() { return {}; }

Calibration Calibration::nominal() {
  Calibration calib;
  calib.tr_velo_to_cam.setZero();
  calib.tr_velo_to_cam(0, 1) = -1.0;  // x_cam = -y_ground
  calib.tr_velo_to_cam(1, 2) = -1.0;  // y_cam = -z_ground
  calib.tr_velo_to_cam(2, 0) = 1.0;   // z_cam = x_ground
  calib.tr_velo_to_cam(3, 3) = 1.0;
  return calib;
}

Calibration read_kitti_calib_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Calibration calib;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    const auto tokens = split_ws(line.substr(colon + 1));
    const auto expect = [&](size_t n) {
      if (tokens.size() != n) {
        throw std::runtime_error("line " + std::to_string(line_number) +
                                 ": key " + key + " expects " +
                                 std::to_string(n) + " values");
      }
    };
    if (key.size() == 2 && key[0] == 'P' && key[1] >= '0' && key[1] <= '3') {
      expect(12);
      auto& m = calib.p[key[1] - '0'];
      for (int i = 0; i < 12; ++i) {
        m(i / 4, i % 4) = to_double(tokens[i], line_number);
      }
    } else if (key == "R0_rect") {
      expect(9);
      for (int i = 0; i < 9; ++i) {
        calib.r0_rect(i / 3, i % 3) = to_double(tokens[i], line_number);
      }
    } else if (key == "Tr_velo_to_cam") {
      expect(12);
      calib.tr_velo_to_cam.setIdentity();
      for (int i = 0; i < 12; ++i) {
        calib.tr_velo_to_cam(i / 4, i % 4) = to_double(tokens[i], line_number);
      }
    }
  }
  return calib;
}

BoxParams apply_calibration(const BoxParams& camera_box,
                            const Calibration& calib) {
  const Eigen::Matrix4d m = camera_from_ground(calib);
  // Check the forward map; inverting a singular transform would only
  // produce NaNs that slip past the check in map_box.
  if (std::abs(m.topLeftCorner<3, 3>().determinant()) < 1e-9) {
    throw std::invalid_argument("singular calibration");
  }
  return map_box(camera_box, m.inverse(), true);
}

BoxParams apply_calibration_inverse(const BoxParams& ground_box,
                                    const Calibration& calib) {
  return map_box(ground_box, camera_from_ground(calib), false);
}

PointCloud decode_velodyne(const std::string& bytes) {
  if (bytes.size() % 16 != 0) {
    throw std::runtime_error("velodyne payload not a multiple of 16 bytes");
  }
  PointCloud cloud(bytes.size() / 16);
  for (size_t i = 0; i < cloud.size(); ++i) {
    float f[4];
    std::memcpy(f, bytes.data() + 16 * i, 16);
    cloud[i] = {f[0], f[1], f[2], f[3]};
  }
  return cloud;
}

PointCloud read_velodyne_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_velodyne(buf.str());
}

void write_velodyne_bin(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (const LidarPoint& p : cloud) {
    const float f[4] = {p.x, p.y, p.z, p.intensity};
    out.write(reinterpret_cast<const char*>(f), 16);
  }
}

FrameRecord load_kitti_frame(const std::string& dataset_dir,
                             const std::string& frame_id) {
  FrameRecord frame;
  frame.id = frame_id;
  frame.cloud =
      read_velodyne_bin(dataset_dir + "/velodyne/" + frame_id + ".bin");
  frame.calibration =
      read_kitti_calib_file(dataset_dir + "/calib/" + frame_id + ".txt");
  const auto labels =
      read_kitti_label_file(dataset_dir + "/label_2/" + frame_id + ".txt");
  for (const KittiLabel& label : labels) {
    if (label.dont_care) continue;
    BoxParams cam_box = label.box_camera;
    // KITTI locations sit at the bottom face; lift to the geometric center
    // along camera up (-y) before the frame change.
    cam_box.c2 -= 0.5 * cam_box.h;
    FrameObject obj;
    obj.cls = label.type;
    obj.box = apply_calibration(cam_box, frame.calibration);
    obj.raw = label;
    frame.objects.push_back(std::move(obj));
  }
  return frame;
}

std::vector<DetectionRecord> read_detections_jsonl(std::istream& in) {
  std::vector<DetectionRecord> out;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("line " + std::to_string(line_number) +
                               ": malformed JSON (" + e.what() + ")");
    }
    DetectionRecord rec;
    if (!j.contains("frame") || !j["frame"].is_string() ||
        !j.contains("class") || !j["class"].is_string() ||
        !j.contains("score") || !j["score"].is_number() ||
        !j.contains("box") || !j["box"].is_object()) {
      throw std::runtime_error("line " + std::to_string(line_number) +
                               ": record needs frame, class, score, box");
    }
    rec.frame = j["frame"];
    rec.cls = j["class"];
    rec.score = j["score"];
    if (!(rec.score >= 0.0 && rec.score <= 1.0)) {
      throw std::runtime_error("line " + std::to_string(line_number) +
                               ": score outside [0, 1]");
    }
    rec.box = box_from_json(j["box"], line_number);
    if (j.contains("var")) {
      Eigen::Matrix<double, 7, 1> var;
      const json& v = j["var"];
      for (int i = 0; i < 7; ++i) {
        const char* key = kBoxKeys[i];
        if (!v.contains(key) || !v[key].is_number()) {
          throw std::runtime_error("line " + std::to_string(line_number) +
                                   ": var missing numeric '" +
                                   std::string(key) + "'");
        }
        var[i] = v[key];
        if (var[i] < 0.0) {
          throw std::runtime_error("line " + std::to_string(line_number) +
                                   ": negative variance '" + std::string(key) +
                                   "'");
        }
      }
      rec.variances = var;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<DetectionRecord> read_detections_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_detections_jsonl(in);
}

void write_detections_jsonl(const std::vector<DetectionRecord>& records,
                            std::ostream& out) {
  for (const DetectionRecord& rec : records) {
    json j{{"frame", rec.frame},
           {"class", rec.cls},
           {"score", rec.score},
           {"box", box_to_json(rec.box)}};
    if (rec.variances) {
      const auto& var = *rec.variances;
      json v;
      for (int i = 0; i < 7; ++i) v[kBoxKeys[i]] = var[i];
      j["var"] = v;
    }
    out << j.dump() << '\n';
  }
}

void write_detections_jsonl(const std::vector<DetectionRecord>& records,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_detections_jsonl(records, out);
}

LabelPosterior detection_posterior(const DetectionRecord& det) {
  if (!det.variances) return LabelPosterior::delta(det.box);
  const auto& var = *det.variances;
  Vector5d bev;
  bev << var[0], var[1], var[3], var[4], var[6];
  return LabelPosterior::diagonal(det.box, bev);
}

double cvx_hull_iou(const BoxParams& label, const ObjectPoints& points) {
  label.validate();
  if (points.count() < 3) return 0.0;
  const ConvexPolygon hull = convex_hull(points.points);
  if (hull.empty()) return 0.0;
  const double hull_area = hull.area();
  const double inter =
      polygon_intersection(hull, box_polygon_bev(label)).area();
  if (inter < 1e-12) return 0.0;
  return inter / (hull_area + label.area_bev() - inter);
}

double num_points_score(const ObjectPoints& points, int k_max) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  return std::min(1.0, static_cast<double>(points.count()) / k_max);
}

}  // namespace boxuq
