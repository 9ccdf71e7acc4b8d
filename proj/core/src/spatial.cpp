#include "boxuq/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace boxuq {

namespace {

constexpr double kDeltaCovariance = 1e-12;
constexpr int kMaxCells = 50'000'000;

Eigen::AlignedBox2d footprint(const BoxParams& box) {
  Eigen::AlignedBox2d rect;
  for (const auto& c : box_corners_bev(box)) rect.extend(c);
  return rect;
}

// Exact area of the overlap between one grid cell and a convex polygon.
double cell_coverage(const GridSpec& spec, int ix, int iy,
                     const ConvexPolygon& poly) {
  const double x0 = spec.origin.x() + ix * spec.resolution;
  const double y0 = spec.origin.y() + iy * spec.resolution;
  ConvexPolygon cell;
  cell.vertices = {{x0, y0},
                   {x0 + spec.resolution, y0},
                   {x0 + spec.resolution, y0 + spec.resolution},
                   {x0, y0 + spec.resolution}};
  return polygon_intersection(cell, poly).area();
}

// Adds weight * (covered fraction of cell) when as_membership, otherwise the
// uniform box density weight * coverage_area / (box area * cell area).
void add_box_coverage(SpatialGrid& grid, const BoxParams& box, double weight,
                      bool as_membership) {
  const GridSpec& spec = grid.spec;
  const ConvexPolygon poly = box_polygon_bev(box);
  const Eigen::AlignedBox2d rect = footprint(box);
  const int ix0 = std::max(
      0, static_cast<int>(std::floor((rect.min().x() - spec.origin.x()) /
                                     spec.resolution)));
  const int iy0 = std::max(
      0, static_cast<int>(std::floor((rect.min().y() - spec.origin.y()) /
                                     spec.resolution)));
  const int ix1 = std::min(
      spec.width - 1,
      static_cast<int>(std::floor((rect.max().x() - spec.origin.x()) /
                                  spec.resolution)));
  const int iy1 = std::min(
      spec.height - 1,
      static_cast<int>(std::floor((rect.max().y() - spec.origin.y()) /
                                  spec.resolution)));
  const double denom = as_membership ? spec.cell_area()
                                     : box.area_bev() * spec.cell_area();
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      const double covered = cell_coverage(spec, ix, iy, poly);
      if (covered > 0.0) grid.at(ix, iy) += weight * covered / denom;
    }
  }
}

// Accumulates a weighted 2D Gaussian density, averaging the density over
// subdivided cells so components narrower than a cell keep their mass.
void add_gaussian(SpatialGrid& grid, const Eigen::Vector2d& mu,
                  const Eigen::Matrix2d& cov_in, double weight) {
  const GridSpec& spec = grid.spec;
  const double res = spec.resolution;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(
      0.5 * (cov_in + cov_in.transpose()));
  const double floor_ev = (res / 32.0) * (res / 32.0);
  Eigen::Vector2d evs = es.eigenvalues().cwiseMax(floor_ev);
  const Eigen::Matrix2d cov =
      es.eigenvectors() * evs.asDiagonal() * es.eigenvectors().transpose();
  const double det = cov.determinant();
  const Eigen::Matrix2d inv = cov.inverse();
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));

  const double hx = 6.0 * std::sqrt(cov(0, 0)) + res;
  const double hy = 6.0 * std::sqrt(cov(1, 1)) + res;
  const int ix0 = std::max(
      0, static_cast<int>(std::floor((mu.x() - hx - spec.origin.x()) / res)));
  const int iy0 = std::max(
      0, static_cast<int>(std::floor((mu.y() - hy - spec.origin.y()) / res)));
  const int ix1 = std::min(
      spec.width - 1,
      static_cast<int>(std::floor((mu.x() + hx - spec.origin.x()) / res)));
  const int iy1 = std::min(
      spec.height - 1,
      static_cast<int>(std::floor((mu.y() + hy - spec.origin.y()) / res)));
  const double min_std = std::sqrt(evs.minCoeff());
  const int sub = std::clamp(static_cast<int>(std::ceil(3.0 * res / min_std)),
                             1, 96);
  const double step = res / sub;
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      const double cx = spec.origin.x() + ix * res;
      const double cy = spec.origin.y() + iy * res;
      double acc = 0.0;
      for (int sy = 0; sy < sub; ++sy) {
        for (int sx = 0; sx < sub; ++sx) {
          Eigen::Vector2d d(cx + (sx + 0.5) * step - mu.x(),
                            cy + (sy + 0.5) * step - mu.y());
          acc += std::exp(-0.5 * d.dot(inv * d));
        }
      }
      grid.at(ix, iy) += weight * norm * acc / (sub * sub);
    }
  }
}

void require_covers(const GridSpec& spec, const Eigen::AlignedBox2d& rect) {
  if (!spec.covers_rect(rect.min(), rect.max())) {
    std::ostringstream msg;
    msg << "grid too small to hold the box support; required extent ["
        << rect.min().x() << ", " << rect.min().y() << "] x ["
        << rect.max().x() << ", " << rect.max().y() << ']';
    throw std::runtime_error(msg.str());
  }
}

const std::array<UnitPoint, 4>& corner_unit_points() {
  static const std::array<UnitPoint, 4> corners = {
      UnitPoint{-0.5, 0.5, 0}, UnitPoint{-0.5, -0.5, 0},
      UnitPoint{0.5, -0.5, 0}, UnitPoint{0.5, 0.5, 0}};
  return corners;
}

// Interior points stand in for uniform patches of the mean box, one lattice
// cell wide, so their Gaussians must carry the patch spread on top of the
// posterior-induced one; without it a near-delta posterior renders as a
// lattice of dots instead of a uniform box. The patch variance h^2/12 is
// floored at h^2/4 - point variance per box axis: a Gaussian comb of spacing
// h needs a total std of about h/2 before its ripple drops below a percent.
struct PatchSmear {
  PatchSmear(const BoxParams& mean, int nx, int ny)
      : h(mean.l / nx, mean.w / ny) {
    const double c = std::cos(mean.yaw);
    const double s = std::sin(mean.yaw);
    rot << c, -s, s, c;
  }

  Eigen::Matrix2d for_point(const Eigen::Matrix2d& point_cov) const {
    const Eigen::Matrix2d in_box = rot.transpose() * point_cov * rot;
    Eigen::Vector2d var;
    for (int a = 0; a < 2; ++a) {
      var[a] = std::max(h[a] * h[a] / 12.0,
                        h[a] * h[a] / 4.0 - std::max(in_box(a, a), 0.0));
    }
    return rot * var.asDiagonal() * rot.transpose();
  }

  // Upper bound of for_point over any point covariance, for support padding.
  Eigen::Matrix2d bound() const {
    return rot * (h.array().square() / 4.0).matrix().asDiagonal() *
           rot.transpose();
  }

  Eigen::Vector2d h;
  Eigen::Matrix2d rot;
};

// Mean footprint grown by n_sigma axis deviations of the corner Gaussians,
// each widened by the interior-patch smear.
Eigen::AlignedBox2d posterior_support(const LabelPosterior& posterior,
                                      const SymBasisMoments& moments,
                                      double n_sigma,
                                      const Eigen::Matrix2d& smear) {
  Eigen::AlignedBox2d rect = footprint(posterior.mean);
  for (const UnitPoint& v0 : corner_unit_points()) {
    const PointGaussian pg = moments.point_gaussian(homogeneous(v0));
    const Eigen::Vector2d mu = pg.mean_bev();
    const Eigen::Matrix2d cov = pg.cov_bev() + smear;
    const Eigen::Vector2d pad(n_sigma * std::sqrt(std::max(cov(0, 0), 0.0)),
                              n_sigma * std::sqrt(std::max(cov(1, 1), 0.0)));
    rect.extend(Eigen::Vector2d(mu - pad));
    rect.extend(Eigen::Vector2d(mu + pad));
  }
  return rect;
}

Eigen::AlignedBox2d union_footprint(const DiscreteBoxDistribution& label) {
  Eigen::AlignedBox2d rect;
  for (const auto& [box, weight] : label.modes) rect.extend(footprint(box));
  return rect;
}

}  // namespace

Eigen::Vector2d GridSpec::cell_center(int ix, int iy) const {
  return origin + Eigen::Vector2d((ix + 0.5) * resolution,
                                  (iy + 0.5) * resolution);
}

Eigen::Vector2d GridSpec::max_corner() const {
  return origin + Eigen::Vector2d(width * resolution, height * resolution);
}

bool GridSpec::contains_point(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d hi = max_corner();
  return p.x() >= origin.x() && p.y() >= origin.y() && p.x() < hi.x() &&
         p.y() < hi.y();
}

bool GridSpec::covers_rect(const Eigen::Vector2d& lo,
                           const Eigen::Vector2d& hi) const {
  const Eigen::Vector2d top = max_corner();
  const double tol = 1e-9 * resolution;
  return lo.x() >= origin.x() - tol && lo.y() >= origin.y() - tol &&
         hi.x() <= top.x() + tol && hi.y() <= top.y() + tol;
}

void GridSpec::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw std::invalid_argument("grid resolution must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("grid extents must be positive");
  }
  if (static_cast<int64_t>(width) * height > kMaxCells) {
    throw std::invalid_argument("grid exceeds the cell budget");
  }
  if (!origin.allFinite()) {
    throw std::invalid_argument("grid origin must be finite");
  }
}

GridSpec GridSpec::cover(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                         double resolution) {
  if (!(resolution > 0.0)) {
    throw std::invalid_argument("grid resolution must be positive");
  }
  if (!(hi.x() >= lo.x() && hi.y() >= lo.y())) {
    throw std::invalid_argument("grid extent is empty");
  }
  GridSpec spec;
  spec.resolution = resolution;
  spec.origin =
      Eigen::Vector2d((std::floor(lo.x() / resolution) - 1.0) * resolution,
                      (std::floor(lo.y() / resolution) - 1.0) * resolution);
  spec.width = static_cast<int>(
                   std::ceil((hi.x() - spec.origin.x()) / resolution)) +
               1;
  spec.height = static_cast<int>(
                    std::ceil((hi.y() - spec.origin.y()) / resolution)) +
                1;
  spec.validate();
  return spec;
}

SpatialGrid SpatialGrid::zeros(const GridSpec& spec) {
  spec.validate();
  SpatialGrid grid;
  grid.spec = spec;
  grid.values.assign(static_cast<size_t>(spec.cell_count()), 0.0);
  return grid;
}

double& SpatialGrid::at(int ix, int iy) {
  return values[static_cast<size_t>(iy) * spec.width + ix];
}

double SpatialGrid::at(int ix, int iy) const {
  return values[static_cast<size_t>(iy) * spec.width + ix];
}

double SpatialGrid::mass() const {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum * spec.cell_area();
}

double SpatialGrid::peak() const {
  double top = 0.0;
  for (double v : values) top = std::max(top, v);
  return top;
}

void write_grid_csv(const SpatialGrid& grid, std::ostream& out) {
  out << "origin_x,origin_y,resolution,width,height\n";
  out << std::setprecision(17) << grid.spec.origin.x() << ','
      << grid.spec.origin.y() << ',' << grid.spec.resolution << ','
      << grid.spec.width << ',' << grid.spec.height << '\n';
  for (int iy = 0; iy < grid.spec.height; ++iy) {
    for (int ix = 0; ix < grid.spec.width; ++ix) {
      if (ix) out << ',';
      out << grid.at(ix, iy);
    }
    out << '\n';
  }
}

void write_grid_csv(const SpatialGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_grid_csv(grid, out);
}

SpatialGrid read_grid_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) ||
      header.rfind("origin_x,origin_y,resolution,width,height", 0) != 0) {
    throw std::runtime_error("bad grid header");
  }
  std::string meta;
  if (!std::getline(in, meta)) throw std::runtime_error("missing grid meta");
  GridSpec spec;
  {
    std::istringstream ss(meta);
    std::string field;
    std::array<double, 5> vals{};
    for (double& v : vals) {
      if (!std::getline(ss, field, ',')) {
        throw std::runtime_error("short grid meta");
      }
      v = std::stod(field);
    }
    spec.origin = {vals[0], vals[1]};
    spec.resolution = vals[2];
    spec.width = static_cast<int>(vals[3]);
    spec.height = static_cast<int>(vals[4]);
  }
  SpatialGrid grid = SpatialGrid::zeros(spec);
  std::string line;
  for (int iy = 0; iy < spec.height; ++iy) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("grid rows truncated");
    }
    std::istringstream ss(line);
    std::string field;
    for (int ix = 0; ix < spec.width; ++ix) {
      if (!std::getline(ss, field, ',')) {
        throw std::runtime_error("grid row truncated");
      }
      grid.at(ix, iy) = std::stod(field);
    }
  }
  return grid;
}

SpatialGrid read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_grid_csv(in);
}

void write_grid_pgm16(const SpatialGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "P5\n" << grid.spec.width << ' ' << grid.spec.height << "\n65535\n";
  const double top = grid.peak();
  const double scale = top > 0.0 ? 65535.0 / top : 0.0;
  for (int iy = grid.spec.height - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < grid.spec.width; ++ix) {
      const double v = std::clamp(grid.at(ix, iy) * scale, 0.0, 65535.0);
      const auto q = static_cast<uint16_t>(std::lround(v));
      const unsigned char bytes[2] = {static_cast<unsigned char>(q >> 8),
                                      static_cast<unsigned char>(q & 0xff)};
      out.write(reinterpret_cast<const char*>(bytes), 2);
    }
  }
}

FeatureMatrix feature_matrix(const BoxParams& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  FeatureMatrix m;
  m << box.l * c, -box.w * s, 0.0, box.c1,
       box.l * s,  box.w * c, 0.0, box.c2,
       0.0,        0.0,       box.h, box.c3;
  return m;
}

Eigen::Vector4d homogeneous(const UnitPoint& v0) {
  return {v0.v1, v0.v2, v0.v3, 1.0};
}

std::vector<BoxParams> sample_posterior_boxes(const LabelPosterior& posterior,
                                              int samples, uint64_t seed) {
  posterior.validate();
  if (samples <= 0) throw std::invalid_argument("samples must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix5d> es(posterior.covariance);
  const Matrix5d root = es.eigenvectors() *
                        es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const Vector5d mean = posterior.mean_bev();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<BoxParams> out;
  out.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    Vector5d z;
    for (int d = 0; d < 5; ++d) z[d] = normal(rng);
    const Vector5d y = mean + root * z;
    BoxParams b = posterior.mean;
    b.c1 = y[0];
    b.c2 = y[1];
    b.l = std::max(y[2], 1e-3);
    b.w = std::max(y[3], 1e-3);
    b.yaw = y[4];  // left unwrapped so moments stay continuous
    out.push_back(b);
  }
  return out;
}

PointGaussian point_moments(const UnitPoint& v0,
                            const LabelPosterior& posterior, int samples,
                            uint64_t seed) {
  const auto boxes = sample_posterior_boxes(posterior, samples, seed);
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d sq = Eigen::Matrix3d::Zero();
  for (const BoxParams& b : boxes) {
    const Eigen::Vector3d p = box_to_world(b, v0);
    sum += p;
    sq += p * p.transpose();
  }
  const double n = static_cast<double>(boxes.size());
  PointGaussian pg;
  pg.mean = sum / n;
  pg.covariance = sq / n - pg.mean * pg.mean.transpose();
  pg.covariance = 0.5 * (pg.covariance + pg.covariance.transpose());
  return pg;
}

const std::array<Eigen::Vector4d, 10>& SymBasisMoments::basis() {
  static const std::array<Eigen::Vector4d, 10> vecs = {
      Eigen::Vector4d{0, 0, 0, 1},  Eigen::Vector4d{1, 0, 0, 1},
      Eigen::Vector4d{-1, 0, 0, 1}, Eigen::Vector4d{0, 1, 0, 1},
      Eigen::Vector4d{0, -1, 0, 1}, Eigen::Vector4d{0, 0, 1, 1},
      Eigen::Vector4d{0, 0, -1, 1}, Eigen::Vector4d{1, 1, 0, 1},
      Eigen::Vector4d{0, 1, 1, 1},  Eigen::Vector4d{1, 0, 1, 1}};
  return vecs;
}

namespace {

Eigen::Matrix<double, 10, 1> vech4(const Eigen::Matrix4d& m) {
  Eigen::Matrix<double, 10, 1> v;
  int k = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) v[k++] = m(i, j);
  }
  return v;
}

const Eigen::PartialPivLU<Eigen::Matrix<double, 10, 10>>& basis_lu() {
  static const auto lu = [] {
    Eigen::Matrix<double, 10, 10> b;
    const auto& vecs = SymBasisMoments::basis();
    for (int i = 0; i < 10; ++i) {
      b.col(i) = vech4(vecs[i] * vecs[i].transpose());
    }
    return Eigen::PartialPivLU<Eigen::Matrix<double, 10, 10>>(b);
  }();
  return lu;
}

}  // namespace

Eigen::Matrix<double, 10, 1> SymBasisMoments::decompose(
    const Eigen::Vector4d& w) {
  return basis_lu().solve(vech4(w * w.transpose()));
}

Eigen::Matrix3d SymBasisMoments::second_moment(const Eigen::Vector4d& w) const {
  const auto alpha = decompose(w);
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 10; ++i) m += alpha[i] * second_moments[i];
  return m;
}

PointGaussian SymBasisMoments::point_gaussian(const Eigen::Vector4d& w) const {
  PointGaussian pg;
  pg.mean = mean_phi_t * w;
  pg.covariance = second_moment(w) - pg.mean * pg.mean.transpose();
  pg.covariance = 0.5 * (pg.covariance + pg.covariance.transpose());
  return pg;
}

SymBasisMoments sym_basis_moments(const LabelPosterior& posterior, int samples,
                                  uint64_t seed) {
  const auto boxes = sample_posterior_boxes(posterior, samples, seed);
  SymBasisMoments out;
  const auto& vecs = SymBasisMoments::basis();
  for (const BoxParams& b : boxes) {
    const FeatureMatrix phi_t = feature_matrix(b);
    out.mean_phi_t += phi_t;
    for (int i = 0; i < 10; ++i) {
      const Eigen::Vector3d u = phi_t * vecs[i];
      out.second_moments[i] += u * u.transpose();
    }
  }
  const double n = static_cast<double>(boxes.size());
  out.mean_phi_t /= n;
  for (auto& m : out.second_moments) m /= n;
  return out;
}

ParameterRecovery param_recovery(const SymBasisMoments& moments) {
  ParameterRecovery rec;
  const PointGaussian center =
      moments.point_gaussian(Eigen::Vector4d{0, 0, 0, 1});
  rec.center_mean = center.mean;
  rec.center_covariance = center.covariance;
  rec.length_sq = moments.second_moment(Eigen::Vector4d{1, 0, 0, 0}).trace();
  rec.width_sq = moments.second_moment(Eigen::Vector4d{0, 1, 0, 0}).trace();
  rec.height_sq = moments.second_moment(Eigen::Vector4d{0, 0, 1, 0}).trace();
  return rec;
}

void DiscreteBoxDistribution::validate() const {
  if (modes.empty()) throw std::invalid_argument("no modes");
  double sum = 0.0;
  for (const auto& [box, weight] : modes) {
    box.validate();
    if (!(weight > 0.0)) throw std::invalid_argument("mode weight <= 0");
    sum += weight;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("mode weights must sum to 1");
  }
}

GridSpec default_grid_spec(const LabelPosterior& posterior, double resolution,
                           int samples, uint64_t seed) {
  posterior.validate();
  Eigen::AlignedBox2d rect = footprint(posterior.mean);
  if (posterior.covariance.cwiseAbs().maxCoeff() >= kDeltaCovariance) {
    const SymBasisMoments moments =
        sym_basis_moments(posterior, samples, seed);
    const RasterOptions defaults;
    rect = posterior_support(
        posterior, moments, 4.0,
        PatchSmear(posterior.mean, defaults.interior_nx, defaults.interior_ny)
            .bound());
  }
  return GridSpec::cover(rect.min(), rect.max(), resolution);
}

GridSpec default_grid_spec(const DiscreteBoxDistribution& label,
                           double resolution) {
  label.validate();
  const Eigen::AlignedBox2d rect = union_footprint(label);
  return GridSpec::cover(rect.min(), rect.max(), resolution);
}

SpatialGrid rasterize_pg(const LabelPosterior& posterior, const GridSpec& spec,
                         const RasterOptions& opts) {
  posterior.validate();
  SpatialGrid grid = SpatialGrid::zeros(spec);
  if (posterior.covariance.cwiseAbs().maxCoeff() < kDeltaCovariance) {
    require_covers(spec, footprint(posterior.mean));
    add_box_coverage(grid, posterior.mean, 1.0, false);
    return grid;
  }
  const SymBasisMoments moments =
      sym_basis_moments(posterior, opts.samples, opts.seed);
  const PatchSmear smear(posterior.mean, opts.interior_nx, opts.interior_ny);
  require_covers(spec,
                 posterior_support(posterior, moments, 3.0, smear.bound()));
  const auto interior =
      sample_interior_points(opts.interior_nx, opts.interior_ny);
  const double weight = 1.0 / static_cast<double>(interior.size());
  for (const UnitPoint& v0 : interior) {
    const PointGaussian pg = moments.point_gaussian(homogeneous(v0));
    const Eigen::Matrix2d cov = pg.cov_bev();
    add_gaussian(grid, pg.mean_bev(), cov + smear.for_point(cov), weight);
  }
  return grid;
}

SpatialGrid rasterize_pg(const DiscreteBoxDistribution& label,
                         const GridSpec& spec) {
  label.validate();
  SpatialGrid grid = SpatialGrid::zeros(spec);
  require_covers(spec, union_footprint(label));
  for (const auto& [box, weight] : label.modes) {
    add_box_coverage(grid, box, weight, false);
  }
  return grid;
}

SpatialGrid rasterize_pdq(const LabelPosterior& posterior,
                          const GridSpec& spec, int samples, uint64_t seed) {
  posterior.validate();
  SpatialGrid grid = SpatialGrid::zeros(spec);
  if (posterior.covariance.cwiseAbs().maxCoeff() < kDeltaCovariance) {
    require_covers(spec, footprint(posterior.mean));
    add_box_coverage(grid, posterior.mean, 1.0, true);
    return grid;
  }
  require_covers(spec, posterior_support(
                           posterior, sym_basis_moments(posterior, samples,
                                                        seed),
                           3.0, Eigen::Matrix2d::Zero()));
  const auto boxes = sample_posterior_boxes(posterior, samples, seed);
  const double share = 1.0 / static_cast<double>(boxes.size());
  for (const BoxParams& b : boxes) {
    const Eigen::AlignedBox2d rect = footprint(b);
    const double c = std::cos(b.yaw);
    const double s = std::sin(b.yaw);
    const int ix0 = std::max(
        0, static_cast<int>(std::floor((rect.min().x() - spec.origin.x()) /
                                       spec.resolution)));
    const int iy0 = std::max(
        0, static_cast<int>(std::floor((rect.min().y() - spec.origin.y()) /
                                       spec.resolution)));
    const int ix1 = std::min(
        spec.width - 1,
        static_cast<int>(std::floor((rect.max().x() - spec.origin.x()) /
                                    spec.resolution)));
    const int iy1 = std::min(
        spec.height - 1,
        static_cast<int>(std::floor((rect.max().y() - spec.origin.y()) /
                                    spec.resolution)));
    for (int iy = iy0; iy <= iy1; ++iy) {
      for (int ix = ix0; ix <= ix1; ++ix) {
        const Eigen::Vector2d p = spec.cell_center(ix, iy);
        const double dx = p.x() - b.c1;
        const double dy = p.y() - b.c2;
        const double u = c * dx + s * dy;
        const double v = -s * dx + c * dy;
        if (std::abs(u) <= 0.5 * b.l && std::abs(v) <= 0.5 * b.w) {
          grid.at(ix, iy) += share;
        }
      }
    }
  }
  return grid;
}

SpatialGrid rasterize_pdq(const DiscreteBoxDistribution& label,
                          const GridSpec& spec) {
  label.validate();
  SpatialGrid grid = SpatialGrid::zeros(spec);
  require_covers(spec, union_footprint(label));
  for (const auto& [box, weight] : label.modes) {
    add_box_coverage(grid, box, weight, true);
  }
  return grid;
}

std::array<double, 4> corner_total_variance(const LabelPosterior& posterior,
                                            const Eigen::Vector2d& observer,
                                            int samples, uint64_t seed) {
  const SymBasisMoments moments = sym_basis_moments(posterior, samples, seed);
  const auto corners = box_corners_bev(posterior.mean);
  std::array<int, 4> order = {0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return (corners[a] - observer).squaredNorm() <
           (corners[b] - observer).squaredNorm();
  });
  std::array<double, 4> tv{};
  for (int rank = 0; rank < 4; ++rank) {
    const UnitPoint& v0 = corner_unit_points()[order[rank]];
    tv[rank] = moments.point_gaussian(homogeneous(v0)).total_variance();
  }
  return tv;
}

}  // namespace boxuq
