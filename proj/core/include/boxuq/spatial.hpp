#pragma once

#include "boxuq/inference.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace boxuq {

// Axis-aligned BEV raster; cell (ix, iy) covers the square of side
// `resolution` whose lower-left corner is origin + (ix, iy) * resolution.
struct GridSpec {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double resolution = 0.1;
  int width = 0;
  int height = 0;

  int cell_count() const { return width * height; }
  double cell_area() const { return resolution * resolution; }
  Eigen::Vector2d cell_center(int ix, int iy) const;
  Eigen::Vector2d max_corner() const;
  bool contains_point(const Eigen::Vector2d& p) const;
  bool covers_rect(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi) const;
  void validate() const;

  // Smallest lattice-aligned spec whose extent contains [lo, hi], padded by
  // one cell on every side.
  static GridSpec cover(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                        double resolution);
};

struct SpatialGrid {
  GridSpec spec;
  std::vector<double> values;  // row-major, index iy * width + ix

  static SpatialGrid zeros(const GridSpec& spec);
  double& at(int ix, int iy);
  double at(int ix, int iy) const;
  double mass() const;  // sum(values) * cell_area, compensated summation
  double peak() const;
};

void write_grid_csv(const SpatialGrid& grid, std::ostream& out);
void write_grid_csv(const SpatialGrid& grid, const std::string& path);
SpatialGrid read_grid_csv(std::istream& in);
SpatialGrid read_grid_csv(const std::string& path);

// 16-bit binary PGM scaled so the peak maps to 65535; top image row is the
// highest-y grid row.
void write_grid_pgm16(const SpatialGrid& grid, const std::string& path);

// Transposed feature matrix: box_to_world(box, v0) = feature_matrix(box) *
// homogeneous(v0).
using FeatureMatrix = Eigen::Matrix<double, 3, 4>;
FeatureMatrix feature_matrix(const BoxParams& box);
Eigen::Vector4d homogeneous(const UnitPoint& v0);

// Gaussian approximation of the world position of one unit point under a box
// posterior.
struct PointGaussian {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();

  Eigen::Vector2d mean_bev() const { return mean.head<2>(); }
  Eigen::Matrix2d cov_bev() const { return covariance.topLeftCorner<2, 2>(); }
  double total_variance() const { return covariance.trace(); }
};

// Deterministic posterior draws: BEV parameters from the Gaussian, c3 and h
// copied from the mean; sampled l, w clamped to >= 1e-3.
std::vector<BoxParams> sample_posterior_boxes(const LabelPosterior& posterior,
                                              int samples, uint64_t seed);

// Sample-moment Gaussian of box_to_world(., v0) under the posterior.
PointGaussian point_moments(const UnitPoint& v0,
                            const LabelPosterior& posterior, int samples,
                            uint64_t seed);

// Moments of the feature matrix: E[Phi^T] plus the ten second-moment matrices
// E[Phi w_i w_i^T Phi^T] over a fixed basis of Sym(4). Any homogeneous unit
// point w yields its point Gaussian as a linear combination, so one sampling
// pass serves every unit point.
class SymBasisMoments {
 public:
  // Eigen matrices do not zero themselves on value-initialization.
  SymBasisMoments() {
    for (auto& m : second_moments) m.setZero();
  }

  static const std::array<Eigen::Vector4d, 10>& basis();
  // Coefficients alpha with w w^T = sum_i alpha_i w_i w_i^T.
  static Eigen::Matrix<double, 10, 1> decompose(const Eigen::Vector4d& w);

  Eigen::Matrix3d second_moment(const Eigen::Vector4d& w) const;
  PointGaussian point_gaussian(const Eigen::Vector4d& w) const;

  FeatureMatrix mean_phi_t = FeatureMatrix::Zero();
  std::array<Eigen::Matrix3d, 10> second_moments{};
};

SymBasisMoments sym_basis_moments(const LabelPosterior& posterior, int samples,
                                  uint64_t seed);

// Box parameters recovered from feature-matrix moments alone.
struct ParameterRecovery {
  Eigen::Vector3d center_mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d center_covariance = Eigen::Matrix3d::Zero();
  double length_sq = 0.0;  // E[l^2]
  double width_sq = 0.0;   // E[w^2]
  double height_sq = 0.0;  // E[h^2]
};

ParameterRecovery param_recovery(const SymBasisMoments& moments);

// Label given as a small set of weighted box hypotheses.
struct DiscreteBoxDistribution {
  std::vector<std::pair<BoxParams, double>> modes;

  void validate() const;  // weights positive, summing to 1 within 1e-9
};

struct RasterOptions {
  int interior_nx = 16;
  int interior_ny = 16;
  int samples = 1024;
  uint64_t seed = 0;
};

// Lattice-aligned spec covering the mean footprint and the 3-sigma rects of
// the corner point Gaussians.
GridSpec default_grid_spec(const LabelPosterior& posterior, double resolution,
                           int samples = 1024, uint64_t seed = 0);
GridSpec default_grid_spec(const DiscreteBoxDistribution& label,
                           double resolution);

// Spatial density: mixture of the interior-point Gaussians, uniform weights.
// Integrates to ~1 over a grid that holds the support. A zero-covariance
// posterior short-circuits to the exact uniform box density via cell
// coverage. Throws (with the required extent) when the grid cannot hold the
// mean footprint plus the 3-sigma corner support.
SpatialGrid rasterize_pg(const LabelPosterior& posterior, const GridSpec& spec,
                         const RasterOptions& opts = {});
SpatialGrid rasterize_pg(const DiscreteBoxDistribution& label,
                         const GridSpec& spec);

// Box-membership probability per cell, in [0, 1]; not normalized. Posterior
// version uses Monte Carlo membership of cell centers; discrete version uses
// exact cell coverage.
SpatialGrid rasterize_pdq(const LabelPosterior& posterior,
                          const GridSpec& spec, int samples, uint64_t seed);
SpatialGrid rasterize_pdq(const DiscreteBoxDistribution& label,
                          const GridSpec& spec);

// Traces of the corner point-Gaussian covariances, sorted ascending by the
// distance of the mean-box corner to the observer (index 0 = nearest corner).
// Equidistant corners keep the box_corners_bev order.
std::array<double, 4> corner_total_variance(const LabelPosterior& posterior,
                                            const Eigen::Vector2d& observer,
                                            int samples = 1024,
                                            uint64_t seed = 0);

}  // namespace boxuq
