#pragma once

#include "boxuq/geometry.hpp"
#include "boxuq/point_cloud.hpp"

#include <Eigen/Dense>

#include <vector>

namespace boxuq {

using Vector5d = Eigen::Matrix<double, 5, 1>;
using Matrix5d = Eigen::Matrix<double, 5, 5>;

// BEV projections of the LiDAR returns segmented for one object.
struct ObjectPoints {
  std::vector<Eigen::Vector2d> points;

  int count() const { return static_cast<int>(points.size()); }
};

// One isotropic Gaussian generator pinned to the box surface.
struct SurfaceGenerator {
  UnitPoint v0;
  double sigma = 0.2;  // [m]
};

struct GenerativeSurfaceModel {
  std::vector<SurfaceGenerator> generators;

  // Generators walked along the BEV boundary at uniform arc length, all with
  // the same noise scale.
  static GenerativeSurfaceModel boundary(const BoxParams& box, double spacing,
                                         double sigma);

  int count() const { return static_cast<int>(generators.size()); }
  void validate() const;  // throws unless every sigma > 0 and count > 0

  // Generator positions v_j at the given box parameters, BEV.
  std::vector<Eigen::Vector2d> world_positions(const BoxParams& box) const;

  GenerativeSurfaceModel with_sigma(double sigma) const;
};

// Soft assignment of points to generators; column k holds the responsibility
// of each generator for point k and sums to 1.
struct Registration {
  Eigen::MatrixXd weights;  // M x K

  int generator_count() const { return static_cast<int>(weights.rows()); }
  int point_count() const { return static_cast<int>(weights.cols()); }
  // Throws unless entries lie in [0,1] and every column sums to 1. A zero
  // column count (no points) is valid.
  void validate() const;

  // Registration mass per generator: n_j = sum_k weights(j, k).
  Eigen::VectorXd masses() const { return weights.rowwise().sum(); }
};

// Gaussian prior over the BEV parameters [c1, c2, l, w, yaw].
struct GaussianPrior {
  Vector5d mean = Vector5d::Zero();
  Matrix5d covariance = Matrix5d::Identity();

  void validate() const;  // throws unless covariance symmetric positive definite
};

// Prior covariance (1/weight) * diag(0.44^2, 0.11^2, 0.25^2, 0.25^2, 0.17^2).
Matrix5d prior_covariance(double weight);
GaussianPrior default_prior(const BoxParams& mean_box, double weight);

// Gaussian posterior over [c1, c2, l, w, yaw]; the mean stays pinned to the
// annotated box, only the covariance is inferred.
struct LabelPosterior {
  BoxParams mean;
  Matrix5d covariance = Matrix5d::Zero();

  Vector5d mean_bev() const;
  void validate() const;  // throws unless covariance symmetric PSD

  static LabelPosterior delta(const BoxParams& box);
  static LabelPosterior diagonal(const BoxParams& box,
                                 const Vector5d& variances);
};

struct NoiseEstimate {
  double sigma = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Soft-max registration: column k is softmax_j(-|x_k - v_j|^2 / (2 sigma_j^2)),
// computed with the column max subtracted. No points yield an M x 0
// registration rather than an error.
Registration registration_weights(const ObjectPoints& points,
                                  const GenerativeSurfaceModel& model,
                                  const BoxParams& mean_box);

// Posterior covariance (P0^-1 + sum_j n_j/sigma_j^2 J_j^T J_j)^-1 with J_j the
// BEV Jacobian of the generator position at the annotated box. With no points
// the posterior covariance equals the prior covariance exactly.
LabelPosterior posterior(const ObjectPoints& points,
                         const GenerativeSurfaceModel& model,
                         const GaussianPrior& prior, const BoxParams& mean_box);
LabelPosterior posterior(const ObjectPoints& points,
                         const GenerativeSurfaceModel& model,
                         const GaussianPrior& prior, const BoxParams& mean_box,
                         const Registration& registration);

struct EmOptions {
  int max_iters = 100;
  double tol = 1e-4;      // absolute change in sigma [m]
  double sigma_floor = 0.01;
  double init_sigma = 0.5;
  // Divide the weighted squared residuals by M*d (generator count) instead of
  // K*d (point count).
  bool literal_m_normalization = false;
};

// Alternates registration with the closed-form noise update
// sigma^2 = (1/(K d)) sum_jk phi_jk |x_k - v_j|^2, d = 2.
NoiseEstimate em_sigma(const ObjectPoints& points,
                       const GenerativeSurfaceModel& model,
                       const BoxParams& mean_box, const EmOptions& opts = {});

// BEV crop of the cloud to the annotated box grown by margin on each side.
ObjectPoints segment_points(const PointCloud& cloud, const BoxParams& box,
                            double margin);

struct InferenceParams {
  double prior_weight = 1.0;
  double sigma = 0.2;        // [m]; ignored when estimate_sigma is set
  bool estimate_sigma = false;
  double spacing = 0.1;      // generator arc spacing [m]
  double margin = 0.1;       // segmentation margin [m]
  EmOptions em;
};

// Segmented points + annotation -> posterior, with optional EM noise fit.
LabelPosterior infer_label_posterior(const ObjectPoints& points,
                                     const BoxParams& annotation,
                                     const InferenceParams& params = {});

}  // namespace boxuq
