#include "boxuq/inference.hpp"

#include <cmath>
#include <stdexcept>

namespace boxuq {

namespace {

// d/dy of the BEV generator position at y = [c1, c2, l, w, yaw], evaluated at
// the annotated box.
Eigen::Matrix<double, 2, 5> position_jacobian(const BoxParams& box,
                                              const UnitPoint& v0) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  Eigen::Matrix<double, 2, 5> j;
  j(0, 0) = 1.0;
  j(1, 0) = 0.0;
  j(0, 1) = 0.0;
  j(1, 1) = 1.0;
  j(0, 2) = c * v0.v1;
  j(1, 2) = s * v0.v1;
  j(0, 3) = -s * v0.v2;
  j(1, 3) = c * v0.v2;
  j(0, 4) = -s * box.l * v0.v1 - c * box.w * v0.v2;
  j(1, 4) = c * box.l * v0.v1 - s * box.w * v0.v2;
  return j;
}

}  // namespace

GenerativeSurfaceModel GenerativeSurfaceModel::boundary(const BoxParams& box,
                                                        double spacing,
                                                        double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
  GenerativeSurfaceModel model;
  for (const UnitPoint& v0 : sample_boundary_points(box, spacing)) {
    model.generators.push_back({v0, sigma});
  }
  return model;
}

void GenerativeSurfaceModel::validate() const {
  if (generators.empty()) {
    throw std::invalid_argument("surface model has no generators");
  }
  for (const auto& g : generators) {
    if (!(g.sigma > 0.0) || !std::isfinite(g.sigma)) {
      throw std::invalid_argument("generator sigma must be positive");
    }
  }
}

std::vector<Eigen::Vector2d> GenerativeSurfaceModel::world_positions(
    const BoxParams& box) const {
  std::vector<Eigen::Vector2d> out;
  out.reserve(generators.size());
  for (const auto& g : generators) {
    out.push_back(box_to_world_bev(box, g.v0.v1, g.v0.v2));
  }
  return out;
}

GenerativeSurfaceModel GenerativeSurfaceModel::with_sigma(double sigma) const {
  GenerativeSurfaceModel out = *this;
  for (auto& g : out.generators) g.sigma = sigma;
  return out;
}

void Registration::validate() const {
  if (weights.rows() == 0) {
    throw std::invalid_argument("registration has no generators");
  }
  for (int k = 0; k < weights.cols(); ++k) {
    double sum = 0.0;
    for (int j = 0; j < weights.rows(); ++j) {
      const double v = weights(j, k);
      if (!(v >= 0.0 && v <= 1.0 + 1e-12)) {
        throw std::invalid_argument("registration weight outside [0, 1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("registration column does not sum to 1");
    }
  }
}

void GaussianPrior::validate() const {
  if (!covariance.isApprox(covariance.transpose(), 1e-9)) {
    throw std::invalid_argument("prior covariance not symmetric");
  }
  Eigen::LLT<Matrix5d> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("prior covariance not positive definite");
  }
}

Matrix5d prior_covariance(double weight) {
  if (!(weight > 0.0)) throw std::invalid_argument("weight must be positive");
  Vector5d stds;
  stds << 0.44, 0.11, 0.25, 0.25, 0.17;
  return stds.array().square().matrix().asDiagonal() * (1.0 / weight);
}

GaussianPrior default_prior(const BoxParams& mean_box, double weight) {
  GaussianPrior prior;
  prior.mean << mean_box.c1, mean_box.c2, mean_box.l, mean_box.w, mean_box.yaw;
  prior.covariance = prior_covariance(weight);
  return prior;
}

Vector5d LabelPosterior::mean_bev() const {
  Vector5d v;
  v << mean.c1, mean.c2, mean.l, mean.w, mean.yaw;
  return v;
}

void LabelPosterior::validate() const {
  mean.validate();
  if (!covariance.isApprox(covariance.transpose(), 1e-9)) {
    throw std::invalid_argument("posterior covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix5d> es(covariance);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw std::invalid_argument("posterior covariance not PSD");
  }
}

LabelPosterior LabelPosterior::delta(const BoxParams& box) {
  LabelPosterior p;
  p.mean = box.normalized();
  p.covariance.setZero();
  return p;
}

LabelPosterior LabelPosterior::diagonal(const BoxParams& box,
                                        const Vector5d& variances) {
  if ((variances.array() < 0.0).any()) {
    throw std::invalid_argument("variances must be non-negative");
  }
  LabelPosterior p;
  p.mean = box.normalized();
  p.covariance = variances.asDiagonal();
  return p;
}

Registration registration_weights(const ObjectPoints& points,
                                  const GenerativeSurfaceModel& model,
                                  const BoxParams& mean_box) {
  model.validate();
  mean_box.validate();
  const auto positions = model.world_positions(mean_box);
  const int m = model.count();
  const int k = points.count();
  Registration reg;
  reg.weights.resize(m, k);
  if (k == 0) return reg;
  Eigen::VectorXd logits(m);
  for (int col = 0; col < k; ++col) {
    for (int j = 0; j < m; ++j) {
      const double d2 = (points.points[col] - positions[j]).squaredNorm();
      logits[j] = -d2 / (2.0 * model.generators[j].sigma *
                         model.generators[j].sigma);
    }
    const double top = logits.maxCoeff();
    const Eigen::VectorXd e = (logits.array() - top).exp();
    reg.weights.col(col) = e / e.sum();
  }
  return reg;
}

LabelPosterior posterior(const ObjectPoints& points,
                         const GenerativeSurfaceModel& model,
                         const GaussianPrior& prior,
                         const BoxParams& mean_box) {
  if (points.count() == 0) {
    model.validate();
    prior.validate();
    mean_box.validate();
    LabelPosterior post;
    post.mean = mean_box.normalized();
    post.covariance = prior.covariance;
    return post;
  }
  return posterior(points, model, prior, mean_box,
                   registration_weights(points, model, mean_box));
}

LabelPosterior posterior(const ObjectPoints& points,
                         const GenerativeSurfaceModel& model,
                         const GaussianPrior& prior, const BoxParams& mean_box,
                         const Registration& registration) {
  model.validate();
  prior.validate();
  mean_box.validate();
  registration.validate();
  if (registration.generator_count() != model.count() ||
      registration.point_count() != points.count()) {
    throw std::invalid_argument("registration shape mismatch");
  }
  const Eigen::VectorXd masses = registration.masses();
  if (masses.sum() <= 0.0) {
    LabelPosterior post;
    post.mean = mean_box.normalized();
    post.covariance = prior.covariance;
    return post;
  }
  Matrix5d precision = prior.covariance.inverse();
  for (int j = 0; j < model.count(); ++j) {
    if (masses[j] <= 0.0) continue;
    const auto jac = position_jacobian(mean_box, model.generators[j].v0);
    const double s2 =
        model.generators[j].sigma * model.generators[j].sigma;
    precision += (masses[j] / s2) * (jac.transpose() * jac);
  }
  LabelPosterior post;
  post.mean = mean_box.normalized();
  post.covariance = precision.inverse();
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose());
  return post;
}

NoiseEstimate em_sigma(const ObjectPoints& points,
                       const GenerativeSurfaceModel& model,
                       const BoxParams& mean_box, const EmOptions& opts) {
  model.validate();
  mean_box.validate();
  if (points.count() == 0) throw std::invalid_argument("no points for EM");
  const auto positions = model.world_positions(mean_box);
  const int m = model.count();
  const int k = points.count();
  constexpr double kDim = 2.0;

  NoiseEstimate est;
  est.sigma = opts.init_sigma;
  GenerativeSurfaceModel current = model;
  for (int it = 0; it < opts.max_iters; ++it) {
    current = current.with_sigma(est.sigma);
    const Registration reg = registration_weights(points, current, mean_box);
    double wsum = 0.0;
    for (int col = 0; col < k; ++col) {
      for (int j = 0; j < m; ++j) {
        wsum += reg.weights(j, col) *
                (points.points[col] - positions[j]).squaredNorm();
      }
    }
    const double denom = (opts.literal_m_normalization ? m : k) * kDim;
    const double next = std::max(std::sqrt(wsum / denom), opts.sigma_floor);
    est.iterations = it + 1;
    if (std::abs(next - est.sigma) < opts.tol) {
      est.sigma = next;
      est.converged = true;
      return est;
    }
    est.sigma = next;
  }
  return est;
}

ObjectPoints segment_points(const PointCloud& cloud, const BoxParams& box,
                            double margin) {
  box.validate();
  if (margin < 0.0) throw std::invalid_argument("margin must be non-negative");
  BoxParams grown = box;
  grown.l += 2.0 * margin;
  grown.w += 2.0 * margin;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  ObjectPoints out;
  for (const LidarPoint& p : cloud) {
    const double dx = p.x - box.c1;
    const double dy = p.y - box.c2;
    const double u = c * dx + s * dy;   // along heading
    const double v = -s * dx + c * dy;  // across heading
    if (std::abs(u) <= 0.5 * grown.l && std::abs(v) <= 0.5 * grown.w) {
      out.points.emplace_back(p.x, p.y);
    }
  }
  return out;
}

LabelPosterior infer_label_posterior(const ObjectPoints& points,
                                     const BoxParams& annotation,
                                     const InferenceParams& params) {
  annotation.validate();
  const GaussianPrior prior = default_prior(annotation, params.prior_weight);
  if (points.count() == 0) {
    LabelPosterior post;
    post.mean = annotation.normalized();
    post.covariance = prior.covariance;
    return post;
  }
  double sigma = params.sigma;
  GenerativeSurfaceModel model =
      GenerativeSurfaceModel::boundary(annotation, params.spacing, 0.2);
  if (params.estimate_sigma) {
    sigma = em_sigma(points, model, annotation, params.em).sigma;
  }
  model = model.with_sigma(sigma);
  return posterior(points, model, prior, annotation);
}

}  // namespace boxuq
