#include <boxuq/spatial.hpp>

#include <gtest/gtest.h>

#include <boxuq/eval.hpp>
#include <boxuq/inference.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "helpers.hpp"

namespace boxuq {
namespace {

constexpr double kPi = std::numbers::pi;

// Oracle: closed-form (uniform box) convolved with (axis-aligned Gaussian),
// evaluated with error functions; valid for yaw 0 and diagonal center
// covariance.
double convolved_uniform_density(const Eigen::Vector2d& u, const BoxParams& box,
                                 double sx, double sy) {
  auto cdf = [](double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); };
  const double fx = cdf((u.x() - (box.c1 - 0.5 * box.l)) / sx) -
                    cdf((u.x() - (box.c1 + 0.5 * box.l)) / sx);
  const double fy = cdf((u.y() - (box.c2 - 0.5 * box.w)) / sy) -
                    cdf((u.y() - (box.c2 + 0.5 * box.w)) / sy);
  return fx * fy / (box.l * box.w);
}

BoxParams make_box(double c1, double c2, double l, double w, double yaw) {
  BoxParams box;
  box.c1 = c1;
  box.c2 = c2;
  box.c3 = 0.75;
  box.l = l;
  box.w = w;
  box.h = 1.5;
  box.yaw = yaw;
  return box;
}

LabelPosterior center_only_posterior(const BoxParams& box, double var_x,
                                     double var_y) {
  Vector5d variances = Vector5d::Zero();
  variances[0] = var_x;
  variances[1] = var_y;
  return LabelPosterior::diagonal(box, variances);
}

TEST(FeatureMatrixTest, UnitBoxAtOriginIsTheIdentityBlock) {
  BoxParams box = make_box(0, 0, 1, 1, 0);
  box.c3 = 0.0;
  box.h = 1.0;
  const FeatureMatrix m = feature_matrix(box);
  FeatureMatrix want;
  want << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0;
  EXPECT_LT((m - want).norm(), 1e-15);
}

TEST(FeatureMatrixTest, HomogeneousTranslationColumnIsTheCenter) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const BoxParams box = test::random_box(rng);
    const Eigen::Vector3d c = feature_matrix(box) * Eigen::Vector4d(0, 0, 0, 1);
    EXPECT_EQ(c.x(), box.c1);
    EXPECT_EQ(c.y(), box.c2);
    EXPECT_EQ(c.z(), box.c3);
  }
}

TEST(FeatureMatrixTest, AgreesWithBoxToWorld) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (int i = 0; i < 100; ++i) {
    const BoxParams box = test::random_box(rng);
    const UnitPoint v0{unit(rng), unit(rng), unit(rng)};
    const Eigen::Vector3d via_matrix = feature_matrix(box) * homogeneous(v0);
    const Eigen::Vector3d direct = box_to_world(box, v0);
    EXPECT_LT((via_matrix - direct).norm(), 1e-12);
  }
}

TEST(PointMomentsTest, DeltaPosteriorIsDeterministic) {
  const BoxParams box = make_box(2, -1, 4, 2, 0.4);
  const LabelPosterior post = LabelPosterior::delta(box);
  const UnitPoint v0{0.5, -0.25, 0.1};
  const PointGaussian g = point_moments(v0, post, 256, 7);
  // E[x x^T] - mu mu^T cancels to rounding noise, not exact zero.
  EXPECT_LT(g.covariance.norm(), 1e-12);
  EXPECT_LT((g.mean - box_to_world(box, v0)).norm(), 1e-12);
}

TEST(PointMomentsTest, CenterOnlyUncertaintyIsTranslationInvariant) {
  const BoxParams box = make_box(1, 2, 4, 2, 0.3);
  const LabelPosterior post = center_only_posterior(box, 0.09, 0.04);
  const uint64_t seed = 11;
  const PointGaussian at_center =
      point_moments({0, 0, 0}, post, 4096, seed);
  for (const UnitPoint v0 :
       {UnitPoint{0.5, 0.5, 0.0}, UnitPoint{-0.3, 0.2, 0.4}}) {
    const PointGaussian g = point_moments(v0, post, 4096, seed);
    // Same draws, so the covariances agree exactly and the means differ by
    // the fixed body-frame offset.
    EXPECT_LT((g.covariance - at_center.covariance).norm(), 1e-12);
    const Eigen::Vector3d offset =
        box_to_world(box, v0) - box_to_world(box, {0, 0, 0});
    EXPECT_LT((g.mean - at_center.mean - offset).norm(), 1e-9);
  }
  EXPECT_NEAR(at_center.covariance(0, 0), 0.09, 0.009);
  EXPECT_NEAR(at_center.covariance(1, 1), 0.04, 0.004);
}

TEST(SymBasisMomentsTest, ReconstructsDirectPointMoments) {
  const BoxParams box = make_box(3, -2, 4.4, 1.8, 0.6);
  Vector5d variances;
  variances << 0.05, 0.02, 0.04, 0.03, 0.02;
  const LabelPosterior post = LabelPosterior::diagonal(box, variances);
  const uint64_t seed = 13;
  const int samples = 2048;
  const SymBasisMoments moments = sym_basis_moments(post, samples, seed);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (int i = 0; i < 20; ++i) {
    const UnitPoint v0{unit(rng), unit(rng), unit(rng)};
    const PointGaussian direct = point_moments(v0, post, samples, seed);
    const PointGaussian combined = moments.point_gaussian(homogeneous(v0));
    EXPECT_LT((combined.mean - direct.mean).norm(), 1e-10);
    EXPECT_LT((combined.covariance - direct.covariance).norm(), 1e-10);
  }
}

TEST(SymBasisMomentsTest, BasisVectorsDecomposeToOneHot) {
  for (std::size_t i = 0; i < SymBasisMoments::basis().size(); ++i) {
    const auto alpha = SymBasisMoments::decompose(SymBasisMoments::basis()[i]);
    for (std::size_t j = 0; j < 10; ++j)
      EXPECT_NEAR(alpha[j], i == j ? 1.0 : 0.0, 1e-12);
  }
}

TEST(SymBasisMomentsTest, DecompositionReproducesOuterProduct) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector4d w(unit(rng), unit(rng), unit(rng), 1.0);
    const auto alpha = SymBasisMoments::decompose(w);
    Eigen::Matrix4d sum = Eigen::Matrix4d::Zero();
    Eigen::Vector4d first_moment = Eigen::Vector4d::Zero();
    for (int j = 0; j < 10; ++j) {
      const Eigen::Vector4d& wj = SymBasisMoments::basis()[j];
      sum += alpha[j] * wj * wj.transpose();
      first_moment += alpha[j] * wj;
    }
    EXPECT_LT((sum - w * w.transpose()).norm(), 1e-12);
    // The shared last component makes the first moment follow for free.
    EXPECT_LT((first_moment - w).norm(), 1e-12);
  }
}

TEST(ParamRecoveryTest, DeterministicBoxRecoversSquaredSizeExactly) {
  const BoxParams box = make_box(1, 1, 4, 2, 0.2);
  const SymBasisMoments moments =
      sym_basis_moments(LabelPosterior::delta(box), 64, 3);
  const ParameterRecovery rec = param_recovery(moments);
  EXPECT_NEAR(rec.length_sq, 16.0, 1e-9);
  EXPECT_NEAR(rec.width_sq, 4.0, 1e-9);
  EXPECT_NEAR(rec.height_sq, box.h * box.h, 1e-9);
  EXPECT_LT(rec.center_covariance.norm(), 1e-12);
}

TEST(ParamRecoveryTest, GaussianLengthSecondMoment) {
  const BoxParams box = make_box(0, 0, 4, 2, 0);
  Vector5d variances = Vector5d::Zero();
  variances[2] = 0.06;
  const LabelPosterior post = LabelPosterior::diagonal(box, variances);
  const ParameterRecovery rec =
      param_recovery(sym_basis_moments(post, 8192, 21));
  EXPECT_NEAR(rec.length_sq, 16.06, 0.02 * 16.06);
}

TEST(ParamRecoveryTest, CenterVarianceMatchesPosteriorMarginal) {
  const BoxParams box = make_box(5, -4, 4.5, 1.9, 0.8);
  Vector5d variances;
  variances << 0.09, 0.04, 0.05, 0.03, 0.01;
  const LabelPosterior post = LabelPosterior::diagonal(box, variances);
  const ParameterRecovery rec =
      param_recovery(sym_basis_moments(post, 4096, 2));
  EXPECT_NEAR(rec.center_covariance(0, 0), 0.09, 0.02 * 0.09);
  EXPECT_NEAR(rec.center_covariance(1, 1), 0.04, 0.02 * 0.04);
}

TEST(RasterizePgTest, DeltaPosteriorIsExactlyUniform) {
  const BoxParams box = make_box(0, 0, 4, 2, 0);
  const LabelPosterior post = LabelPosterior::delta(box);
  const GridSpec spec = GridSpec::cover({-2.5, -1.5}, {2.5, 1.5}, 0.1);
  const SpatialGrid grid = rasterize_pg(post, spec);
  EXPECT_NEAR(grid.mass(), 1.0, 1e-9);
  const double uniform = 1.0 / 8.0;
  EXPECT_NEAR(grid.peak(), uniform, 1e-9);
  // Interior cell fully inside the box.
  const Eigen::Vector2d center_cell(0.05, 0.05);
  const int ix = static_cast<int>((center_cell.x() - spec.origin.x()) / 0.1);
  const int iy = static_cast<int>((center_cell.y() - spec.origin.y()) / 0.1);
  EXPECT_NEAR(grid.at(ix, iy), uniform, 1e-12);
  // Far corner cell outside the box.
  EXPECT_EQ(grid.at(0, 0), 0.0);
}

TEST(RasterizePgTest, RotatedDeltaKeepsUnitMass) {
  const BoxParams box = make_box(1, -2, 4.3, 1.7, 0.77);
  const LabelPosterior post = LabelPosterior::delta(box);
  const GridSpec spec = default_grid_spec(post, 0.1);
  const SpatialGrid grid = rasterize_pg(post, spec);
  EXPECT_NEAR(grid.mass(), 1.0, 1e-9);
  EXPECT_NEAR(grid.peak(), 1.0 / (box.l * box.w), 1e-9);
}

TEST(RasterizePgTest, CenterOnlyMatchesConvolutionOracle) {
  const BoxParams box = make_box(0, 0, 4, 2, 0);
  const LabelPosterior post = center_only_posterior(box, 0.09, 0.04);
  RasterOptions opts;
  opts.samples = 32768;
  opts.seed = 4;
  const GridSpec spec = default_grid_spec(post, 0.1, opts.samples, opts.seed);
  const SpatialGrid grid = rasterize_pg(post, spec, opts);
  EXPECT_NEAR(grid.mass(), 1.0, 0.01);

  double peak = 0.0, sq_sum = 0.0;
  for (int iy = 0; iy < spec.height; ++iy) {
    for (int ix = 0; ix < spec.width; ++ix) {
      const double want =
          convolved_uniform_density(spec.cell_center(ix, iy), box, 0.3, 0.2);
      peak = std::max(peak, want);
      const double err = grid.at(ix, iy) - want;
      sq_sum += err * err;
    }
  }
  const double rms = std::sqrt(sq_sum / spec.cell_count());
  EXPECT_LT(rms, 0.01 * peak);
}

TEST(RasterizePgTest, StrongerPriorConcentratesTheDensity) {
  const BoxParams box = make_box(0, 0, 4, 2, 0.2);
  ObjectPoints points;  // sparse: five points on the front face
  for (int i = 0; i < 5; ++i)
    points.points.push_back(box_to_world(box, {0.5, -0.4 + 0.2 * i, 0.0})
                                .head<2>());
  std::vector<LabelPosterior> posts;
  InferenceParams params;
  for (const double weight : {0.1, 1.0, 10.0}) {
    params.prior_weight = weight;
    posts.push_back(infer_label_posterior(points, box, params));
  }
  // One grid for all renders keeps the entropies comparable; the loosest
  // posterior has the widest support.
  const GridSpec spec = default_grid_spec(posts.front(), 0.1);
  std::vector<double> entropies;
  for (const LabelPosterior& post : posts) {
    const SpatialGrid grid = rasterize_pg(post, spec);
    double h = 0.0;
    for (const double v : grid.values)
      if (v > 0.0) h -= v * std::log(v) * spec.cell_area();
    entropies.push_back(h);
  }
  EXPECT_GT(entropies[0], entropies[1]);
  EXPECT_GT(entropies[1], entropies[2]);
}

TEST(RasterizePgTest, UndersizedGridReportsRequiredExtent) {
  const BoxParams box = make_box(0, 0, 4, 2, 0);
  const LabelPosterior post = center_only_posterior(box, 0.09, 0.04);
  GridSpec small;
  small.origin = {-1.0, -1.0};
  small.resolution = 0.1;
  small.width = 20;
  small.height = 20;
  try {
    rasterize_pg(post, small);
    FAIL() << "expected a support error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("extent"), std::string::npos);
  }
}

TEST(RasterizePgTest, DiscreteMixtureWeightsDensities) {
  DiscreteBoxDistribution dist;
  dist.modes = {{make_box(0, 0, 4, 2, 0), 0.5},
                {make_box(20, 0, 8, 4, 0), 0.5}};
  const GridSpec spec = default_grid_spec(dist, 0.1);
  const SpatialGrid grid = rasterize_pg(dist, spec);
  EXPECT_NEAR(grid.mass(), 1.0, 1e-9);
  auto value_at = [&](double x, double y) {
    const int ix = static_cast<int>((x - spec.origin.x()) / spec.resolution);
    const int iy = static_cast<int>((y - spec.origin.y()) / spec.resolution);
    return grid.at(ix, iy);
  };
  EXPECT_NEAR(value_at(0.05, 0.05), 0.5 / 8.0, 1e-12);
  EXPECT_NEAR(value_at(20.05, 0.05), 0.5 / 32.0, 1e-12);
}

TEST(RasterizePdqTest, DeltaPosteriorIsTheIndicator) {
  const BoxParams box = make_box(0, 0, 4, 2, 0);
  const LabelPosterior post = LabelPosterior::delta(box);
  const GridSpec spec = GridSpec::cover({-2.5, -1.5}, {2.5, 1.5}, 0.1);
  const SpatialGrid grid = rasterize_pdq(post, spec, 128, 3);
  const int ix = static_cast<int>((0.05 - spec.origin.x()) / 0.1);
  const int iy = static_cast<int>((0.05 - spec.origin.y()) / 0.1);
  EXPECT_NEAR(grid.at(ix, iy), 1.0, 1e-12);
  EXPECT_EQ(grid.at(0, 0), 0.0);
  EXPECT_LE(grid.peak(), 1.0 + 1e-12);
}

TEST(RasterizePdqTest, EqualTwoModeDistributionIsHalfInsideEach) {
  DiscreteBoxDistribution dist;
  dist.modes = {{make_box(0, 0, 4, 2, 0), 0.5},
                {make_box(20, 0, 4, 2, 0), 0.5}};
  const GridSpec spec = default_grid_spec(dist, 0.1);
  const SpatialGrid grid = rasterize_pdq(dist, spec);
  auto value_at = [&](double x, double y) {
    const int ix = static_cast<int>((x - spec.origin.x()) / spec.resolution);
    const int iy = static_cast<int>((y - spec.origin.y()) / spec.resolution);
    return grid.at(ix, iy);
  };
  EXPECT_NEAR(value_at(0.05, 0.05), 0.5, 1e-12);
  EXPECT_NEAR(value_at(20.05, 0.05), 0.5, 1e-12);
}

TEST(RasterizePdqTest, SizeDeterministicPosteriorScalesWithArea) {
  const BoxParams box = make_box(0, 0, 4, 2, 0);
  const LabelPosterior post = center_only_posterior(box, 0.04, 0.02);
  RasterOptions opts;
  opts.samples = 16384;
  opts.seed = 9;
  const GridSpec spec = default_grid_spec(post, 0.1, opts.samples, opts.seed);
  const SpatialGrid pg = rasterize_pg(post, spec, opts);
  const SpatialGrid pdq = rasterize_pdq(post, spec, opts.samples, opts.seed);
  const double area = box.l * box.w;
  const double floor = 0.5 * pg.peak();
  int compared = 0;
  for (int i = 0; i < spec.cell_count(); ++i) {
    if (pg.values[i] < floor) continue;
    ++compared;
    EXPECT_NEAR(pdq.values[i] / (pg.values[i] * area), 1.0, 0.04);
  }
  EXPECT_GT(compared, 100);
}

TEST(CornerVarianceTest, CenterOnlyUncertaintyIsEqualAcrossCorners) {
  const BoxParams box = make_box(8, 3, 4, 2, 0.5);
  const LabelPosterior post = center_only_posterior(box, 0.05, 0.03);
  const auto tv = corner_total_variance(post, {0, 0}, 2048, 5);
  // Each corner combines the same sampled moments, so they agree to rounding.
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(tv[i], tv[0], 1e-10);
}

TEST(CornerVarianceTest, DeltaPosteriorHasZeroVariance) {
  const auto tv = corner_total_variance(
      LabelPosterior::delta(make_box(5, 1, 4, 2, 0.3)), {0, 0}, 128, 5);
  for (const double v : tv) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(CornerVarianceTest, LShapeCloudOrdersCornersByDistance) {
  const BoxParams box = make_box(10, 6, 4.2, 1.8, 0.4);
  const Eigen::Vector2d observer(0, 0);
  const ObjectPoints points =
      synthesize_lshape_points(box, observer, {}, 23);
  const LabelPosterior post = infer_label_posterior(points, box);
  const auto tv = corner_total_variance(post, observer, 4096, 23);
  EXPECT_LT(tv[0], tv[3]);
}

TEST(GridSpecTest, CoverContainsTheRectWithPadding) {
  const GridSpec spec = GridSpec::cover({-1.23, 0.4}, {2.1, 3.3}, 0.25);
  EXPECT_TRUE(spec.covers_rect({-1.23, 0.4}, {2.1, 3.3}));
  // Origin sits on the resolution lattice.
  EXPECT_NEAR(std::remainder(spec.origin.x(), 0.25), 0.0, 1e-12);
  EXPECT_NEAR(std::remainder(spec.origin.y(), 0.25), 0.0, 1e-12);
}

TEST(GridSpecTest, ValidateRejectsHugeAndEmptyGrids) {
  GridSpec spec;
  spec.resolution = 0.001;
  spec.width = 10000;
  spec.height = 10000;
  EXPECT_THROW(spec.validate(), std::invalid_argument);  // over the budget
  spec.width = 0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(SpatialGridTest, MassAndPeak) {
  GridSpec spec;
  spec.origin = {0, 0};
  spec.resolution = 0.5;
  spec.width = 2;
  spec.height = 2;
  SpatialGrid grid = SpatialGrid::zeros(spec);
  grid.at(0, 0) = 1.0;
  grid.at(1, 1) = 3.0;
  EXPECT_NEAR(grid.mass(), 4.0 * 0.25, 1e-15);
  EXPECT_EQ(grid.peak(), 3.0);
}

TEST(SpatialGridTest, CsvRoundTripIsLossless) {
  const BoxParams box = make_box(2, 1, 3.3, 1.4, 0.3);
  const LabelPosterior post = LabelPosterior::delta(box);
  const GridSpec spec = default_grid_spec(post, 0.2);
  const SpatialGrid grid = rasterize_pg(post, spec);

  std::stringstream buffer;
  write_grid_csv(grid, buffer);
  std::string header;
  std::getline(buffer, header);
  EXPECT_EQ(header, "origin_x,origin_y,resolution,width,height");
  buffer.seekg(0);
  const SpatialGrid back = read_grid_csv(buffer);
  EXPECT_EQ(back.spec.width, grid.spec.width);
  EXPECT_EQ(back.spec.height, grid.spec.height);
  EXPECT_EQ(back.spec.resolution, grid.spec.resolution);
  ASSERT_EQ(back.values.size(), grid.values.size());
  for (std::size_t i = 0; i < grid.values.size(); ++i)
    EXPECT_EQ(back.values[i], grid.values[i]);
}

TEST(SpatialGridTest, Pgm16PutsTheHighestRowOnTop) {
  GridSpec spec;
  spec.origin = {0, 0};
  spec.resolution = 1.0;
  spec.width = 2;
  spec.height = 2;
  SpatialGrid grid = SpatialGrid::zeros(spec);
  grid.at(0, 1) = 2.0;  // top-left in image space
  grid.at(1, 0) = 1.0;
  test::TempDir dir;
  const std::string path = dir.str("grid.pgm");
  write_grid_pgm16(grid, path);
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w, h, maxval;
  in >> magic >> w >> h >> maxval;
  in.get();
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(w, 2);
  EXPECT_EQ(h, 2);
  EXPECT_EQ(maxval, 65535);
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  const int first = bytes[0] * 256 + bytes[1];   // image row 0 = grid row 1
  const int fourth = bytes[6] * 256 + bytes[7];  // image row 1, col 1
  EXPECT_EQ(first, 65535);
  EXPECT_EQ(fourth, 32768);
}

TEST(SamplePosteriorBoxesTest, DeterministicGivenSeedAndClamped) {
  const BoxParams box = make_box(0, 0, 0.01, 0.01, 0);
  Vector5d variances;
  variances << 0.0, 0.0, 10.0, 10.0, 0.0;  // sizes often sampled negative
  const LabelPosterior post = LabelPosterior::diagonal(box, variances);
  const auto a = sample_posterior_boxes(post, 200, 31);
  const auto b = sample_posterior_boxes(post, 200, 31);
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].l, b[i].l);
    EXPECT_GE(a[i].l, 1e-3);
    EXPECT_GE(a[i].w, 1e-3);
  }
}

TEST(DiscreteBoxDistributionTest, ValidateChecksWeights) {
  DiscreteBoxDistribution dist;
  dist.modes = {{make_box(0, 0, 4, 2, 0), 0.6},
                {make_box(9, 0, 4, 2, 0), 0.6}};
  EXPECT_THROW(dist.validate(), std::invalid_argument);
  dist.modes[1].second = 0.4;
  EXPECT_NO_THROW(dist.validate());
}

TEST(DefaultGridSpecTest, CoversTheMeanFootprint) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 10; ++i) {
    const BoxParams box = test::random_box(rng);
    Vector5d variances;
    variances << 0.1, 0.1, 0.05, 0.05, 0.02;
    const LabelPosterior post = LabelPosterior::diagonal(box, variances);
    const GridSpec spec = default_grid_spec(post, 0.1);
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(1e30);
    Eigen::Vector2d hi = -lo;
    for (const Eigen::Vector2d& c : box_corners_bev(box)) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
    EXPECT_TRUE(spec.covers_rect(lo, hi));
  }
}

}  // namespace
}  // namespace boxuq
