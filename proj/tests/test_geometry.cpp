#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "occudev/geometry.hpp"

using namespace occudev;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MetricSpec spec_2d(double kappa) {
  MetricSpec s;
  s.dimension = 2;
  s.pi = MatrixXd::Constant(1, 1, kappa);
  return s;
}

MatrixXd random_symmetric(std::mt19937_64 &rng, int m, double norm) {
  std::normal_distribution<double> normal;
  MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = normal(rng);
  MatrixXd s = 0.5 * (a + a.transpose());
  const double op = Eigen::SelfAdjointEigenSolver<MatrixXd>(s).eigenvalues().cwiseAbs().maxCoeff();
  return s * (norm / op);
}

VectorXd random_point(std::mt19937_64 &rng, int n, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = normal(rng);
  return x * (radius * unif(rng) / x.norm());
}

TEST(Metric, FlatHypersurfaceIsIdentity) {
  MetricSpec s;
  s.dimension = 3;
  s.pi = MatrixXd::Zero(2, 2);
  EXPECT_TRUE(metric_at(s, VectorXd::Constant(3, 0.1)).isIdentity(0.0));
}

TEST(Metric, TwoDimensionalEntry) {
  const double kappa = 0.7;
  VectorXd x(2);
  x << 0.1, -0.05;
  const MatrixXd g = metric_at(spec_2d(kappa), x);
  EXPECT_EQ(g(0, 0), 1.0);
  EXPECT_EQ(g(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g(1, 1), 1.0 + 2.0 * kappa * 0.1);
}

TEST(Metric, SmallestEigenvalueAtValidityRadius) {
  MetricSpec s;
  s.dimension = 3;
  s.pi = MatrixXd::Identity(2, 2);
  s.r_valid = 0.25;
  VectorXd x = VectorXd::Zero(3);
  x[0] = -0.25;
  const double lmin =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(metric_at(s, x)).eigenvalues().minCoeff();
  EXPECT_NEAR(lmin, 0.5, 1e-15);
}

TEST(Metric, EuclideanBeyondBlendZone) {
  const MetricSpec s = sphere_preset(3, 1.0);
  VectorXd x = VectorXd::Zero(3);
  x[0] = 0.51;
  EXPECT_TRUE(metric_at(s, x).isIdentity(0.0));
}

TEST(Metric, BlendIsContinuous) {
  const MetricSpec s = sphere_preset(2, 1.0);
  for (double r : {0.25, 0.5}) {
    VectorXd a(2), b(2);
    a << r - 1e-9, 0.0;
    b << r + 1e-9, 0.0;
    EXPECT_NEAR((metric_at(s, a) - metric_at(s, b)).norm(), 0.0, 1e-8);
  }
}

TEST(Metric, QuadraticCorrectionEntersAsSquaredRadius) {
  MetricSpec s = spec_2d(0.0);
  s.quadratic_correction = MatrixXd::Constant(1, 1, 0.5);
  VectorXd x(2);
  x << 0.1, 0.1;
  EXPECT_DOUBLE_EQ(metric_at(s, x)(1, 1), 1.0 + 0.5 * 0.02);
}

TEST(Drift, FlatIsZero) {
  MetricSpec s;
  s.dimension = 4;
  s.pi = MatrixXd::Zero(3, 3);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(drift_b1(s, random_point(rng, 4, 1.0)), 0.0);
}

TEST(Drift, ClosedFormTwoDimensional) {
  VectorXd x(2);
  x << 0.1, 0.0;
  EXPECT_NEAR(drift_b1(spec_2d(1.0), x), 1.0 / 1.2, 1e-6);
}

TEST(Drift, EqualsMeanCurvatureAtOrigin) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 4;
    MetricSpec s;
    s.dimension = n;
    s.pi = random_symmetric(rng, n - 1, 2.0);
    s.r_valid = 0.1;
    s.validate();
    const double h = s.fd_step;
    const double norm = 2.0;
    EXPECT_NEAR(drift_b1(s, VectorXd::Zero(n)), s.mean_curvature(),
                10.0 * h * h * (1.0 + norm * norm * norm))
        << "trial " << trial;
  }
}

TEST(Drift, InvariantUnderTangentialPermutation) {
  std::mt19937_64 rng(7);
  MetricSpec s;
  s.dimension = 4;
  s.pi = random_symmetric(rng, 3, 1.0);
  s.r_valid = 0.2;
  Eigen::PermutationMatrix<3> perm;
  perm.indices() << 2, 0, 1;
  MetricSpec t = s;
  t.pi = perm * s.pi * perm.transpose();
  for (int i = 0; i < 20; ++i) {
    const VectorXd x = random_point(rng, 4, 0.3);
    VectorXd y = x;
    y.tail(3) = perm * x.tail(3);
    EXPECT_NEAR(drift_b1(s, x), drift_b1(t, y), 1e-9);
  }
}

// Independent oracle for the generator drift of x^i:
// (1 / sqrt g) sum_j d_j (sqrt g g^{ij}), by central differences on the full metric.
VectorXd generator_drift(const MetricSpec &s, const VectorXd &x, double h) {
  const int n = s.dimension;
  VectorXd out = VectorXd::Zero(n);
  const auto weighted = [&](const VectorXd &p) {
    const MatrixXd g = metric_at(s, p);
    return MatrixXd(std::sqrt(g.determinant()) * g.inverse());
  };
  for (int j = 0; j < n; ++j) {
    VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    out += (weighted(xp).col(j) - weighted(xm).col(j)) / (2.0 * h);
  }
  return out / std::sqrt(metric_at(s, x).determinant());
}

TEST(Tangential, DriftMatchesGeneratorOracle) {
  std::mt19937_64 rng(11);
  for (int n : {2, 3, 4, 6}) {
    MetricSpec s;
    s.dimension = n;
    s.pi = random_symmetric(rng, n - 1, 1.0);
    s.quadratic_correction = random_symmetric(rng, n - 1, 1.0);
    s.r_valid = 0.2;
    s.validate();
    for (int i = 0; i < 10; ++i) {
      const VectorXd x = random_point(rng, n, 0.45);
      const VectorXd oracle = generator_drift(s, x, 2e-5);
      dispatch_dimension(n, [&](auto d) {
        const MetricField<decltype(d)::value> field(s);
        const auto c = field.tangential(x);
        const double b1 = field.drift_b1(x);
        EXPECT_NEAR(b1, oracle[0], 1e-5) << "n " << n;
        for (int k = 1; k < n; ++k) EXPECT_NEAR(c.drift[k - 1], oracle[k], 1e-5) << "n " << n;
      });
    }
  }
}

TEST(Tangential, SigmaSquaresToInverseMetric) {
  std::mt19937_64 rng(12);
  for (int n : {2, 3, 4, 5}) {
    MetricSpec s;
    s.dimension = n;
    s.pi = random_symmetric(rng, n - 1, 1.5);
    s.r_valid = 0.15;
    dispatch_dimension(n, [&](auto d) {
      const MetricField<decltype(d)::value> field(s);
      for (int i = 0; i < 10; ++i) {
        const VectorXd x = random_point(rng, n, 0.35);
        const auto c = field.tangential(x);
        const MatrixXd inv = MatrixXd(field.tangential_block(x)).inverse();
        EXPECT_NEAR((MatrixXd(c.sigma * c.sigma) - inv).norm(), 0.0, 1e-12);
        EXPECT_NEAR((MatrixXd(c.sigma) - MatrixXd(c.sigma).transpose()).norm(), 0.0, 1e-14);
      }
    });
  }
}

TEST(Tangential, NoDriftWithoutQuadraticInsideValidity) {
  const MetricSpec s = sphere_preset(3, 1.0);
  const MetricField<3> field(s);
  Eigen::Vector3d x(0.1, 0.05, -0.02);
  EXPECT_EQ(field.tangential(x).drift.norm(), 0.0);
}

TEST(StepCoefficients, FastPathMatchesGeneric) {
  std::mt19937_64 rng(13);
  for (int n : {2, 3, 4, 5}) {
    MetricSpec s;
    s.dimension = n;
    s.pi = random_symmetric(rng, n - 1, 1.5);
    s.r_valid = 0.15;
    dispatch_dimension(n, [&](auto d) {
      const MetricField<decltype(d)::value> field(s);
      for (int i = 0; i < 50; ++i) {
        const VectorXd x = random_point(rng, n, 0.14);
        const auto fast = field.step_coefficients(x);
        const double b1 = field.drift_b1(x);
        const auto slow = field.tangential(x);
        EXPECT_NEAR(fast.b1, b1, 1e-8);
        EXPECT_NEAR((MatrixXd(fast.tangential.sigma) - MatrixXd(slow.sigma)).norm(), 0.0, 1e-12);
        EXPECT_NEAR((fast.tangential.drift - slow.drift).norm(), 0.0, 1e-12);
      }
    });
  }
}

TEST(Sphere, MeanCurvature) {
  EXPECT_EQ(sphere_preset(2, 1.0).mean_curvature(), 1.0);
  EXPECT_EQ(sphere_preset(3, 2.0).mean_curvature(), 1.0);
  EXPECT_EQ(sphere_preset(3, 1.0).mean_curvature(), 2.0);
  EXPECT_EQ(sphere_preset(3, 1.0).r_valid, 0.25);
}

TEST(Sphere, FlatLimit) {
  const MetricSpec s = sphere_preset(2, 1e12);
  EXPECT_LT(s.mean_curvature(), 1e-11);
  VectorXd x(2);
  x << 0.3, 0.1;
  EXPECT_NEAR((metric_at(s, x) - MatrixXd::Identity(2, 2)).norm(), 0.0, 1e-11);
}

TEST(Sphere, RejectsBadArguments) {
  EXPECT_THROW(sphere_preset(3, 0.0), std::invalid_argument);
  EXPECT_THROW(sphere_preset(3, -1.0), std::invalid_argument);
  EXPECT_THROW(sphere_preset(1, 1.0), std::invalid_argument);
}

TEST(Validate, RejectsMalformedSpecs) {
  MetricSpec s = spec_2d(1.0);
  EXPECT_NO_THROW(s.validate());

  MetricSpec bad = s;
  bad.pi = MatrixXd::Identity(2, 2);
  EXPECT_THROW(bad.validate(), std::invalid_argument);

  bad = sphere_preset(3, 1.0);
  bad.pi(0, 1) = 0.1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);

  bad = s;
  bad.pi(0, 0) = 5.0; // 1 - 2 * 5 * 0.25 < 0
  EXPECT_THROW(bad.validate(), std::invalid_argument);

  bad = s;
  bad.fd_step = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);

  bad = s;
  bad.r_valid = -1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);

  bad = s;
  bad.pi(0, 0) = NAN;
  EXPECT_THROW(bad.validate(), std::invalid_argument);

  bad = s;
  bad.dimension = 1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Validate, PointDimensionChecked) {
  EXPECT_THROW(metric_at(spec_2d(1.0), VectorXd::Zero(3)), std::invalid_argument);
  EXPECT_THROW(drift_b1(spec_2d(1.0), VectorXd::Zero(3)), std::invalid_argument);
}

TEST(Field, FixedAndDynamicAgree) {
  std::mt19937_64 rng(21);
  MetricSpec s;
  s.dimension = 4;
  s.pi = random_symmetric(rng, 3, 1.0);
  s.quadratic_correction = random_symmetric(rng, 3, 0.5);
  s.r_valid = 0.2;
  const MetricField<4> fixed(s);
  const MetricField<Eigen::Dynamic> dynamic(s);
  for (int i = 0; i < 20; ++i) {
    const VectorXd x = random_point(rng, 4, 0.45);
    const Eigen::Vector4d xf = x;
    EXPECT_NEAR(fixed.drift_b1(xf), dynamic.drift_b1(x), 1e-9);
    EXPECT_NEAR((fixed.tangential(xf).drift - dynamic.tangential(x).drift).norm(), 0.0, 1e-8);
  }
}

} // namespace
