#ifndef OCCUDEV_GEOMETRY_HPP_
#define OCCUDEV_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

#include <Eigen/Dense>

namespace occudev {

/// Second fundamental form of the hypersurface {x^1 = 0} at the origin,
/// written in semi-geodesic coordinates (x^1 signed distance, x~ normal
/// coordinates on the hypersurface).
///
/// The tangential metric block is
///   g~(x) = I + w(|x|) (2 Pi x^1 + K |x|^2)
/// where K is the optional quadratic correction and w is a C^2 blend that
/// equals 1 on |x| <= r_valid and 0 on |x| >= 2 r_valid, so the metric is
/// euclidean away from the origin. g_{1j} = delta_{1j} everywhere.
struct MetricSpec {
  int dimension = 2;
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(1, 1);
  double r_valid = 0.25;
  Eigen::MatrixXd quadratic_correction; // empty means zero
  double fd_step = 1e-5;

  double mean_curvature() const { return pi.trace(); }
  bool has_quadratic() const {
    return quadratic_correction.size() != 0 &&
           quadratic_correction.cwiseAbs().maxCoeff() > 0.0;
  }

  /// Throws std::invalid_argument when the fields are malformed or the metric
  /// loses positive-definiteness anywhere (blend zone included).
  void validate() const;
};

namespace detail {

/// Quintic smoothstep blend: 1 inside r_valid, 0 beyond 2 r_valid.
inline double euclidean_blend(double r, double r_valid) {
  if (r <= r_valid) return 1.0;
  if (r >= 2.0 * r_valid) return 0.0;
  const double u = (r - r_valid) / r_valid;
  return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

inline void check_symmetric(const Eigen::MatrixXd &m, const char *name) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument(std::string("MetricSpec: ") + name +
                                " is not symmetric");
  }
}

} // namespace detail

/// Coefficients of the tangential components of the generator at a point:
/// dX~ = sqrt(t) sigma dW~ + (t/2) drift ds.
template <int TanDim> struct TangentialCoefficients {
  Eigen::Matrix<double, TanDim, TanDim> sigma;
  Eigen::Matrix<double, TanDim, 1> drift;
};

/// Everything one Euler step needs at a point.
template <int TanDim> struct StepCoefficients {
  double b1 = 0.0;
  TangentialCoefficients<TanDim> tangential;
};

/// Evaluation kernel for a validated MetricSpec. Dim is the ambient
/// dimension (Eigen::Dynamic for runtime-sized).
template <int Dim> class MetricField {
public:
  static constexpr int kTanDim = Dim == Eigen::Dynamic ? Eigen::Dynamic : Dim - 1;
  using Point = Eigen::Matrix<double, Dim, 1>;
  using TanMatrix = Eigen::Matrix<double, kTanDim, kTanDim>;
  using TanVector = Eigen::Matrix<double, kTanDim, 1>;

  explicit MetricField(const MetricSpec &spec)
      : n_(spec.dimension), r_valid_(spec.r_valid), fd_step_(spec.fd_step),
        has_quadratic_(spec.has_quadratic()) {
    if constexpr (Dim != Eigen::Dynamic) {
      if (spec.dimension != Dim) {
        throw std::invalid_argument("MetricField: dimension mismatch");
      }
    }
    pi_ = spec.pi;
    quad_ = has_quadratic_ ? TanMatrix(spec.quadratic_correction)
                           : TanMatrix(TanMatrix::Zero(n_ - 1, n_ - 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec.pi);
    pi_eigenvalues_ = es.eigenvalues();
    pi_eigenvectors_ = es.eigenvectors();
    const double inner = r_valid_ - fd_step_ * (1.0 + r_valid_);
    inner_radius2_ = inner > 0.0 ? inner * inner : -1.0;
  }

  int dimension() const { return n_; }

  TanMatrix tangential_block(const Point &x) const {
    const double r2 = x.squaredNorm();
    const double w = r2 <= r_valid_ * r_valid_
                         ? 1.0
                         : detail::euclidean_blend(std::sqrt(r2), r_valid_);
    TanMatrix g = TanMatrix::Identity(n_ - 1, n_ - 1);
    if (w == 0.0) return g;
    g.noalias() += (w * 2.0 * x[0]) * pi_;
    if (has_quadratic_) g.noalias() += (w * r2) * quad_;
    return g;
  }

  Eigen::MatrixXd metric(const Point &x) const {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n_, n_);
    g.bottomRightCorner(n_ - 1, n_ - 1) = tangential_block(x);
    return g;
  }

  /// log sqrt(det g(x)); det g equals the tangential block determinant.
  double log_sqrt_det(const Point &x) const {
    return 0.5 * std::log(determinant(tangential_block(x)));
  }

  double fd_step_at(const Point &x) const { return fd_step_ * (1.0 + x.norm()); }

  /// b^1 = d/dx^1 log sqrt(det g), by central difference.
  double drift_b1(const Point &x) const {
    const double h = fd_step_at(x);
    Point xp = x;
    Point xm = x;
    xp[0] += h;
    xm[0] -= h;
    return 0.25 * std::log(determinant(tangential_block(xp)) /
                           determinant(tangential_block(xm))) /
           h;
  }

  /// Symmetric square root of the inverse tangential block and the
  /// tangential drift b^i = sum_j d_j g^{ij} + g^{ij} d_j log sqrt(det g).
  TangentialCoefficients<kTanDim> tangential(const Point &x) const {
    const TanMatrix g = tangential_block(x);
    const TanMatrix g_inv = g.inverse();
    TangentialCoefficients<kTanDim> out;
    out.sigma = symmetric_sqrt(g_inv);
    out.drift = TanVector::Zero(n_ - 1);

    const double h = fd_step_at(x);
    // The metric depends on x~ only through the quadratic term and the blend;
    // without either inside the stencil every tangential difference is zero.
    if (!has_quadratic_ && x.norm() + h <= r_valid_) return out;

    TanVector grad_log = TanVector::Zero(n_ - 1);
    for (int j = 1; j < n_; ++j) {
      Point xp = x;
      Point xm = x;
      xp[j] += h;
      xm[j] -= h;
      const TanMatrix gp = tangential_block(xp);
      const TanMatrix gm = tangential_block(xm);
      grad_log[j - 1] = 0.25 * std::log(determinant(gp) / determinant(gm)) / h;
      out.drift += (gp.inverse().col(j - 1) - gm.inverse().col(j - 1)) / (2.0 * h);
    }
    out.drift.noalias() += g_inv * grad_log;
    return out;
  }

  /// Same quantities as drift_b1 and tangential. Deep inside r_valid with no
  /// quadratic correction the block is I + 2 Pi x^1, diagonalized once by the
  /// eigenvectors of Pi.
  StepCoefficients<kTanDim> step_coefficients(const Point &x) const {
    if (has_quadratic_ || !(x.squaredNorm() <= inner_radius2_)) {
      return {drift_b1(x), tangential(x)};
    }
    const double h = fd_step_at(x);
    const auto m = static_cast<Eigen::Index>(n_ - 1);
    double ratio = 1.0;
    TanVector root_inv(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double lambda = pi_eigenvalues_[i];
      ratio *= (1.0 + 2.0 * lambda * (x[0] + h)) / (1.0 + 2.0 * lambda * (x[0] - h));
      root_inv[i] = 1.0 / std::sqrt(1.0 + 2.0 * lambda * x[0]);
    }
    StepCoefficients<kTanDim> out;
    out.b1 = 0.25 * std::log(ratio) / h;
    out.tangential.sigma =
        pi_eigenvectors_ * root_inv.asDiagonal() * pi_eigenvectors_.transpose();
    out.tangential.drift = TanVector::Zero(m);
    return out;
  }

private:
  static double determinant(const TanMatrix &m) {
    if constexpr (kTanDim != Eigen::Dynamic && kTanDim <= 4) {
      return m.determinant();
    } else {
      Eigen::LLT<Eigen::MatrixXd> llt(m);
      if (llt.info() != Eigen::Success) return 0.0;
      const double d = llt.matrixLLT().diagonal().prod();
      return d * d;
    }
  }

  static TanMatrix symmetric_sqrt(const TanMatrix &m) {
    if constexpr (kTanDim == 1) {
      TanMatrix s;
      s(0, 0) = std::sqrt(m(0, 0));
      return s;
    } else if constexpr (kTanDim == 2) {
      const double s = std::sqrt(m.determinant());
      const double t = std::sqrt(m.trace() + 2.0 * s);
      return (m + s * TanMatrix::Identity()) / t;
    } else if constexpr (kTanDim == 3) {
      Eigen::SelfAdjointEigenSolver<TanMatrix> es;
      es.computeDirect(m);
      return es.eigenvectors() *
             es.eigenvalues().cwiseSqrt().asDiagonal() *
             es.eigenvectors().transpose();
    } else {
      Eigen::SelfAdjointEigenSolver<TanMatrix> es(m);
      return es.operatorSqrt();
    }
  }

  int n_;
  double r_valid_;
  double fd_step_;
  bool has_quadratic_;
  TanMatrix pi_;
  TanMatrix quad_;
  TanVector pi_eigenvalues_;
  TanMatrix pi_eigenvectors_;
  double inner_radius2_ = -1.0;
};

/// Calls f with std::integral_constant<int, D> for D in {2, 3, 4}, or with
/// Eigen::Dynamic otherwise.
template <typename F> decltype(auto) dispatch_dimension(int n, F &&f) {
  switch (n) {
  case 2:
    return std::forward<F>(f)(std::integral_constant<int, 2>{});
  case 3:
    return std::forward<F>(f)(std::integral_constant<int, 3>{});
  case 4:
    return std::forward<F>(f)(std::integral_constant<int, 4>{});
  default:
    return std::forward<F>(f)(std::integral_constant<int, Eigen::Dynamic>{});
  }
}

inline void MetricSpec::validate() const {
  if (dimension < 2) {
    throw std::invalid_argument("MetricSpec: dimension must be at least 2");
  }
  const Eigen::Index m = dimension - 1;
  if (pi.rows() != m || pi.cols() != m) {
    throw std::invalid_argument("MetricSpec: pi_matrix must be " +
                                std::to_string(m) + "x" + std::to_string(m));
  }
  if (!pi.allFinite()) {
    throw std::invalid_argument("MetricSpec: pi_matrix has non-finite entries");
  }
  detail::check_symmetric(pi, "pi_matrix");
  if (!(r_valid > 0.0) || !std::isfinite(r_valid)) {
    throw std::invalid_argument("MetricSpec: r_valid must be positive");
  }
  if (!(fd_step > 0.0) || !std::isfinite(fd_step)) {
    throw std::invalid_argument("MetricSpec: fd_step must be positive");
  }
  if (quadratic_correction.size() != 0) {
    if (quadratic_correction.rows() != m || quadratic_correction.cols() != m) {
      throw std::invalid_argument("MetricSpec: quadratic_correction must be " +
                                  std::to_string(m) + "x" + std::to_string(m));
    }
    if (!quadratic_correction.allFinite()) {
      throw std::invalid_argument(
          "MetricSpec: quadratic_correction has non-finite entries");
    }
    detail::check_symmetric(quadratic_correction, "quadratic_correction");
  }

  // For fixed |x| = r the block is affine in x^1 and its smallest eigenvalue
  // is concave, so the minimum over the sphere sits at x^1 = +-r.
  const Eigen::MatrixXd quad =
      quadratic_correction.size() ? quadratic_correction : Eigen::MatrixXd::Zero(m, m);
  constexpr int kSamples = 2000;
  for (int i = 0; i <= kSamples; ++i) {
    const double r = 2.0 * r_valid * i / kSamples;
    const double w = detail::euclidean_blend(r, r_valid);
    for (double sign : {-1.0, 1.0}) {
      const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(m, m) +
                                w * (2.0 * sign * r * pi + r * r * quad);
      const double lambda_min =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly)
              .eigenvalues()
              .minCoeff();
      if (!(lambda_min > 1e-9)) {
        throw std::invalid_argument(
            "MetricSpec: metric is not positive-definite at |x| = " +
            std::to_string(r) + " (smallest eigenvalue " +
            std::to_string(lambda_min) + ")");
      }
    }
  }
}

/// Full n x n metric at x. Validates the spec.
inline Eigen::MatrixXd metric_at(const MetricSpec &spec, const Eigen::VectorXd &x) {
  spec.validate();
  if (x.size() != spec.dimension) {
    throw std::invalid_argument("metric_at: point has wrong dimension");
  }
  return MetricField<Eigen::Dynamic>(spec).metric(x);
}

/// Drift of the first coordinate, d/dx^1 log sqrt(det g) at x.
inline double drift_b1(const MetricSpec &spec, const Eigen::VectorXd &x) {
  if (x.size() != spec.dimension) {
    throw std::invalid_argument("drift_b1: point has wrong dimension");
  }
  return MetricField<Eigen::Dynamic>(spec).drift_b1(x);
}

/// Round sphere of radius R seen from its outward normal side:
/// Pi = I / R, H = (n - 1) / R, r_valid = R / 4.
inline MetricSpec sphere_preset(int n, double radius) {
  if (!(radius > 0.0)) {
    throw std::invalid_argument("sphere_preset: radius must be positive");
  }
  if (n < 2) {
    throw std::invalid_argument("sphere_preset: dimension must be at least 2");
  }
  MetricSpec spec;
  spec.dimension = n;
  spec.pi = Eigen::MatrixXd::Identity(n - 1, n - 1) / radius;
  spec.r_valid = radius / 4.0;
  return spec;
}

} // namespace occudev

#endif // OCCUDEV_GEOMETRY_HPP_
