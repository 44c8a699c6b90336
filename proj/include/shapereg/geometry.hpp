#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "shapereg/errors.hpp"

namespace shapereg {

// Curve sampled at K uniform nodes t_k = k/(K-1), endpoints included.
struct SampledCurve {
  Eigen::VectorXd nodes;   // K
  Eigen::MatrixXd values;  // K x d
  int K() const { return static_cast<int>(values.rows()); }
  int d() const { return static_cast<int>(values.cols()); }
};

// Builds the uniform node vector and validates.
SampledCurve make_curve(const Eigen::MatrixXd& values);
// K >= 4, nodes strictly increasing from 0 to 1, equispaced to 1e-12 relative.
void validate_curve(const SampledCurve& c);

// Surface sampled on a K x K tensor grid over [0,1]^2; channel c at node
// (x_i, y_j) is ch[c](i, j), with x_i = i/(K-1), y_j = j/(K-1).
struct SampledSurface {
  std::array<Eigen::MatrixXd, 3> ch;
  int K() const { return static_cast<int>(ch[0].rows()); }
};

SampledSurface make_surface(std::array<Eigen::MatrixXd, 3> channels);
void validate_surface(const SampledSurface& s);

struct GrayImage {
  int width = 0;
  int height = 0;
  Eigen::MatrixXd intensity;  // height x width, values in [0,1]
};

void validate_image(const GrayImage& img);

// 2nd-order stencils: central in the interior, one-sided at the endpoints.
Eigen::VectorXd finite_diff_1d(const Eigen::VectorXd& y, double h);
Eigen::MatrixXd finite_diff_derivative(const SampledCurve& c);

struct SurfacePartials {
  std::array<Eigen::MatrixXd, 3> fx;
  std::array<Eigen::MatrixXd, 3> fy;
};
SurfacePartials partials_surface(const SampledSurface& s);

struct AreaFactor {
  Eigen::MatrixXd a;                 // |f_x x f_y| per node
  std::array<Eigen::MatrixXd, 3> n;  // unit normal where a > tol, zero below
};
// Throws DegenerateSurface when a <= 1e-12 at an interior node; boundary
// degeneracies only produce zero normals (callers may warn).
AreaFactor area_factor(const SampledSurface& s);

// Graph surface (x, y, I(x,y)) with I resampled to a K x K grid by cubic
// convolution.
SampledSurface lift_image(const GrayImage& img, int K);

// Natural cubic spline on the uniform grid; one coefficient set per column.
class CubicSpline {
 public:
  CubicSpline() = default;
  explicit CubicSpline(const Eigen::MatrixXd& samples);

  Eigen::VectorXd eval(double t) const;
  Eigen::VectorXd deriv(double t) const;
  // fused evaluation used by the loss inner loops
  void eval_both(double t, double* value, double* deriv) const;

  int K() const { return static_cast<int>(y_.rows()); }
  int d() const { return static_cast<int>(y_.cols()); }

 private:
  Eigen::MatrixXd y_;  // K x d samples
  Eigen::MatrixXd m_;  // K x d second derivatives (natural: zero at the ends)
  double h_ = 0.0;
};

// Keys cubic convolution (a = -0.5) on a K x K grid with cubic boundary
// extrapolation; C^1 on [0,1]^2.
class BicubicInterp {
 public:
  BicubicInterp() = default;
  explicit BicubicInterp(std::vector<Eigen::MatrixXd> channels);

  void eval(double x, double y, double* out) const;
  // v[c], vx[c], vy[c] for every channel c
  void eval_with_partials(double x, double y, double* v, double* vx, double* vy) const;

  int K() const { return ch_.empty() ? 0 : static_cast<int>(ch_[0].rows()); }
  int channels() const { return static_cast<int>(ch_.size()); }

 private:
  std::vector<Eigen::MatrixXd> ch_;
  double fetch(int c, int i, int j) const;
};

// Continuous evaluator with first derivatives on the closed domain.
struct Interpolant {
  int dim = 0;  // 1: cubic spline, 2: bicubic convolution
  CubicSpline spline;
  BicubicInterp bicubic;
};

Interpolant make_interpolant(const SampledCurve& c);
Interpolant make_interpolant(const SampledSurface& s);

}  // namespace shapereg
