#pragma once

#include <string>
#include <vector>

#include "shapereg/diffeo.hpp"
#include "shapereg/geometry.hpp"

namespace shapereg {

enum class QKind { SRVT, QCurve, SRNF, QSurface };

const char* qkind_name(QKind k);

// Transformed object sampled on the source grid, with an attached continuous
// interpolant for evaluation at warped points.
struct QMap {
  QKind kind = QKind::SRVT;
  int dim = 1;                        // 1: curve-type, 2: surface-type
  Eigen::MatrixXd samples;            // K x d (dim == 1)
  std::array<Eigen::MatrixXd, 3> ch;  // dim == 2
  CubicSpline spline;                 // dim == 1
  BicubicInterp bicubic;              // dim == 2
  int K() const {
    return dim == 1 ? static_cast<int>(samples.rows())
                    : static_cast<int>(ch[0].rows());
  }
};

// R(c) = c' / sqrt|c'|; throws DegenerateCurve when |c'| <= 1e-12 at a node.
QMap srvt(const SampledCurve& c);

// R^{-1}(q)(t) = integral_0^t q|q|, cumulative trapezoid, c(0) = 0.
SampledCurve srvt_inverse(const QMap& q);

// Q(c) = sqrt|c'| * c
QMap qmap_curve(const SampledCurve& c);

// N(f) = sqrt(a_f) * n_f; throws DegenerateSurface via area_factor.
QMap srnf(const SampledSurface& f);

// Q(f) = sqrt(a_f) * f
QMap qmap_surface(const SampledSurface& f);

// L2 distance by trapezoid (1D) / tensor-trapezoid (2D) quadrature.
// Throws GridMismatch on different grids or kinds.
double preshape_dist(const QMap& a, const QMap& b);

// tau -> R^{-1}(tau R(c1) + (1-tau) R(c2)). Throws VanishingCombination when
// the combination vanishes at a node (reports tau and node).
std::vector<SampledCurve> geodesic_curves(const SampledCurve& c1, const SampledCurve& c2,
                                          const std::vector<double>& taus);

// Pointwise tau f1 + (1-tau) (f2 o phi) on the grid of f1.
std::vector<SampledCurve> lerp_after_reparam(const SampledCurve& f1, const SampledCurve& f2,
                                             const DiffeoNet& phi, const std::vector<double>& taus);
std::vector<SampledSurface> lerp_after_reparam(const SampledSurface& f1, const SampledSurface& f2,
                                               const DiffeoNet& phi, const std::vector<double>& taus);

// Default tau grid for interpolation paths: 11 uniform values.
std::vector<double> default_taus();

// One CSV per tau ("<stem>_00.csv", ...) plus "<stem>_manifest.json" listing
// tau values and file names. Returns the manifest path.
std::string write_interpolation_path(const std::string& out_dir, const std::string& stem,
                                     const std::vector<SampledCurve>& path,
                                     const std::vector<double>& taus);
std::string write_interpolation_path(const std::string& out_dir, const std::string& stem,
                                     const std::vector<SampledSurface>& path,
                                     const std::vector<double>& taus);

}  // namespace shapereg
