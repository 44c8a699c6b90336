#include "shapereg/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace shapereg {

SampledCurve make_curve(const Eigen::MatrixXd& values) {
  SampledCurve c;
  c.values = values;
  c.nodes = Eigen::VectorXd::LinSpaced(values.rows(), 0.0, 1.0);
  validate_curve(c);
  return c;
}

void validate_curve(const SampledCurve& c) {
  const int K = c.K();
  if (K < 4) throw ParseError("curve needs at least 4 nodes, got " + std::to_string(K));
  if (c.d() < 1) throw ParseError("curve needs at least one value column");
  if (c.nodes.size() != K) throw ParseError("node/value count mismatch");
  if (std::abs(c.nodes[0]) > 1e-12 || std::abs(c.nodes[K - 1] - 1.0) > 1e-12)
    throw ParseError("curve nodes must span [0,1]");
  const double h = 1.0 / (K - 1);
  for (int i = 0; i < K; ++i) {
    if (std::abs(c.nodes[i] - i * h) > 1e-12 * (1.0 + i * h))
      throw ParseError("curve nodes must be uniform to 1e-12 relative");
  }
  if (!c.values.allFinite()) throw ParseError("curve has non-finite values");
}

SampledSurface make_surface(std::array<Eigen::MatrixXd, 3> channels) {
  SampledSurface s;
  s.ch = std::move(channels);
  validate_surface(s);
  return s;
}

void validate_surface(const SampledSurface& s) {
  const int K = s.K();
  if (K < 4) throw ParseError("surface needs at least a 4x4 grid");
  for (const auto& m : s.ch) {
    if (m.rows() != K || m.cols() != K) throw ParseError("surface channels must be square and equal-sized");
    if (!m.allFinite()) throw ParseError("surface has non-finite values");
  }
}

void validate_image(const GrayImage& img) {
  if (img.width < 4 || img.height < 4)
    throw ParseError("image must be at least 4x4 pixels");
  if (img.intensity.rows() != img.height || img.intensity.cols() != img.width)
    throw ParseError("image buffer does not match its dimensions");
  if (!img.intensity.allFinite() || img.intensity.minCoeff() < 0.0 || img.intensity.maxCoeff() > 1.0)
    throw ParseError("image intensities must lie in [0,1]");
}

Eigen::VectorXd finite_diff_1d(const Eigen::VectorXd& y, double h) {
  const int K = static_cast<int>(y.size());
  Eigen::VectorXd dy(K);
  dy[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
  for (int i = 1; i + 1 < K; ++i) dy[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
  dy[K - 1] = (3.0 * y[K - 1] - 4.0 * y[K - 2] + y[K - 3]) / (2.0 * h);
  return dy;
}

Eigen::MatrixXd finite_diff_derivative(const SampledCurve& c) {
  validate_curve(c);
  const int K = c.K();
  const double h = 1.0 / (K - 1);
  Eigen::MatrixXd dc(K, c.d());
  for (int j = 0; j < c.d(); ++j) dc.col(j) = finite_diff_1d(c.values.col(j), h);
  return dc;
}

SurfacePartials partials_surface(const SampledSurface& s) {
  validate_surface(s);
  const int K = s.K();
  const double h = 1.0 / (K - 1);
  SurfacePartials p;
  for (int c = 0; c < 3; ++c) {
    p.fx[c].resize(K, K);
    p.fy[c].resize(K, K);
    for (int j = 0; j < K; ++j) p.fx[c].col(j) = finite_diff_1d(s.ch[c].col(j), h);
    for (int i = 0; i < K; ++i) p.fy[c].row(i) = finite_diff_1d(s.ch[c].row(i).transpose(), h).transpose();
  }
  return p;
}

AreaFactor area_factor(const SampledSurface& s) {
  const SurfacePartials p = partials_surface(s);
  const int K = s.K();
  constexpr double tol = 1e-12;
  AreaFactor out;
  out.a.resize(K, K);
  for (auto& m : out.n) m = Eigen::MatrixXd::Zero(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      const Eigen::Vector3d fx(p.fx[0](i, j), p.fx[1](i, j), p.fx[2](i, j));
      const Eigen::Vector3d fy(p.fy[0](i, j), p.fy[1](i, j), p.fy[2](i, j));
      const Eigen::Vector3d cr = fx.cross(fy);
      const double a = cr.norm();
      out.a(i, j) = a;
      const bool interior = i > 0 && i + 1 < K && j > 0 && j + 1 < K;
      if (a <= tol) {
        if (interior)
          throw DegenerateSurface("area factor <= 1e-12 at interior node (" +
                                  std::to_string(i) + "," + std::to_string(j) + ")");
        continue;  // boundary: normal left zero
      }
      for (int c = 0; c < 3; ++c) out.n[c](i, j) = cr[c] / a;
    }
  }
  return out;
}

// ---- natural cubic spline ----

CubicSpline::CubicSpline(const Eigen::MatrixXd& samples) {
  const int K = static_cast<int>(samples.rows());
  if (K < 4) throw ParseError("spline needs at least 4 samples");
  y_ = samples;
  h_ = 1.0 / (K - 1);
  m_.setZero(K, samples.cols());
  // Thomas solve for interior second derivatives; natural ends are zero.
  const int n = K - 2;
  Eigen::VectorXd diag(n), rhs(n);
  Eigen::MatrixXd r(n, samples.cols());
  for (int i = 0; i < n; ++i)
    r.row(i) = 6.0 / (h_ * h_) *
               (y_.row(i) - 2.0 * y_.row(i + 1) + y_.row(i + 2));
  diag.setConstant(4.0);
  for (int i = 1; i < n; ++i) {
    const double w = 1.0 / diag[i - 1];
    diag[i] -= w;
    r.row(i) -= w * r.row(i - 1);
  }
  for (int c = 0; c < samples.cols(); ++c) {
    m_(n, c) = r(n - 1, c) / diag[n - 1];
    for (int i = n - 2; i >= 0; --i)
      m_(i + 1, c) = (r(i, c) - m_(i + 2, c)) / diag[i];
  }
}

void CubicSpline::eval_both(double t, double* value, double* deriv) const {
  const int K = this->K();
  const double tc = std::clamp(t, 0.0, 1.0);
  int i = std::min(static_cast<int>(tc / h_), K - 2);
  const double a = (i + 1) * h_ - tc;  // distance to the right node
  const double b = tc - i * h_;
  for (int c = 0; c < d(); ++c) {
    const double mi = m_(i, c), mi1 = m_(i + 1, c);
    const double yi = y_(i, c), yi1 = y_(i + 1, c);
    if (value)
      value[c] = (mi * a * a * a + mi1 * b * b * b) / (6.0 * h_) +
                 (yi / h_ - mi * h_ / 6.0) * a + (yi1 / h_ - mi1 * h_ / 6.0) * b;
    if (deriv)
      deriv[c] = (-mi * a * a + mi1 * b * b) / (2.0 * h_) -
                 (yi / h_ - mi * h_ / 6.0) + (yi1 / h_ - mi1 * h_ / 6.0);
  }
}

Eigen::VectorXd CubicSpline::eval(double t) const {
  Eigen::VectorXd v(d());
  eval_both(t, v.data(), nullptr);
  return v;
}

Eigen::VectorXd CubicSpline::deriv(double t) const {
  Eigen::VectorXd v(d());
  eval_both(t, nullptr, v.data());
  return v;
}

// ---- Keys cubic convolution (a = -0.5) ----

BicubicInterp::BicubicInterp(std::vector<Eigen::MatrixXd> channels) : ch_(std::move(channels)) {
  if (ch_.empty()) throw ParseError("bicubic interpolant needs at least one channel");
  const int K = static_cast<int>(ch_[0].rows());
  if (K < 4) throw ParseError("bicubic interpolant needs at least a 4x4 grid");
  for (const auto& m : ch_)
    if (m.rows() != K || m.cols() != K) throw ParseError("bicubic channels must be square and equal-sized");
}

double BicubicInterp::fetch(int c, int i, int j) const {
  // cubic boundary extrapolation keeps linear data exact near the edges
  const int K = this->K();
  auto pick = [&](int ii, int jj) { return ch_[c](ii, jj); };
  if (i >= 0 && i < K && j >= 0 && j < K) return pick(i, j);
  auto ext = [&](int idx, auto get) {
    if (idx == -1) return 3.0 * get(0) - 3.0 * get(1) + get(2);
    if (idx == K) return 3.0 * get(K - 1) - 3.0 * get(K - 2) + get(K - 3);
    return get(std::clamp(idx, 0, K - 1));
  };
  if (i >= 0 && i < K) return ext(j, [&](int jj) { return pick(i, jj); });
  if (j >= 0 && j < K) return ext(i, [&](int ii) { return pick(ii, j); });
  // corner ghost: extrapolate along x of already-extrapolated rows in y
  auto row = [&](int ii) { return ext(j, [&](int jj) { return pick(ii, jj); }); };
  return ext(i, row);
}

namespace {

// Catmull-Rom weights (cubic convolution with a = -0.5) and their s-derivatives
inline void keys_weights(double s, double* w, double* dw) {
  const double s2 = s * s, s3 = s2 * s;
  w[0] = 0.5 * (-s3 + 2.0 * s2 - s);
  w[1] = 0.5 * (3.0 * s3 - 5.0 * s2 + 2.0);
  w[2] = 0.5 * (-3.0 * s3 + 4.0 * s2 + s);
  w[3] = 0.5 * (s3 - s2);
  if (dw) {
    dw[0] = 0.5 * (-3.0 * s2 + 4.0 * s - 1.0);
    dw[1] = 0.5 * (9.0 * s2 - 10.0 * s);
    dw[2] = 0.5 * (-9.0 * s2 + 8.0 * s + 1.0);
    dw[3] = 0.5 * (3.0 * s2 - 2.0 * s);
  }
}

}  // namespace

void BicubicInterp::eval(double x, double y, double* out) const {
  eval_with_partials(x, y, out, nullptr, nullptr);
}

void BicubicInterp::eval_with_partials(double x, double y, double* v, double* vx, double* vy) const {
  const int K = this->K();
  const double scale = K - 1.0;
  const double u = std::clamp(x, 0.0, 1.0) * scale;
  const double w = std::clamp(y, 0.0, 1.0) * scale;
  const int i = std::min(static_cast<int>(u), K - 2);
  const int j = std::min(static_cast<int>(w), K - 2);
  const double sx = u - i, sy = w - j;
  double wx[4], dwx[4], wy[4], dwy[4];
  keys_weights(sx, wx, (vx || vy) ? dwx : nullptr);
  keys_weights(sy, wy, (vx || vy) ? dwy : nullptr);
  for (int c = 0; c < channels(); ++c) {
    double val = 0.0, dx = 0.0, dy = 0.0;
    for (int a = 0; a < 4; ++a) {
      double row = 0.0, drow = 0.0;
      for (int b = 0; b < 4; ++b) {
        const double f = fetch(c, i + a - 1, j + b - 1);
        row += wy[b] * f;
        if (vy) drow += dwy[b] * f;
      }
      val += wx[a] * row;
      if (vx) dx += dwx[a] * row;
      if (vy) dy += wx[a] * drow;
    }
    if (v) v[c] = val;
    if (vx) vx[c] = dx * scale;
    if (vy) vy[c] = dy * scale;
  }
}

SampledSurface lift_image(const GrayImage& img, int K) {
  validate_image(img);
  if (K < 4) throw ParseError("lifted surface needs K >= 4");
  // image nodes at r/(H-1), c/(W-1); intensity(r, c) with x along columns
  const int W = img.width, H = img.height;
  std::array<Eigen::MatrixXd, 3> ch;
  for (auto& m : ch) m.resize(K, K);
  // interpolate on the (possibly non-square) pixel grid directly
  const Eigen::MatrixXd& I = img.intensity;  // H x W
  auto extrap = [](double f0, double f1, double f2) { return 3.0 * f0 - 3.0 * f1 + f2; };
  auto fetch = [&](int r, int c) -> double {
    auto row_at = [&](int rr) -> double {
      if (c == -1) return extrap(I(rr, 0), I(rr, 1), I(rr, 2));
      if (c == W) return extrap(I(rr, W - 1), I(rr, W - 2), I(rr, W - 3));
      return I(rr, c);
    };
    if (r == -1) return extrap(row_at(0), row_at(1), row_at(2));
    if (r == H) return extrap(row_at(H - 1), row_at(H - 2), row_at(H - 3));
    return row_at(r);
  };
  for (int i = 0; i < K; ++i) {
    const double x = static_cast<double>(i) / (K - 1);
    for (int j = 0; j < K; ++j) {
      const double y = static_cast<double>(j) / (K - 1);
      const double u = x * (W - 1);
      const double w = y * (H - 1);
      const int ci = std::min(static_cast<int>(u), W - 2);
      const int rj = std::min(static_cast<int>(w), H - 2);
      double wx[4], wy[4];
      keys_weights(u - ci, wx, nullptr);
      keys_weights(w - rj, wy, nullptr);
      double val = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          val += wx[a] * wy[b] * fetch(rj + b - 1, ci + a - 1);
      ch[0](i, j) = x;
      ch[1](i, j) = y;
      ch[2](i, j) = val;
    }
  }
  SampledSurface s;
  s.ch = std::move(ch);
  validate_surface(s);
  return s;
}

Interpolant make_interpolant(const SampledCurve& c) {
  validate_curve(c);
  Interpolant it;
  it.dim = 1;
  it.spline = CubicSpline(c.values);
  return it;
}

Interpolant make_interpolant(const SampledSurface& s) {
  validate_surface(s);
  Interpolant it;
  it.dim = 2;
  it.bicubic = BicubicInterp({s.ch[0], s.ch[1], s.ch[2]});
  return it;
}

}  // namespace shapereg
