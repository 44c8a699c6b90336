#include "shapereg/transforms.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "shapereg/io.hpp"

namespace shapereg {

const char* qkind_name(QKind k) {
  switch (k) {
    case QKind::SRVT: return "srvt";
    case QKind::QCurve: return "q";
    case QKind::SRNF: return "srnf";
    case QKind::QSurface: return "qsurf";
  }
  return "?";
}

namespace {

QMap finish_curve_qmap(QKind kind, Eigen::MatrixXd samples) {
  QMap q;
  q.kind = kind;
  q.dim = 1;
  q.samples = std::move(samples);
  q.spline = CubicSpline(q.samples);
  return q;
}

QMap finish_surface_qmap(QKind kind, std::array<Eigen::MatrixXd, 3> ch) {
  QMap q;
  q.kind = kind;
  q.dim = 2;
  q.ch = std::move(ch);
  q.bicubic = BicubicInterp({q.ch[0], q.ch[1], q.ch[2]});
  return q;
}

}  // namespace

QMap srvt(const SampledCurve& c) {
  const Eigen::MatrixXd dc = finite_diff_derivative(c);
  const int K = c.K();
  Eigen::MatrixXd q(K, c.d());
  for (int i = 0; i < K; ++i) {
    const double speed = dc.row(i).norm();
    if (speed <= 1e-12)
      throw DegenerateCurve("curve is not an immersion: |c'| <= 1e-12 at node " + std::to_string(i));
    q.row(i) = dc.row(i) / std::sqrt(speed);
  }
  return finish_curve_qmap(QKind::SRVT, std::move(q));
}

SampledCurve srvt_inverse(const QMap& q) {
  if (q.dim != 1) throw GridMismatch("srvt_inverse needs a curve-type q-map");
  const int K = q.K();
  const double h = 1.0 / (K - 1);
  Eigen::MatrixXd vals(K, q.samples.cols());
  Eigen::MatrixXd integrand(K, q.samples.cols());
  for (int i = 0; i < K; ++i) integrand.row(i) = q.samples.row(i) * q.samples.row(i).norm();
  vals.row(0).setZero();
  for (int i = 1; i < K; ++i)
    vals.row(i) = vals.row(i - 1) + 0.5 * h * (integrand.row(i - 1) + integrand.row(i));
  SampledCurve c;
  c.values = std::move(vals);
  c.nodes = Eigen::VectorXd::LinSpaced(K, 0.0, 1.0);
  return c;
}

QMap qmap_curve(const SampledCurve& c) {
  const Eigen::MatrixXd dc = finite_diff_derivative(c);
  const int K = c.K();
  Eigen::MatrixXd q(K, c.d());
  for (int i = 0; i < K; ++i) {
    const double speed = dc.row(i).norm();
    if (speed <= 1e-12)
      throw DegenerateCurve("curve is not an immersion: |c'| <= 1e-12 at node " + std::to_string(i));
    q.row(i) = std::sqrt(speed) * c.values.row(i);
  }
  return finish_curve_qmap(QKind::QCurve, std::move(q));
}

QMap srnf(const SampledSurface& f) {
  const AreaFactor af = area_factor(f);
  const int K = f.K();
  std::array<Eigen::MatrixXd, 3> ch;
  for (int c = 0; c < 3; ++c) ch[c] = af.a.cwiseSqrt().cwiseProduct(af.n[c]);
  (void)K;
  return finish_surface_qmap(QKind::SRNF, std::move(ch));
}

QMap qmap_surface(const SampledSurface& f) {
  const AreaFactor af = area_factor(f);
  std::array<Eigen::MatrixXd, 3> ch;
  const Eigen::MatrixXd root = af.a.cwiseSqrt();
  for (int c = 0; c < 3; ++c) ch[c] = root.cwiseProduct(f.ch[c]);
  return finish_surface_qmap(QKind::QSurface, std::move(ch));
}

double preshape_dist(const QMap& a, const QMap& b) {
  if (a.dim != b.dim || a.kind != b.kind)
    throw GridMismatch("preshape_dist needs q-maps of the same kind");
  if (a.K() != b.K()) throw GridMismatch("preshape_dist needs equal grids");
  const int K = a.K();
  const double h = 1.0 / (K - 1);
  if (a.dim == 1) {
    if (a.samples.cols() != b.samples.cols())
      throw GridMismatch("preshape_dist needs equal value dimensions");
    double acc = 0.0;
    for (int i = 0; i < K; ++i) {
      const double w = (i == 0 || i == K - 1) ? 0.5 : 1.0;
      acc += w * (a.samples.row(i) - b.samples.row(i)).squaredNorm();
    }
    return std::sqrt(acc * h);
  }
  double acc = 0.0;
  for (int i = 0; i < K; ++i) {
    const double wi = (i == 0 || i == K - 1) ? 0.5 : 1.0;
    for (int j = 0; j < K; ++j) {
      const double wj = (j == 0 || j == K - 1) ? 0.5 : 1.0;
      double e2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double d = a.ch[c](i, j) - b.ch[c](i, j);
        e2 += d * d;
      }
      acc += wi * wj * e2;
    }
  }
  return std::sqrt(acc * h * h);
}

std::vector<SampledCurve> geodesic_curves(const SampledCurve& c1, const SampledCurve& c2,
                                          const std::vector<double>& taus) {
  if (c1.K() != c2.K() || c1.d() != c2.d())
    throw GridMismatch("geodesic_curves needs curves on the same grid");
  const QMap q1 = srvt(c1);
  const QMap q2 = srvt(c2);
  std::vector<SampledCurve> path;
  path.reserve(taus.size());
  for (double tau : taus) {
    QMap q = q1;
    q.samples = tau * q1.samples + (1.0 - tau) * q2.samples;
    for (int i = 0; i < q.K(); ++i) {
      if (q.samples.row(i).norm() <= 1e-12) {
        char msg[128];
        std::snprintf(msg, sizeof msg,
                      "srvt combination vanishes at tau=%.17g, node %d", tau, i);
        throw VanishingCombination(tau, i, msg);
      }
    }
    path.push_back(srvt_inverse(q));
  }
  return path;
}

std::vector<SampledCurve> lerp_after_reparam(const SampledCurve& f1, const SampledCurve& f2,
                                             const DiffeoNet& phi, const std::vector<double>& taus) {
  validate_curve(f1);
  validate_curve(f2);
  if (f1.d() != f2.d()) throw GridMismatch("lerp_after_reparam needs equal value dimensions");
  if (phi.dim != 1) throw GridMismatch("curve interpolation needs a 1D warp");
  const int K = f1.K();
  const CubicSpline s2(f2.values);
  Eigen::MatrixXd warped(K, f1.d());
  for (int i = 0; i < K; ++i) {
    const double t = static_cast<double>(i) / (K - 1);
    warped.row(i) = s2.eval(net_eval(phi, t).y).transpose();
  }
  std::vector<SampledCurve> path;
  path.reserve(taus.size());
  for (double tau : taus) {
    SampledCurve c;
    c.nodes = f1.nodes;
    c.values = tau * f1.values + (1.0 - tau) * warped;
    path.push_back(std::move(c));
  }
  return path;
}

std::vector<SampledSurface> lerp_after_reparam(const SampledSurface& f1, const SampledSurface& f2,
                                               const DiffeoNet& phi, const std::vector<double>& taus) {
  validate_surface(f1);
  validate_surface(f2);
  if (phi.dim != 2) throw GridMismatch("surface interpolation needs a 2D warp");
  const int K = f1.K();
  const BicubicInterp interp({f2.ch[0], f2.ch[1], f2.ch[2]});
  std::array<Eigen::MatrixXd, 3> warped;
  for (auto& m : warped) m.resize(K, K);
  for (int i = 0; i < K; ++i) {
    const double x = static_cast<double>(i) / (K - 1);
    for (int j = 0; j < K; ++j) {
      const double y = static_cast<double>(j) / (K - 1);
      const Eigen::Vector2d p = net_eval(phi, Eigen::Vector2d(x, y)).y;
      double v[3];
      interp.eval(p[0], p[1], v);
      for (int c = 0; c < 3; ++c) warped[c](i, j) = v[c];
    }
  }
  std::vector<SampledSurface> path;
  path.reserve(taus.size());
  for (double tau : taus) {
    SampledSurface s;
    for (int c = 0; c < 3; ++c) s.ch[c] = tau * f1.ch[c] + (1.0 - tau) * warped[c];
    path.push_back(std::move(s));
  }
  return path;
}

std::vector<double> default_taus() {
  std::vector<double> taus(11);
  for (int i = 0; i < 11; ++i) taus[i] = static_cast<double>(i) / 10.0;
  return taus;
}

namespace {

template <typename Shape>
std::string write_path_files(const std::string& out_dir, const std::string& stem,
                             const std::vector<Shape>& path, const std::vector<double>& taus,
                             std::string (*to_csv)(const Shape&)) {
  if (path.size() != taus.size()) throw GridMismatch("path and tau counts differ");
  nlohmann::json manifest;
  manifest["taus"] = taus;
  nlohmann::json files = nlohmann::json::array();
  for (size_t i = 0; i < path.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%02zu.csv", stem.c_str(), i);
    atomic_write_text(out_dir + "/" + name, to_csv(path[i]));
    files.push_back(name);
  }
  manifest["files"] = std::move(files);
  const std::string manifest_path = out_dir + "/" + stem + "_manifest.json";
  atomic_write_text(manifest_path, manifest.dump(2) + "\n");
  return manifest_path;
}

std::string curve_to_csv(const SampledCurve& c) { return curve_csv(c); }
std::string surface_to_csv(const SampledSurface& s) { return surface_csv(s); }

}  // namespace

std::string write_interpolation_path(const std::string& out_dir, const std::string& stem,
                                     const std::vector<SampledCurve>& path,
                                     const std::vector<double>& taus) {
  return write_path_files(out_dir, stem, path, taus, &curve_to_csv);
}

std::string write_interpolation_path(const std::string& out_dir, const std::string& stem,
                                     const std::vector<SampledSurface>& path,
                                     const std::vector<double>& taus) {
  return write_path_files(out_dir, stem, path, taus, &surface_to_csv);
}

}  // namespace shapereg
