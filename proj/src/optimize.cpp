#include "shapereg/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "shapereg/io.hpp"
#include "shapereg/rng.hpp"

namespace shapereg {

double pairwise_sum(const double* v, std::ptrdiff_t n) {
  if (n <= 8) {
    double acc = 0.0;
    for (std::ptrdiff_t i = 0; i < n; ++i) acc += v[i];
    return acc;
  }
  const std::ptrdiff_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

LossProblem make_loss_problem(QMap q1, QMap q2, DiffeoNet net) {
  if (q1.dim != q2.dim || q1.kind != q2.kind)
    throw GridMismatch("loss needs q-maps of the same kind");
  if (q1.dim != net.dim) throw GridMismatch("warp dimension does not match the shapes");
  if (q1.K() != q2.K()) throw GridMismatch("loss needs q-maps on the same grid");
  if (q1.dim == 1 && q1.samples.cols() != q2.samples.cols())
    throw GridMismatch("loss needs equal value dimensions");
  LossProblem p;
  p.q1 = std::move(q1);
  p.q2 = std::move(q2);
  p.net = std::move(net);
  return p;
}

Eigen::VectorXd get_weights(const DiffeoNet& net) {
  Eigen::VectorXd W(net.weight_count());
  const int m = net.layer_size();
  for (int l = 0; l < net.num_layers(); ++l) W.segment(l * m, m) = net.layers[l].w;
  return W;
}

void set_weights(DiffeoNet& net, const Eigen::VectorXd& W) {
  const int m = net.layer_size();
  if (W.size() != net.weight_count()) throw ParseError("weight vector size mismatch");
  for (int l = 0; l < net.num_layers(); ++l) net.layers[l].w = W.segment(l * m, m);
}

namespace {

void check_feasible(const DiffeoNet& net) {
  const FeasibleSpec spec = feasible_spec(net);
  for (const auto& layer : net.layers)
    if (!layer_feasible(layer.w, spec))
      throw InfeasibleLayer("layer weights violate the feasibility budget");
}

// ---- 1D loss engine ----

struct Grid1D {
  const Eigen::MatrixXd* q1;   // K x d samples at X
  const Eigen::VectorXd* X;    // K nodes
  const CubicSpline* r;        // interpolant of the warped side
  const DiffeoNet* net;
};

double loss_1d(const Grid1D& g, Eigen::VectorXd* grad) {
  const DiffeoNet& net = *g.net;
  check_feasible(net);
  const int K = static_cast<int>(g.X->size());
  const int L = net.num_layers();
  const int M = net.basis1.M;
  const int d = static_cast<int>(g.q1->cols());
  Basis1DWork wk;
  wk.resize(M);
  std::vector<double> xs(L), ds(L);
  std::vector<double> terms(K);
  Eigen::VectorXd rv(d), rd(d), e(d);
  if (grad) grad->setZero(net.weight_count());
  const double inv_k = 1.0 / K;
  for (int kpt = 0; kpt < K; ++kpt) {
    double cur = (*g.X)[kpt];
    double D = 1.0;
    for (int l = 0; l < L; ++l) {
      const Layer1DEval ev = layer_eval(net.layers[l].w, cur, wk);
      xs[l] = cur;
      ds[l] = ev.d;
      D *= ev.d;
      cur = ev.y;
    }
    if (D < 1e-10 && grad)
      throw NearSingularDerivative("phi' < 1e-10 at a sample point");
    if (D <= 0.0)
      throw NearSingularDerivative("phi' <= 0 at a sample point");
    const double sqrtD = std::sqrt(D);
    g.r->eval_both(cur, rv.data(), grad ? rd.data() : nullptr);
    e = g.q1->row(kpt).transpose() - sqrtD * rv;
    terms[kpt] = e.squaredNorm();
    if (!grad) continue;
    double xbar = -2.0 * inv_k * sqrtD * rd.dot(e);
    const double B = -inv_k * rv.dot(e) / sqrtD;
    for (int l = L - 1; l >= 0; --l) {
      const double dbar = B * (D / ds[l]);
      const Eigen::VectorXd& w = net.layers[l].w;
      trig_tables_1d(M, xs[l], wk);
      double curv = 0.0;
      double* gl = grad->data() + static_cast<std::ptrdiff_t>(l) * M;
      for (int n = 0; n < M; ++n) {
        const double f = wk.s[n] / ((n + 1) * M_PI);
        const double fp = wk.c[n];
        gl[n] += xbar * f + dbar * fp;
        curv -= w[n] * (n + 1) * M_PI * wk.s[n];
      }
      xbar = xbar * ds[l] + dbar * curv;
    }
  }
  return pairwise_sum(terms.data(), K) * inv_k;
}

// ---- 2D loss engine ----

struct Grid2D {
  const std::array<Eigen::MatrixXd, 3>* q1;
  int K;
  const BicubicInterp* r;
  const DiffeoNet* net;
};

double loss_2d(const Grid2D& g, Eigen::VectorXd* grad) {
  const DiffeoNet& net = *g.net;
  check_feasible(net);
  const int K = g.K;
  const int L = net.num_layers();
  const int N = net.basis2.N;
  const int M = basis_size_2d(N);
  Basis2DWork wk;
  wk.resize(N);
  std::vector<Eigen::Vector2d> xs(L);
  std::vector<Eigen::Matrix2d> Js(L);
  std::vector<double> dets(L);
  std::vector<double> terms(static_cast<size_t>(K) * K);
  if (grad) grad->setZero(net.weight_count());
  const double inv_k2 = 1.0 / (static_cast<double>(K) * K);
  double v[3], vx[3], vy[3];
  const double hh = 1.0 / (K - 1);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      Eigen::Vector2d cur(i * hh, j * hh);
      double det = 1.0;
      for (int l = 0; l < L; ++l) {
        const Layer2DEval ev = layer_eval(net.basis2, net.layers[l].w, cur, wk);
        xs[l] = cur;
        Js[l] = ev.J;
        dets[l] = ev.J.determinant();
        det *= dets[l];
        cur = ev.y;
      }
      if (det < 1e-10 && grad)
        throw NearSingularDerivative("det J < 1e-10 at a sample point");
      if (det <= 0.0)
        throw NearSingularDerivative("det J <= 0 at a sample point");
      const double sqrtDet = std::sqrt(det);
      g.r->eval_with_partials(cur[0], cur[1], v, grad ? vx : nullptr, grad ? vy : nullptr);
      Eigen::Vector3d e;
      for (int c = 0; c < 3; ++c) e[c] = (*g.q1)[c](i, j) - sqrtDet * v[c];
      terms[static_cast<size_t>(i) * K + j] = e.squaredNorm();
      if (!grad) continue;
      Eigen::Vector2d xbar;
      xbar[0] = -2.0 * inv_k2 * sqrtDet * (vx[0] * e[0] + vx[1] * e[1] + vx[2] * e[2]);
      xbar[1] = -2.0 * inv_k2 * sqrtDet * (vy[0] * e[0] + vy[1] * e[1] + vy[2] * e[2]);
      const double B = -inv_k2 * (v[0] * e[0] + v[1] * e[1] + v[2] * e[2]) / sqrtDet;
      for (int l = L - 1; l >= 0; --l) {
        const double detbar = B * (det / dets[l]);
        const Eigen::Matrix2d& J = Js[l];
        // cofactor matrix: d(det J)/dJ
        Eigen::Matrix2d Jbar;
        Jbar << detbar * J(1, 1), -detbar * J(1, 0),
                -detbar * J(0, 1), detbar * J(0, 0);
        trig_tables_2d(N, xs[l][0], xs[l][1], wk);
        const Eigen::VectorXd& w = net.layers[l].w;
        double* gl = grad->data() + static_cast<std::ptrdiff_t>(l) * M;
        Eigen::Vector2d xnew(0.0, 0.0);
        for_each_field_2d(N, wk, [&](int n, const Field2D& f) {
          const double wn = w[n];
          gl[n] += xbar[f.comp] * f.u + Jbar(f.comp, 0) * f.ux + Jbar(f.comp, 1) * f.uy;
          xnew[0] += wn * (Jbar(f.comp, 0) * f.uxx + Jbar(f.comp, 1) * f.uxy);
          xnew[1] += wn * (Jbar(f.comp, 0) * f.uxy + Jbar(f.comp, 1) * f.uyy);
        });
        xbar = J.transpose() * xbar + xnew;
      }
    }
  }
  return pairwise_sum(terms.data(), static_cast<std::ptrdiff_t>(K) * K) * inv_k2;
}

Grid1D grid_of(const LossProblem& p, const Eigen::VectorXd& X, const Eigen::MatrixXd& q1v) {
  return Grid1D{&q1v, &X, &p.q2.spline, &p.net};
}

}  // namespace

double loss(const LossProblem& p) {
  if (p.q1.dim == 1) {
    Eigen::VectorXd X = Eigen::VectorXd::LinSpaced(p.q1.K(), 0.0, 1.0);
    const Grid1D g = grid_of(p, X, p.q1.samples);
    return loss_1d(g, nullptr);
  }
  const Grid2D g{&p.q1.ch, p.q1.K(), &p.q2.bicubic, &p.net};
  return loss_2d(g, nullptr);
}

double loss_grad(const LossProblem& p, Eigen::VectorXd& grad) {
  if (p.q1.dim == 1) {
    Eigen::VectorXd X = Eigen::VectorXd::LinSpaced(p.q1.K(), 0.0, 1.0);
    const Grid1D g = grid_of(p, X, p.q1.samples);
    return loss_1d(g, &grad);
  }
  const Grid2D g{&p.q1.ch, p.q1.K(), &p.q2.bicubic, &p.net};
  return loss_2d(g, &grad);
}

namespace {

Eigen::VectorXd project_flat(const Eigen::VectorXd& W, int layer_size, const FeasibleSpec& spec) {
  Eigen::VectorXd out(W.size());
  for (int l = 0; l * layer_size < W.size(); ++l)
    out.segment(l * layer_size, layer_size) =
        project_weights(W.segment(l * layer_size, layer_size), spec);
  return out;
}

}  // namespace

FitResult bfgs_reparam(const LossProblem& p, const BfgsOptions& opt, const FeasibleSpec& spec) {
  LossProblem prob = p;
  const int m = prob.net.layer_size();
  const int nW = prob.net.weight_count();

  // current sample grid; the 1D grid can be redrawn on Hessian resets
  Eigen::VectorXd X;
  Eigen::MatrixXd q1v;
  if (prob.q1.dim == 1) {
    X = Eigen::VectorXd::LinSpaced(prob.q1.K(), 0.0, 1.0);
    q1v = prob.q1.samples;
  }
  Rng rng(mix_seed(opt.seed, 0x9e3779u));
  auto eval = [&](Eigen::VectorXd* grad) -> double {
    if (prob.q1.dim == 1) {
      const Grid1D g = grid_of(prob, X, q1v);
      return loss_1d(g, grad);
    }
    const Grid2D g{&prob.q1.ch, prob.q1.K(), &prob.q2.bicubic, &prob.net};
    return loss_2d(g, grad);
  };
  auto resample_grid = [&]() {
    if (prob.q1.dim != 1) return;
    const int K = prob.q1.K();
    std::vector<double> pts(K);
    pts.front() = 0.0;
    pts.back() = 1.0;
    for (int i = 1; i + 1 < K; ++i) pts[i] = rng.uniform();
    std::sort(pts.begin(), pts.end());
    X = Eigen::Map<Eigen::VectorXd>(pts.data(), K);
    for (int i = 0; i < K; ++i) q1v.row(i) = prob.q1.spline.eval(X[i]).transpose();
  };

  FitResult res;
  Eigen::VectorXd W = project_flat(get_weights(prob.net), m, spec);
  const bool initial_projected = (W - get_weights(p.net)).cwiseAbs().maxCoeff() > 0.0;
  set_weights(prob.net, W);

  Eigen::VectorXd g(nW), gt(nW);
  double E = eval(&g);
  res.E0 = E;
  res.log.push_back({0, E, g.cwiseAbs().maxCoeff(), 0.0, initial_projected ? 1 : 0});
  if (opt.record_iterates) res.iterates.push_back(W);

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(nW, nW);
  bool h_is_identity = true;
  std::string stop = "max_iter";
  int iter = 0;
  while (iter < opt.max_iter) {
    if (g.cwiseAbs().maxCoeff() <= opt.grad_tol) { stop = "grad_tol"; break; }
    if (E <= opt.rel_loss_floor * res.E0) { stop = "loss_floor"; break; }

    Eigen::VectorXd dir = -(H * g);
    double t = 1.0;
    Eigen::VectorXd Wt;
    double Et = 0.0;
    bool accepted = false;
    while (t >= opt.min_step) {
      Wt = project_flat(W + t * dir, m, spec);
      const Eigen::VectorXd step_vec = Wt - W;
      if (step_vec.cwiseAbs().maxCoeff() == 0.0) break;  // projection pinned the move
      set_weights(prob.net, Wt);
      bool usable = true;
      try {
        Et = eval(nullptr);
      } catch (const NearSingularDerivative&) {
        usable = false;
      }
      const double slope = std::min(0.0, g.dot(step_vec));
      if (usable && Et <= E + opt.c1 * slope && Et < E) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      set_weights(prob.net, W);
      if (!h_is_identity) {
        H.setIdentity();
        h_is_identity = true;
        if (opt.resample_on_reset) {
          resample_grid();
          E = eval(&g);
        }
        continue;  // retry this iteration as steepest descent
      }
      stop = "line_search_failure";
      break;
    }

    ++iter;
    const Eigen::VectorXd s = Wt - W;
    set_weights(prob.net, Wt);
    const double Enew = eval(&gt);
    const Eigen::VectorXd yv = gt - g;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      if (h_is_identity) H *= sy / yv.squaredNorm();  // curvature-scaled H0
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * yv;
      const double yHy = yv.dot(Hy);
      H.noalias() -= rho * (s * Hy.transpose() + Hy * s.transpose());
      H.noalias() += (rho * rho * yHy + rho) * (s * s.transpose());
      h_is_identity = false;
    }
    const int projected = ((W + t * dir) - Wt).cwiseAbs().maxCoeff() > 0.0 ? 1 : 0;
    W = Wt;
    E = Enew;
    g = gt;
    res.log.push_back({iter, E, g.cwiseAbs().maxCoeff(), t, projected});
    if (opt.record_iterates) res.iterates.push_back(W);
  }

  set_weights(prob.net, W);
  res.net = prob.net;
  res.E_final = E;
  res.iters = iter;
  res.stop_reason = stop;
  return res;
}

FitResult gd_reparam(const QMap& q1, const QMap& q2, const GDConfig& cfg) {
  if (q1.dim != 1) throw GridMismatch("the gradient-descent baseline is defined for curves");
  DiffeoNet net = make_net_1d(0, cfg.M, cfg.epsilon);
  const FeasibleSpec spec = feasible_spec(net);
  LossProblem p = make_loss_problem(q1, q2, net);

  FitResult res;
  double E = loss(p);
  res.E0 = E;
  res.log.push_back({0, E, 0.0, 0.0, 0});
  std::string stop = "max_iter";
  int iter = 0;
  Eigen::VectorXd g;
  while (iter < cfg.max_iter) {
    // lambda: gradient with respect to an innermost layer; a fresh zero layer
    // unless we are refitting the existing innermost one
    const bool refit = cfg.refit_last && !p.net.layers.empty();
    if (!refit)
      p.net.layers.insert(p.net.layers.begin(), DiffeoLayer{Eigen::VectorXd::Zero(cfg.M)});
    loss_grad(p, g);
    const Eigen::VectorXd lambda = g.head(cfg.M);
    const Eigen::VectorXd w_base = p.net.layers.front().w;
    const double lam_norm = lambda.cwiseAbs().maxCoeff();
    if (lam_norm <= cfg.grad_tol) {
      if (!refit) p.net.layers.erase(p.net.layers.begin());
      stop = "grad_tol";
      break;
    }
    double eta = cfg.eta;
    bool accepted = false;
    double Et = 0.0;
    Eigen::VectorXd w_new;
    while (eta >= cfg.min_eta) {
      w_new = project_weights(w_base - eta * lambda, spec);
      p.net.layers.front().w = w_new;
      bool usable = true;
      try {
        Et = loss(p);
      } catch (const NearSingularDerivative&) {
        usable = false;
      }
      if (usable && Et < E) {
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) {
      if (!refit) p.net.layers.erase(p.net.layers.begin());
      if (iter == 0) throw StagnatedStep("no feasible decreasing step at the first iteration");
      stop = "stagnated";
      break;
    }
    ++iter;
    E = Et;
    const int projected =
        ((w_base - eta * lambda) - w_new).cwiseAbs().maxCoeff() > 0.0 ? 1 : 0;
    res.log.push_back({iter, E, lam_norm, eta, projected});
  }
  res.net = p.net;
  res.E_final = E;
  res.iters = iter;
  res.stop_reason = stop;
  return res;
}

std::vector<SweepCell> run_sweep(const QMap& q1, const QMap& q2,
                                 const std::vector<int>& Ls, const std::vector<int>& Ms,
                                 const BfgsOptions& opt, double epsilon) {
  std::vector<SweepCell> cells;
  for (int L : Ls) {
    for (int M : Ms) {
      SweepCell cell;
      cell.L = L;
      cell.M = M;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        DiffeoNet net = q1.dim == 1 ? make_net_1d(L, M, epsilon) : make_net_2d(L, M, epsilon);
        LossProblem p = make_loss_problem(q1, q2, net);
        if (L == 0) {
          cell.final_loss = loss(p);
          cell.iters = 0;
        } else {
          const FitResult fit = bfgs_reparam(p, opt, feasible_spec(net));
          cell.final_loss = fit.E_final;
          cell.iters = fit.iters;
        }
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
        cell.final_loss = std::numeric_limits<double>::quiet_NaN();
        cell.iters = 0;
      }
      cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::string convergence_csv(const std::vector<LogRow>& log) {
  std::ostringstream out;
  out << "iter,loss,grad_norm,step,projected\n";
  for (const auto& row : log)
    out << row.iter << "," << fmt_double(row.loss) << "," << fmt_double(row.grad_norm) << ","
        << fmt_double(row.step) << "," << row.projected << "\n";
  return out.str();
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out << "L,M,final_loss,iters,seconds\n";
  for (const auto& c : cells)
    out << c.L << "," << c.M << "," << fmt_double(c.final_loss) << "," << c.iters << ","
        << fmt_double(c.seconds) << "\n";
  return out.str();
}

}  // namespace shapereg
