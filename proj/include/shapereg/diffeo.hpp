#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "shapereg/errors.hpp"

namespace shapereg {

// f_n(x) = sin(n pi x) / (n pi), n = 1..M; every L_n = 1.
struct Basis1D {
  int M = 0;
};

// Three families per displacement component. For the first component
// (fields vanishing at x in {0,1}):
//   xi_k      = sin(pi k x) / (pi k)
//   eta_{k,l} = sin(pi k x) cos(2 pi l y) / (pi k l)
//   phi_{k,l} = sin(pi k x) sin(2 pi l y) / (pi k l)
// with k,l = 1..N; second-component fields swap the roles of x and y.
// Flattened order: component 0 then 1; within a component xi_1..xi_N, then
// eta_{k,l} (k outer, l inner), then phi_{k,l} likewise.
struct Basis2D {
  int N = 0;
};

// 2(2N^2 + N)
int basis_size_2d(int N);

Eigen::VectorXd lipschitz_constants(const Basis1D& b);
// L^xi = 1, L^eta = L^phi = sqrt(k^2 + 2 l^2) / (k l)
Eigen::VectorXd lipschitz_constants(const Basis2D& b);

struct FeasibleSpec {
  double epsilon = 1e-2;
  Eigen::VectorXd L;
};

struct DiffeoLayer {
  Eigen::VectorXd w;
};

// Layers are applied first-to-last: layers[0] is the innermost map.
struct DiffeoNet {
  int dim = 1;
  Basis1D basis1;
  Basis2D basis2;
  double epsilon = 1e-2;
  std::vector<DiffeoLayer> layers;

  int layer_size() const { return dim == 1 ? basis1.M : basis_size_2d(basis2.N); }
  int num_layers() const { return static_cast<int>(layers.size()); }
  int weight_count() const { return num_layers() * layer_size(); }
};

DiffeoNet make_net_1d(int L, int M, double epsilon = 1e-2);
DiffeoNet make_net_2d(int L, int N, double epsilon = 1e-2);
FeasibleSpec feasible_spec(const DiffeoNet& net);

double weighted_l1(const Eigen::VectorXd& w, const Eigen::VectorXd& L);
bool layer_feasible(const Eigen::VectorXd& w, const FeasibleSpec& spec, double tol = 1e-9);
bool net_feasible(const DiffeoNet& net, double tol = 1e-9);

// pi(w) = (1 - eps) / max{1 - eps, sum |w_n| L_n} * w
Eigen::VectorXd project_weights(const Eigen::VectorXd& w, const FeasibleSpec& spec);
void project_net(DiffeoNet& net);

// ---- evaluation kernels ----

// Per-point trig tables for the sine basis, shared across derivative orders.
struct Basis1DWork {
  Eigen::VectorXd s, c;  // sin(n pi x), cos(n pi x), n = 1..M
  void resize(int M) {
    s.resize(M);
    c.resize(M);
  }
};

// Chebyshev-style recurrence: one sincos per call.
void trig_tables_1d(int M, double x, Basis1DWork& wk);

struct Layer1DEval {
  double y;  // x + sum w_n f_n(x)
  double d;  // 1 + sum w_n f_n'(x)
};

// Requires wk resized to w.size(); fills the tables itself.
Layer1DEval layer_eval(const Eigen::VectorXd& w, double x, Basis1DWork& wk);
// second derivative of the layer at x (uses tables already in wk)
double layer_second_derivative(const Eigen::VectorXd& w, const Basis1DWork& wk);

struct Basis2DWork {
  Eigen::VectorXd sx, cx, sy, cy;      // sin/cos(pi k x), sin/cos(pi k y)
  Eigen::VectorXd s2x, c2x, s2y, c2y;  // sin/cos(2 pi l x), sin/cos(2 pi l y)
  void resize(int N) {
    sx.resize(N); cx.resize(N); sy.resize(N); cy.resize(N);
    s2x.resize(N); c2x.resize(N); s2y.resize(N); c2y.resize(N);
  }
};

void trig_tables_2d(int N, double x, double y, Basis2DWork& wk);

// One scalar field of the 2D basis: the active component and its value,
// gradient, and second partials at the tabulated point.
struct Field2D {
  int comp;
  double u, ux, uy, uxx, uxy, uyy;
};

// Enumerates all 2(2N^2+N) fields in flattened order. fn(index, Field2D).
template <typename F>
inline void for_each_field_2d(int N, const Basis2DWork& wk, F&& fn) {
  int idx = 0;
  const double pi = M_PI;
  for (int comp = 0; comp < 2; ++comp) {
    // active-coordinate tables (a) and cross-coordinate tables (b)
    const Eigen::VectorXd& sk = comp == 0 ? wk.sx : wk.sy;
    const Eigen::VectorXd& ck = comp == 0 ? wk.cx : wk.cy;
    const Eigen::VectorXd& Sl = comp == 0 ? wk.s2y : wk.s2x;
    const Eigen::VectorXd& Cl = comp == 0 ? wk.c2y : wk.c2x;
    auto emit = [&](double u, double ua, double ub, double uaa, double uab, double ubb) {
      Field2D f;
      f.comp = comp;
      if (comp == 0) {
        f.u = u; f.ux = ua; f.uy = ub; f.uxx = uaa; f.uxy = uab; f.uyy = ubb;
      } else {
        f.u = u; f.ux = ub; f.uy = ua; f.uxx = ubb; f.uxy = uab; f.uyy = uaa;
      }
      fn(idx++, f);
    };
    for (int k = 1; k <= N; ++k) {
      emit(sk[k - 1] / (pi * k), ck[k - 1], 0.0, -pi * k * sk[k - 1], 0.0, 0.0);
    }
    for (int k = 1; k <= N; ++k) {
      for (int l = 1; l <= N; ++l) {
        const double s = sk[k - 1], c = ck[k - 1], S = Sl[l - 1], C = Cl[l - 1];
        emit(s * C / (pi * k * l), c * C / l, -2.0 * s * S / k,
             -pi * k * s * C / l, -2.0 * pi * c * S, -4.0 * pi * l * s * C / k);
      }
    }
    for (int k = 1; k <= N; ++k) {
      for (int l = 1; l <= N; ++l) {
        const double s = sk[k - 1], c = ck[k - 1], S = Sl[l - 1], C = Cl[l - 1];
        emit(s * S / (pi * k * l), c * S / l, 2.0 * s * C / k,
             -pi * k * s * S / l, 2.0 * pi * c * C, -4.0 * pi * l * s * S / k);
      }
    }
  }
}

struct Layer2DEval {
  Eigen::Vector2d y;
  Eigen::Matrix2d J;  // I + sum w_n Df_n
};

Layer2DEval layer_eval(const Basis2D& b, const Eigen::VectorXd& w,
                       const Eigen::Vector2d& x, Basis2DWork& wk);

// ---- network evaluation ----

struct Net1DState {
  double y = 0.0;
  double d = 1.0;          // product of layer derivatives
  std::vector<double> xs;  // xs[l]: input to layer l
  std::vector<double> ds;  // ds[l]: derivative of layer l at xs[l]
};

struct Net2DState {
  Eigen::Vector2d y;
  double detJ = 1.0;
  Eigen::Matrix2d J;                   // full Jacobian (product of layer Jacobians)
  std::vector<Eigen::Vector2d> xs;     // inputs per layer
  std::vector<Eigen::Matrix2d> Js;     // layer Jacobians at those inputs
};

// Both check per-layer feasibility and throw InfeasibleLayer.
Net1DState net_eval(const DiffeoNet& net, double x);
Net2DState net_eval(const DiffeoNet& net, const Eigen::Vector2d& x);

// ---- serialization ----

std::string net_to_json(const DiffeoNet& net);
DiffeoNet net_from_json(const std::string& text);
void save_net(const std::string& path, const DiffeoNet& net);
DiffeoNet load_net(const std::string& path);

}  // namespace shapereg
