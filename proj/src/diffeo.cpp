#include "shapereg/diffeo.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "shapereg/io.hpp"

namespace shapereg {

int basis_size_2d(int N) { return 2 * (2 * N * N + N); }

Eigen::VectorXd lipschitz_constants(const Basis1D& b) {
  return Eigen::VectorXd::Ones(b.M);
}

Eigen::VectorXd lipschitz_constants(const Basis2D& b) {
  const int N = b.N;
  Eigen::VectorXd L(basis_size_2d(N));
  int idx = 0;
  for (int comp = 0; comp < 2; ++comp) {
    for (int k = 1; k <= N; ++k) L[idx++] = 1.0;  // xi
    for (int fam = 0; fam < 2; ++fam)             // eta then phi share the constant
      for (int k = 1; k <= N; ++k)
        for (int l = 1; l <= N; ++l)
          L[idx++] = std::sqrt(static_cast<double>(k) * k + 2.0 * l * l) / (static_cast<double>(k) * l);
  }
  return L;
}

DiffeoNet make_net_1d(int L, int M, double epsilon) {
  if (M < 1) throw ParseError("1D basis needs M >= 1");
  if (L < 0) throw ParseError("layer count must be >= 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParseError("epsilon must lie in (0,1)");
  DiffeoNet net;
  net.dim = 1;
  net.basis1.M = M;
  net.epsilon = epsilon;
  net.layers.assign(L, DiffeoLayer{Eigen::VectorXd::Zero(M)});
  return net;
}

DiffeoNet make_net_2d(int L, int N, double epsilon) {
  if (N < 1) throw ParseError("2D basis needs N >= 1");
  if (L < 0) throw ParseError("layer count must be >= 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParseError("epsilon must lie in (0,1)");
  DiffeoNet net;
  net.dim = 2;
  net.basis2.N = N;
  net.epsilon = epsilon;
  net.layers.assign(L, DiffeoLayer{Eigen::VectorXd::Zero(basis_size_2d(N))});
  return net;
}

FeasibleSpec feasible_spec(const DiffeoNet& net) {
  FeasibleSpec spec;
  spec.epsilon = net.epsilon;
  spec.L = net.dim == 1 ? lipschitz_constants(net.basis1) : lipschitz_constants(net.basis2);
  return spec;
}

double weighted_l1(const Eigen::VectorXd& w, const Eigen::VectorXd& L) {
  return w.cwiseAbs().dot(L);
}

bool layer_feasible(const Eigen::VectorXd& w, const FeasibleSpec& spec, double tol) {
  return weighted_l1(w, spec.L) <= (1.0 - spec.epsilon) * (1.0 + tol);
}

bool net_feasible(const DiffeoNet& net, double tol) {
  const FeasibleSpec spec = feasible_spec(net);
  for (const auto& layer : net.layers)
    if (!layer_feasible(layer.w, spec, tol)) return false;
  return true;
}

Eigen::VectorXd project_weights(const Eigen::VectorXd& w, const FeasibleSpec& spec) {
  const double budget = 1.0 - spec.epsilon;
  const double s = weighted_l1(w, spec.L);
  if (s <= budget) return w;
  return (budget / s) * w;
}

void project_net(DiffeoNet& net) {
  const FeasibleSpec spec = feasible_spec(net);
  for (auto& layer : net.layers) layer.w = project_weights(layer.w, spec);
}

void trig_tables_1d(int M, double x, Basis1DWork& wk) {
  if (M <= 0) return;
  const double a = M_PI * x;
  const double s1 = std::sin(a), c1 = std::cos(a);
  wk.s[0] = s1;
  wk.c[0] = c1;
  if (M > 1) {
    wk.s[1] = 2.0 * c1 * s1;
    wk.c[1] = 2.0 * c1 * c1 - 1.0;
  }
  const double two_c1 = 2.0 * c1;
  for (int n = 2; n < M; ++n) {
    wk.s[n] = two_c1 * wk.s[n - 1] - wk.s[n - 2];
    wk.c[n] = two_c1 * wk.c[n - 1] - wk.c[n - 2];
  }
}

Layer1DEval layer_eval(const Eigen::VectorXd& w, double x, Basis1DWork& wk) {
  const int M = static_cast<int>(w.size());
  trig_tables_1d(M, x, wk);
  double disp = 0.0, slope = 0.0;
  for (int n = 0; n < M; ++n) {
    disp += w[n] * wk.s[n] / ((n + 1) * M_PI);
    slope += w[n] * wk.c[n];
  }
  return {x + disp, 1.0 + slope};
}

double layer_second_derivative(const Eigen::VectorXd& w, const Basis1DWork& wk) {
  const int M = static_cast<int>(w.size());
  double v = 0.0;
  for (int n = 0; n < M; ++n) v -= w[n] * (n + 1) * M_PI * wk.s[n];
  return v;
}

void trig_tables_2d(int N, double x, double y, Basis2DWork& wk) {
  const double ax = M_PI * x, ay = M_PI * y;
  const double sx1 = std::sin(ax), cx1 = std::cos(ax);
  const double sy1 = std::sin(ay), cy1 = std::cos(ay);
  // double-angle seeds for the 2 pi l tables
  const double s2x1 = 2.0 * sx1 * cx1, c2x1 = 2.0 * cx1 * cx1 - 1.0;
  const double s2y1 = 2.0 * sy1 * cy1, c2y1 = 2.0 * cy1 * cy1 - 1.0;
  auto fill = [N](Eigen::VectorXd& s, Eigen::VectorXd& c, double s1, double c1) {
    s[0] = s1;
    c[0] = c1;
    const double t = 2.0 * c1;
    if (N > 1) {
      s[1] = 2.0 * c1 * s1;
      c[1] = 2.0 * c1 * c1 - 1.0;
    }
    for (int n = 2; n < N; ++n) {
      s[n] = t * s[n - 1] - s[n - 2];
      c[n] = t * c[n - 1] - c[n - 2];
    }
  };
  fill(wk.sx, wk.cx, sx1, cx1);
  fill(wk.sy, wk.cy, sy1, cy1);
  fill(wk.s2x, wk.c2x, s2x1, c2x1);
  fill(wk.s2y, wk.c2y, s2y1, c2y1);
}

Layer2DEval layer_eval(const Basis2D& b, const Eigen::VectorXd& w,
                       const Eigen::Vector2d& x, Basis2DWork& wk) {
  trig_tables_2d(b.N, x[0], x[1], wk);
  Layer2DEval out;
  out.y = x;
  out.J.setIdentity();
  for_each_field_2d(b.N, wk, [&](int n, const Field2D& f) {
    const double wn = w[n];
    out.y[f.comp] += wn * f.u;
    out.J(f.comp, 0) += wn * f.ux;
    out.J(f.comp, 1) += wn * f.uy;
  });
  return out;
}

Net1DState net_eval(const DiffeoNet& net, double x) {
  if (net.dim != 1) throw ParseError("net_eval(double) needs a 1D net");
  const FeasibleSpec spec = feasible_spec(net);
  Basis1DWork wk;
  wk.resize(net.basis1.M);
  Net1DState st;
  st.xs.reserve(net.layers.size());
  st.ds.reserve(net.layers.size());
  double cur = x;
  double dprod = 1.0;
  for (const auto& layer : net.layers) {
    if (!layer_feasible(layer.w, spec))
      throw InfeasibleLayer("layer weights violate the feasibility budget");
    const Layer1DEval ev = layer_eval(layer.w, cur, wk);
    st.xs.push_back(cur);
    st.ds.push_back(ev.d);
    cur = ev.y;
    dprod *= ev.d;
  }
  st.y = cur;
  st.d = dprod;
  return st;
}

Net2DState net_eval(const DiffeoNet& net, const Eigen::Vector2d& x) {
  if (net.dim != 2) throw ParseError("net_eval(Vector2d) needs a 2D net");
  const FeasibleSpec spec = feasible_spec(net);
  Basis2DWork wk;
  wk.resize(net.basis2.N);
  Net2DState st;
  st.xs.reserve(net.layers.size());
  st.Js.reserve(net.layers.size());
  Eigen::Vector2d cur = x;
  Eigen::Matrix2d J = Eigen::Matrix2d::Identity();
  double det = 1.0;
  for (const auto& layer : net.layers) {
    if (!layer_feasible(layer.w, spec))
      throw InfeasibleLayer("layer weights violate the feasibility budget");
    const Layer2DEval ev = layer_eval(net.basis2, layer.w, cur, wk);
    st.xs.push_back(cur);
    st.Js.push_back(ev.J);
    J = ev.J * J;  // outer layer acts after what is already composed
    det *= ev.J.determinant();
    cur = ev.y;
  }
  st.y = cur;
  st.J = J;
  st.detJ = det;
  return st;
}

std::string net_to_json(const DiffeoNet& net) {
  nlohmann::json j;
  j["dim"] = net.dim;
  j["epsilon"] = net.epsilon;
  if (net.dim == 1)
    j["basis"] = {{"kind", "sine1d"}, {"M", net.basis1.M}};
  else
    j["basis"] = {{"kind", "mixed2d"}, {"N", net.basis2.N}};
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    nlohmann::json row = nlohmann::json::array();
    for (int n = 0; n < layer.w.size(); ++n) row.push_back(layer.w[n]);
    layers.push_back(std::move(row));
  }
  j["layers"] = std::move(layers);
  return j.dump(2) + "\n";
}

DiffeoNet net_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad net JSON: ") + e.what());
  }
  try {
    const int dim = j.at("dim").get<int>();
    const double eps = j.at("epsilon").get<double>();
    const auto& basis = j.at("basis");
    const std::string kind = basis.at("kind").get<std::string>();
    DiffeoNet net;
    if (dim == 1) {
      if (kind != "sine1d") throw ParseError("1D net must use basis kind sine1d");
      net = make_net_1d(0, basis.at("M").get<int>(), eps);
    } else if (dim == 2) {
      if (kind != "mixed2d") throw ParseError("2D net must use basis kind mixed2d");
      net = make_net_2d(0, basis.at("N").get<int>(), eps);
    } else {
      throw ParseError("net dim must be 1 or 2");
    }
    const int m = net.layer_size();
    for (const auto& row : j.at("layers")) {
      if (static_cast<int>(row.size()) != m)
        throw ParseError("layer weight count does not match the basis size");
      DiffeoLayer layer;
      layer.w.resize(m);
      for (int n = 0; n < m; ++n) layer.w[n] = row.at(n).get<double>();
      net.layers.push_back(std::move(layer));
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad net JSON: ") + e.what());
  }
}

void save_net(const std::string& path, const DiffeoNet& net) {
  atomic_write_text(path, net_to_json(net));
}

DiffeoNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open net JSON: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return net_from_json(buf.str());
}

}  // namespace shapereg
