#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <vector>

#include "shapereg/diffeo.hpp"
#include "shapereg/rng.hpp"

using namespace shapereg;

namespace {

constexpr double kPi = 3.14159265358979323846;

DiffeoNet seeded_net_1d(int L, int M, uint64_t seed, double scale = 0.8) {
  DiffeoNet net = make_net_1d(L, M);
  Rng rng(seed);
  for (auto& layer : net.layers)
    for (int n = 0; n < M; ++n) layer.w[n] = scale * rng.normal();
  project_net(net);
  return net;
}

DiffeoNet seeded_net_2d(int L, int N, uint64_t seed, double scale = 0.8) {
  DiffeoNet net = make_net_2d(L, N);
  Rng rng(seed);
  for (auto& layer : net.layers)
    for (int n = 0; n < layer.w.size(); ++n) layer.w[n] = scale * rng.normal();
  project_net(net);
  return net;
}

}  // namespace

TEST_CASE("basis sizes and factory validation") {
  CHECK(basis_size_2d(1) == 6);
  CHECK(basis_size_2d(2) == 20);
  CHECK(basis_size_2d(3) == 42);

  const DiffeoNet n1 = make_net_1d(3, 7);
  CHECK(n1.dim == 1);
  CHECK(n1.layer_size() == 7);
  CHECK(n1.num_layers() == 3);
  CHECK(n1.weight_count() == 21);
  for (const auto& layer : n1.layers) CHECK(layer.w.cwiseAbs().maxCoeff() == 0.0);

  const DiffeoNet n2 = make_net_2d(2, 2);
  CHECK(n2.dim == 2);
  CHECK(n2.layer_size() == 20);

  CHECK_THROWS_AS(make_net_1d(1, 0), ParseError);
  CHECK_THROWS_AS(make_net_1d(-1, 3), ParseError);
  CHECK_THROWS_AS(make_net_1d(1, 3, 0.0), ParseError);
  CHECK_THROWS_AS(make_net_2d(1, 0), ParseError);
  CHECK_THROWS_AS(make_net_2d(1, 2, 1.0), ParseError);
}

TEST_CASE("Lipschitz constants of the vector-field bases") {
  const Eigen::VectorXd L1 = lipschitz_constants(Basis1D{5});
  REQUIRE(L1.size() == 5);
  CHECK((L1.array() == 1.0).all());

  const Eigen::VectorXd L2 = lipschitz_constants(Basis2D{2});
  REQUIRE(L2.size() == 20);
  // per component: xi_1, xi_2, eta_{1,1}, eta_{1,2}, eta_{2,1}, eta_{2,2}, phi likewise
  auto Leta = [](int k, int l) { return std::sqrt(double(k * k + 2 * l * l)) / (k * l); };
  for (int comp = 0; comp < 2; ++comp) {
    const int base = comp * 10;
    CHECK(L2[base + 0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(L2[base + 1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(L2[base + 2] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    CHECK(L2[base + 3] == doctest::Approx(Leta(1, 2)).epsilon(1e-15));
    CHECK(L2[base + 4] == doctest::Approx(Leta(2, 1)).epsilon(1e-15));
    CHECK(L2[base + 5] == doctest::Approx(Leta(2, 2)).epsilon(1e-15));
    for (int p = 0; p < 4; ++p) CHECK(L2[base + 6 + p] == doctest::Approx(L2[base + 2 + p]).epsilon(1e-15));
  }
}

TEST_CASE("weight projection maps onto the feasible set") {
  FeasibleSpec spec;
  spec.epsilon = 0.1;
  spec.L = Eigen::VectorXd::Ones(2);

  Eigen::VectorXd w(2);
  w << 2.0, 0.0;
  CHECK(weighted_l1(w, spec.L) == 2.0);
  CHECK(!layer_feasible(w, spec));
  const Eigen::VectorXd p = project_weights(w, spec);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(p[1] == 0.0);
  CHECK(layer_feasible(p, spec));

  Eigen::VectorXd inside(2);
  inside << 0.3, -0.4;
  const Eigen::VectorXd q = project_weights(inside, spec);
  CHECK(q[0] == inside[0]);  // already feasible: untouched
  CHECK(q[1] == inside[1]);

  DiffeoNet net = make_net_1d(3, 4);
  for (auto& layer : net.layers) layer.w.setConstant(2.0);
  CHECK(!net_feasible(net));
  project_net(net);
  CHECK(net_feasible(net));
}

TEST_CASE("single layer evaluation matches the closed form") {
  Basis1DWork wk;
  wk.resize(1);
  Eigen::VectorXd w(1);
  w << 0.5;
  const Layer1DEval e = layer_eval(w, 0.5, wk);
  CHECK(e.y == doctest::Approx(0.5 + 0.5 / kPi).epsilon(1e-15));
  CHECK(e.d == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(layer_second_derivative(w, wk) == doctest::Approx(-0.5 * kPi).epsilon(1e-13));

  // generic point, M = 3
  wk.resize(3);
  Eigen::VectorXd w3(3);
  w3 << 0.2, -0.3, 0.15;
  const double x = 0.3137;
  const Layer1DEval e3 = layer_eval(w3, x, wk);
  double y = x, d = 1.0, dd = 0.0;
  for (int n = 1; n <= 3; ++n) {
    y += w3[n - 1] * std::sin(n * kPi * x) / (n * kPi);
    d += w3[n - 1] * std::cos(n * kPi * x);
    dd -= w3[n - 1] * n * kPi * std::sin(n * kPi * x);
  }
  CHECK(e3.y == doctest::Approx(y).epsilon(1e-14));
  CHECK(e3.d == doctest::Approx(d).epsilon(1e-14));
  CHECK(layer_second_derivative(w3, wk) == doctest::Approx(dd).epsilon(1e-13));
}

TEST_CASE("trig recurrences match direct evaluation") {
  Basis1DWork wk;
  wk.resize(7);
  trig_tables_1d(7, 0.3137, wk);
  for (int n = 1; n <= 7; ++n) {
    CHECK(wk.s[n - 1] == doctest::Approx(std::sin(n * kPi * 0.3137)).epsilon(1e-13));
    CHECK(wk.c[n - 1] == doctest::Approx(std::cos(n * kPi * 0.3137)).epsilon(1e-13));
  }
  Basis2DWork wk2;
  wk2.resize(4);
  trig_tables_2d(4, 0.3137, 0.7211, wk2);
  for (int k = 1; k <= 4; ++k) {
    CHECK(wk2.sx[k - 1] == doctest::Approx(std::sin(k * kPi * 0.3137)).epsilon(1e-13));
    CHECK(wk2.cy[k - 1] == doctest::Approx(std::cos(k * kPi * 0.7211)).epsilon(1e-13));
    CHECK(wk2.s2x[k - 1] == doctest::Approx(std::sin(2.0 * k * kPi * 0.3137)).epsilon(1e-13));
    CHECK(wk2.c2y[k - 1] == doctest::Approx(std::cos(2.0 * k * kPi * 0.7211)).epsilon(1e-13));
  }
}

TEST_CASE("2D basis fields match independently computed derivatives") {
  Basis2DWork wk;
  wk.resize(2);
  trig_tables_2d(2, 0.3, 0.2, wk);
  std::vector<Field2D> fields(basis_size_2d(2));
  for_each_field_2d(2, wk, [&](int idx, const Field2D& f) { fields[idx] = f; });

  // eta_{1,2} acting on the first component, flattened index 3
  const Field2D& eta12 = fields[3];
  CHECK(eta12.comp == 0);
  CHECK(eta12.u == doctest::Approx(-0.10416826262303432).epsilon(1e-13));
  CHECK(eta12.ux == doctest::Approx(-0.23776412907378839).epsilon(1e-13));
  CHECK(eta12.uy == doctest::Approx(-0.95105651629515357).epsilon(1e-13));
  CHECK(eta12.uxx == doctest::Approx(1.0280995432381316).epsilon(1e-13));
  CHECK(eta12.uxy == doctest::Approx(-2.1707871342270599).epsilon(1e-13));
  CHECK(eta12.uyy == doctest::Approx(16.449592691810106).epsilon(1e-13));

  // phi_{2,1} acting on the second component, flattened index 18
  const Field2D& phi21 = fields[18];
  CHECK(phi21.comp == 1);
  CHECK(phi21.u == doctest::Approx(0.14395699839600815).epsilon(1e-13));
  CHECK(phi21.ux == doctest::Approx(-0.29389262614623656).epsilon(1e-13));
  CHECK(phi21.uy == doctest::Approx(0.29389262614623656).epsilon(1e-13));
}

TEST_CASE("two-layer 2D network matches an independently computed value") {
  DiffeoNet net = make_net_2d(2, 1);
  net.layers[0].w.resize(6);
  net.layers[0].w << 0.1, -0.15, 0.125, 0.05, 0.1, -0.1;
  net.layers[1].w.resize(6);
  net.layers[1].w << -0.05, 0.1, 0.12, -0.1, 0.05, 0.1;
  REQUIRE(net_feasible(net));

  const Net2DState st = net_eval(net, Eigen::Vector2d(0.3, 0.2));
  CHECK(st.y[0] == doctest::Approx(0.37242919382298187).epsilon(1e-13));
  CHECK(st.y[1] == doctest::Approx(0.17787753543846468).epsilon(1e-13));
  CHECK(st.detJ == doctest::Approx(1.0546920608827175).epsilon(1e-13));
  REQUIRE(st.xs.size() == 2);
  REQUIRE(st.Js.size() == 2);
  CHECK((st.xs[0] - Eigen::Vector2d(0.3, 0.2)).norm() == 0.0);
  CHECK(st.J.determinant() == doctest::Approx(st.detJ).epsilon(1e-12));
  const Eigen::Matrix2d prod = st.Js[1] * st.Js[0];
  CHECK((st.J - prod).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("network evaluation composes layers innermost first") {
  DiffeoNet net = seeded_net_1d(2, 3, 42);
  const double x = 0.41;
  const Net1DState st = net_eval(net, x);
  REQUIRE(st.xs.size() == 2);
  REQUIRE(st.ds.size() == 2);

  Basis1DWork wk;
  wk.resize(3);
  const Layer1DEval inner = layer_eval(net.layers[0].w, x, wk);
  const Layer1DEval outer = layer_eval(net.layers[1].w, inner.y, wk);
  CHECK(st.xs[0] == x);
  CHECK(st.xs[1] == doctest::Approx(inner.y).epsilon(1e-15));
  CHECK(st.y == doctest::Approx(outer.y).epsilon(1e-15));
  CHECK(st.d == doctest::Approx(inner.d * outer.d).epsilon(1e-14));
  CHECK(st.ds[0] == doctest::Approx(inner.d).epsilon(1e-15));

  CHECK_THROWS_AS(net_eval(net, Eigen::Vector2d(0.5, 0.5)), ParseError);
  CHECK_THROWS_AS(net_eval(make_net_2d(1, 1), 0.5), ParseError);
}

TEST_CASE("feasible 1D networks are monotone bijections of the interval") {
  const DiffeoNet net = seeded_net_1d(5, 8, 7u);
  const double floor = std::pow(net.epsilon, net.num_layers());

  CHECK(std::abs(net_eval(net, 0.0).y) < 1e-12);
  CHECK(std::abs(net_eval(net, 1.0).y - 1.0) < 1e-12);

  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const Net1DState st = net_eval(net, i / 1000.0);
    CHECK(st.d > 0.9 * floor);
    CHECK(st.y > prev);
    prev = st.y;
  }
}

TEST_CASE("feasible 2D networks preserve the boundary and orientation") {
  const DiffeoNet net = seeded_net_2d(3, 2, 11u);
  for (int i = 0; i <= 40; ++i) {
    const double s = i / 40.0;
    CHECK(std::abs(net_eval(net, Eigen::Vector2d(0.0, s)).y[0]) < 1e-12);
    CHECK(std::abs(net_eval(net, Eigen::Vector2d(1.0, s)).y[0] - 1.0) < 1e-12);
    CHECK(std::abs(net_eval(net, Eigen::Vector2d(s, 0.0)).y[1]) < 1e-12);
    CHECK(std::abs(net_eval(net, Eigen::Vector2d(s, 1.0)).y[1] - 1.0) < 1e-12);
  }
  for (int i = 0; i <= 25; ++i)
    for (int j = 0; j <= 25; ++j) {
      const Net2DState st = net_eval(net, Eigen::Vector2d(i / 25.0, j / 25.0));
      CHECK(st.detJ > 0.0);
      CHECK(st.y[0] >= -1e-12);
      CHECK(st.y[0] <= 1.0 + 1e-12);
      CHECK(st.y[1] >= -1e-12);
      CHECK(st.y[1] <= 1.0 + 1e-12);
    }
}

TEST_CASE("infeasible layers are rejected at evaluation time") {
  DiffeoNet net = make_net_1d(1, 1);
  net.layers[0].w[0] = 1.5;
  CHECK_THROWS_AS(net_eval(net, 0.5), InfeasibleLayer);

  DiffeoNet net2 = make_net_2d(1, 1);
  net2.layers[0].w.setConstant(0.5);
  CHECK_THROWS_AS(net_eval(net2, Eigen::Vector2d(0.5, 0.5)), InfeasibleLayer);
}

TEST_CASE("net JSON serialization round-trips bitwise") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "shapereg_diffeo_tests";
  fs::create_directories(dir);

  const DiffeoNet net = seeded_net_2d(2, 2, 99u);
  const auto path = (dir / "net.json").string();
  save_net(path, net);
  const DiffeoNet back = load_net(path);
  CHECK(back.dim == 2);
  CHECK(back.basis2.N == 2);
  CHECK(back.epsilon == net.epsilon);
  REQUIRE(back.num_layers() == 2);
  for (int l = 0; l < 2; ++l)
    for (int n = 0; n < net.layer_size(); ++n)
      CHECK(back.layers[l].w[n] == net.layers[l].w[n]);

  const DiffeoNet one = seeded_net_1d(1, 4, 3u);
  const DiffeoNet oneback = net_from_json(net_to_json(one));
  CHECK((oneback.layers[0].w - one.layers[0].w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("net JSON parser rejects malformed input") {
  CHECK_THROWS_AS(net_from_json("{"), ParseError);
  CHECK_THROWS_AS(net_from_json("{\"dim\":3,\"epsilon\":0.01,\"basis\":{\"kind\":\"sine1d\",\"M\":2},\"layers\":[]}"),
                  ParseError);
  CHECK_THROWS_AS(net_from_json("{\"dim\":1,\"epsilon\":0.01,\"basis\":{\"kind\":\"mixed2d\",\"N\":2},\"layers\":[]}"),
                  ParseError);
  CHECK_THROWS_AS(
      net_from_json("{\"dim\":1,\"epsilon\":0.01,\"basis\":{\"kind\":\"sine1d\",\"M\":2},\"layers\":[[0.1]]}"),
      ParseError);
  CHECK_THROWS_AS(net_from_json("{\"epsilon\":0.01}"), ParseError);
  CHECK_THROWS_AS(load_net("/nonexistent/net.json"), ParseError);
}
