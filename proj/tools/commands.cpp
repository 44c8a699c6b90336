#include "commands.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>

#include "json.hpp"

#include "shapereg/bounds.hpp"
#include "shapereg/io.hpp"
#include "shapereg/optimize.hpp"
#include "shapereg/rng.hpp"

namespace shapereg::cli {

namespace {

using nlohmann::json;

std::string join(const std::string& dir, const std::string& name) {
  return dir + "/" + name;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const VanishingCombination& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const DegenerateSurface& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const StagnatedStep& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NearSingularDerivative& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InfeasibleLayer& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateCurve& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const GridMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

void require_ranges(int layers, int basis, int grid, double epsilon) {
  if (layers < 1) throw ParseError("--layers must be >= 1");
  if (basis < 1) throw ParseError("--basis must be >= 1");
  if (grid < 16) throw ParseError("--grid must be >= 16");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParseError("--epsilon must lie in (0,1)");
}

std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

std::string phi_csv_1d(const DiffeoNet& net, int K) {
  std::string out = "x,phi\n";
  for (int i = 0; i < K; ++i) {
    const double x = static_cast<double>(i) / (K - 1);
    out += fmt_double(x) + "," + fmt_double(net_eval(net, x).y) + "\n";
  }
  return out;
}

std::string phi_csv_2d(const DiffeoNet& net, int K) {
  std::string out = "x,y,phi1,phi2\n";
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      const double x = static_cast<double>(i) / (K - 1);
      const double y = static_cast<double>(j) / (K - 1);
      const auto st = net_eval(net, Eigen::Vector2d(x, y));
      out += fmt_double(x) + "," + fmt_double(y) + "," + fmt_double(st.y[0]) + "," +
             fmt_double(st.y[1]) + "\n";
    }
  }
  return out;
}

json fit_json(const FitResult& fit) {
  return {{"E0", fit.E0},
          {"E_final", fit.E_final},
          {"relative_loss", fit.E0 > 0.0 ? fit.E_final / fit.E0 : 0.0},
          {"iters", fit.iters},
          {"stop_reason", fit.stop_reason}};
}

void write_run_json(const std::string& out_dir, const json& doc) {
  atomic_write_text(join(out_dir, "run.json"), doc.dump(2) + "\n");
}

}  // namespace

// ---- builtin shapes ----

Eigen::Vector2d builtin_curve_point(double t) {
  return {std::cos(2.0 * M_PI * t), std::sin(4.0 * M_PI * t)};
}

double builtin_warp(double t) {
  return std::log(20.0 * t + 1.0) / (2.0 * std::log(21.0)) +
         (1.0 + std::tanh(20.0 * (t - 0.5))) / (4.0 * std::tanh(10.0));
}

SampledCurve builtin_curve(int K) {
  Eigen::MatrixXd v(K, 2);
  for (int k = 0; k < K; ++k)
    v.row(k) = builtin_curve_point(static_cast<double>(k) / (K - 1)).transpose();
  return make_curve(v);
}

SampledCurve builtin_warped_curve(int K) {
  Eigen::MatrixXd v(K, 2);
  for (int k = 0; k < K; ++k)
    v.row(k) = builtin_curve_point(builtin_warp(static_cast<double>(k) / (K - 1))).transpose();
  return make_curve(v);
}

double builtin_bump(double x, double y) {
  const double dx = x - 0.45;
  const double dy = y - 0.55;
  return 0.35 * std::exp(-(dx * dx + dy * dy) / 0.05);
}

SampledSurface builtin_surface(int K) {
  std::array<Eigen::MatrixXd, 3> ch;
  for (auto& m : ch) m.resize(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      const double x = static_cast<double>(i) / (K - 1);
      const double y = static_cast<double>(j) / (K - 1);
      ch[0](i, j) = x;
      ch[1](i, j) = y;
      ch[2](i, j) = builtin_bump(x, y);
    }
  }
  return make_surface(std::move(ch));
}

DiffeoNet builtin_surface_warp() {
  DiffeoNet net = make_net_2d(2, 2, 1e-2);
  const Eigen::VectorXd L = lipschitz_constants(net.basis2);
  Rng rng(0x5eedf00dULL);
  for (auto& layer : net.layers) {
    for (int n = 0; n < layer.w.size(); ++n) layer.w[n] = rng.normal();
    layer.w *= 0.35 / weighted_l1(layer.w, L);
  }
  return net;
}

SampledSurface builtin_warped_surface(int K) {
  const DiffeoNet warp = builtin_surface_warp();
  std::array<Eigen::MatrixXd, 3> ch;
  for (auto& m : ch) m.resize(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      const double x = static_cast<double>(i) / (K - 1);
      const double y = static_cast<double>(j) / (K - 1);
      const auto st = net_eval(warp, Eigen::Vector2d(x, y));
      ch[0](i, j) = st.y[0];
      ch[1](i, j) = st.y[1];
      ch[2](i, j) = builtin_bump(st.y[0], st.y[1]);
    }
  }
  return make_surface(std::move(ch));
}

// ---- shape loading ----

ShapeInput load_shape(const std::string& path, int grid) {
  ShapeInput in;
  if (lower_ext(path) == "pgm") {
    const GrayImage img = read_pgm(path);
    if (img.width < 4 || img.height < 4)
      throw ParseError(path + ": image below the minimum 4x4 grid");
    in.dim = 2;
    in.surface = lift_image(img, grid);
    return in;
  }
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  std::string header;
  std::getline(f, header);
  f.close();
  if (header.rfind("t,", 0) == 0) {
    in.dim = 1;
    in.curve = read_curve_csv(path);
  } else if (header.rfind("x,y,", 0) == 0) {
    in.dim = 2;
    in.surface = read_surface_csv(path);
  } else {
    throw ParseError(path + ": unrecognized CSV header");
  }
  return in;
}

QMap transform_curve(const SampledCurve& c, const std::string& name) {
  if (name == "srvt") return srvt(c);
  if (name == "q") return qmap_curve(c);
  throw ParseError("--transform for curves must be srvt or q");
}

QMap transform_surface(const SampledSurface& s, const std::string& name) {
  if (name == "srnf") return srnf(s);
  if (name == "qsurf") return qmap_surface(s);
  throw ParseError("--transform for surfaces must be srnf or qsurf");
}

// ---- commands ----

int cmd_reparam_curve(const CurveCmd& cfg) {
  return run_guarded([&]() -> int {
    require_ranges(cfg.layers, cfg.basis, cfg.grid, cfg.epsilon);
    SampledCurve c1, c2;
    if (cfg.input1.empty() && cfg.input2.empty()) {
      c1 = builtin_warped_curve(cfg.grid);
      c2 = builtin_curve(cfg.grid);
    } else {
      const ShapeInput s1 = load_shape(cfg.input1, cfg.grid);
      const ShapeInput s2 = load_shape(cfg.input2, cfg.grid);
      if (s1.dim != 1 || s2.dim != 1) throw ParseError("reparam-curve needs curve inputs");
      c1 = s1.curve;
      c2 = s2.curve;
    }
    LossProblem p = make_loss_problem(transform_curve(c1, cfg.transform),
                                      transform_curve(c2, cfg.transform),
                                      make_net_1d(cfg.layers, cfg.basis, cfg.epsilon));
    BfgsOptions opt;
    opt.max_iter = cfg.max_iter;
    opt.grad_tol = cfg.grad_tol;
    opt.seed = cfg.seed;
    const FitResult fit = bfgs_reparam(p, opt, feasible_spec(p.net));
    const SampledCurve warped = lerp_after_reparam(c1, c2, fit.net, {0.0}).front();

    save_net(join(cfg.out, "net.json"), fit.net);
    atomic_write_text(join(cfg.out, "phi.csv"), phi_csv_1d(fit.net, c1.K()));
    atomic_write_text(join(cfg.out, "reparametrized.csv"), curve_csv(warped));
    atomic_write_text(join(cfg.out, "convergence.csv"), convergence_csv(fit.log));
    write_run_json(cfg.out, {{"command", "reparam-curve"},
                             {"input1", cfg.input1},
                             {"input2", cfg.input2},
                             {"layers", cfg.layers},
                             {"basis", cfg.basis},
                             {"grid", cfg.grid},
                             {"epsilon", cfg.epsilon},
                             {"max_iter", cfg.max_iter},
                             {"grad_tol", cfg.grad_tol},
                             {"seed", cfg.seed},
                             {"out", cfg.out},
                             {"transform", cfg.transform},
                             {"result", fit_json(fit)}});
    std::cout << "loss " << fmt_double(fit.E0) << " -> " << fmt_double(fit.E_final) << " ("
              << fit.iters << " iterations, " << fit.stop_reason << ")\n";
    return 0;
  });
}

int cmd_reparam_surface(const SurfaceCmd& cfg) {
  return run_guarded([&]() -> int {
    require_ranges(cfg.layers, cfg.basis, cfg.grid, cfg.epsilon);
    SampledSurface f1, f2;
    if (cfg.input1.empty() && cfg.input2.empty()) {
      f1 = builtin_warped_surface(cfg.grid);
      f2 = builtin_surface(cfg.grid);
    } else {
      const ShapeInput s1 = load_shape(cfg.input1, cfg.grid);
      const ShapeInput s2 = load_shape(cfg.input2, cfg.grid);
      if (s1.dim != 2 || s2.dim != 2) throw ParseError("reparam-surface needs surface inputs");
      f1 = s1.surface;
      f2 = s2.surface;
    }
    LossProblem p = make_loss_problem(transform_surface(f1, cfg.transform),
                                      transform_surface(f2, cfg.transform),
                                      make_net_2d(cfg.layers, cfg.basis, cfg.epsilon));
    BfgsOptions opt;
    opt.max_iter = cfg.max_iter;
    opt.grad_tol = cfg.grad_tol;
    opt.seed = cfg.seed;
    const FitResult fit = bfgs_reparam(p, opt, feasible_spec(p.net));
    const SampledSurface warped = lerp_after_reparam(f1, f2, fit.net, {0.0}).front();

    save_net(join(cfg.out, "net.json"), fit.net);
    atomic_write_text(join(cfg.out, "warp.csv"), phi_csv_2d(fit.net, f1.K()));
    atomic_write_text(join(cfg.out, "reparametrized.csv"), surface_csv(warped));
    atomic_write_text(join(cfg.out, "convergence.csv"), convergence_csv(fit.log));
    write_run_json(cfg.out, {{"command", "reparam-surface"},
                             {"input1", cfg.input1},
                             {"input2", cfg.input2},
                             {"layers", cfg.layers},
                             {"basis", cfg.basis},
                             {"grid", cfg.grid},
                             {"epsilon", cfg.epsilon},
                             {"max_iter", cfg.max_iter},
                             {"grad_tol", cfg.grad_tol},
                             {"seed", cfg.seed},
                             {"out", cfg.out},
                             {"transform", cfg.transform},
                             {"result", fit_json(fit)}});
    std::cout << "loss " << fmt_double(fit.E0) << " -> " << fmt_double(fit.E_final) << " ("
              << fit.iters << " iterations, " << fit.stop_reason << ")\n";
    return 0;
  });
}

int cmd_interpolate(const InterpCmd& cfg) {
  return run_guarded([&]() -> int {
    require_ranges(cfg.layers, cfg.basis, cfg.grid, cfg.epsilon);
    if (cfg.frames < 2) throw ParseError("--frames must be >= 2");
    if (cfg.mode != "direct" && cfg.mode != "reparam-lerp" && cfg.mode != "geodesic")
      throw ParseError("--mode must be direct, reparam-lerp, or geodesic");
    ShapeInput s1, s2;
    if (cfg.input1.empty() && cfg.input2.empty()) {
      s1.dim = s2.dim = 1;
      s1.curve = builtin_warped_curve(cfg.grid);
      s2.curve = builtin_curve(cfg.grid);
    } else {
      s1 = load_shape(cfg.input1, cfg.grid);
      s2 = load_shape(cfg.input2, cfg.grid);
    }
    if (s1.dim != s2.dim) throw ParseError("interpolate needs two shapes of the same kind");
    if (cfg.mode == "geodesic" && s1.dim != 1)
      throw ParseError("geodesic interpolation is defined for curves");

    std::vector<double> taus(cfg.frames);
    for (int i = 0; i < cfg.frames; ++i) taus[i] = static_cast<double>(i) / (cfg.frames - 1);

    json run = {{"command", "interpolate"}, {"input1", cfg.input1},  {"input2", cfg.input2},
                {"mode", cfg.mode},         {"layers", cfg.layers},  {"basis", cfg.basis},
                {"grid", cfg.grid},         {"epsilon", cfg.epsilon}, {"max_iter", cfg.max_iter},
                {"grad_tol", cfg.grad_tol}, {"seed", cfg.seed},      {"frames", cfg.frames},
                {"out", cfg.out},           {"transform", cfg.transform}};

    std::string manifest;
    if (cfg.mode == "geodesic") {
      const auto path = geodesic_curves(s1.curve, s2.curve, taus);
      manifest = write_interpolation_path(cfg.out, "frame", path, taus);
    } else {
      DiffeoNet net = s1.dim == 1 ? make_net_1d(0, cfg.basis, cfg.epsilon)
                                  : make_net_2d(0, cfg.basis, cfg.epsilon);
      if (cfg.mode == "reparam-lerp") {
        QMap q1 = s1.dim == 1 ? transform_curve(s1.curve, cfg.transform)
                              : transform_surface(s1.surface, cfg.transform);
        QMap q2 = s1.dim == 1 ? transform_curve(s2.curve, cfg.transform)
                              : transform_surface(s2.surface, cfg.transform);
        DiffeoNet model = s1.dim == 1 ? make_net_1d(cfg.layers, cfg.basis, cfg.epsilon)
                                      : make_net_2d(cfg.layers, cfg.basis, cfg.epsilon);
        LossProblem p = make_loss_problem(std::move(q1), std::move(q2), std::move(model));
        BfgsOptions opt;
        opt.max_iter = cfg.max_iter;
        opt.grad_tol = cfg.grad_tol;
        opt.seed = cfg.seed;
        const FitResult fit = bfgs_reparam(p, opt, feasible_spec(p.net));
        net = fit.net;
        save_net(join(cfg.out, "net.json"), net);
        atomic_write_text(join(cfg.out, "convergence.csv"), convergence_csv(fit.log));
        run["result"] = fit_json(fit);
        std::cout << "loss " << fmt_double(fit.E0) << " -> " << fmt_double(fit.E_final)
                  << " (reduction "
                  << fmt_double(fit.E0 > 0.0 ? 1.0 - fit.E_final / fit.E0 : 0.0) << ")\n";
      }
      if (s1.dim == 1) {
        const auto path = lerp_after_reparam(s1.curve, s2.curve, net, taus);
        manifest = write_interpolation_path(cfg.out, "frame", path, taus);
      } else {
        const auto path = lerp_after_reparam(s1.surface, s2.surface, net, taus);
        manifest = write_interpolation_path(cfg.out, "frame", path, taus);
      }
    }
    run["manifest"] = manifest;
    write_run_json(cfg.out, run);
    return 0;
  });
}

int cmd_sweep(const SweepCmd& cfg) {
  return run_guarded([&]() -> int {
    if (cfg.grid < 16) throw ParseError("--grid must be >= 16");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw ParseError("--epsilon must lie in (0,1)");
    for (int L : cfg.layers)
      if (L < 0) throw ParseError("--layers entries must be >= 0");
    for (int M : cfg.basis)
      if (M < 1) throw ParseError("--basis entries must be >= 1");
    SampledCurve c1, c2;
    if (cfg.input1.empty() && cfg.input2.empty()) {
      c1 = builtin_warped_curve(cfg.grid);
      c2 = builtin_curve(cfg.grid);
    } else {
      const ShapeInput s1 = load_shape(cfg.input1, cfg.grid);
      const ShapeInput s2 = load_shape(cfg.input2, cfg.grid);
      if (s1.dim != 1 || s2.dim != 1) throw ParseError("sweep needs curve inputs");
      c1 = s1.curve;
      c2 = s2.curve;
    }
    const QMap q1 = transform_curve(c1, cfg.transform);
    const QMap q2 = transform_curve(c2, cfg.transform);
    BfgsOptions opt;
    opt.max_iter = cfg.max_iter;
    opt.grad_tol = cfg.grad_tol;
    opt.seed = cfg.seed;
    const auto cells = run_sweep(q1, q2, cfg.layers, cfg.basis, opt, cfg.epsilon);
    atomic_write_text(join(cfg.out, "sweep.csv"), sweep_csv(cells));
    write_run_json(cfg.out, {{"command", "sweep"},
                             {"input1", cfg.input1},
                             {"input2", cfg.input2},
                             {"layers", cfg.layers},
                             {"basis", cfg.basis},
                             {"grid", cfg.grid},
                             {"epsilon", cfg.epsilon},
                             {"max_iter", cfg.max_iter},
                             {"grad_tol", cfg.grad_tol},
                             {"seed", cfg.seed},
                             {"out", cfg.out},
                             {"transform", cfg.transform}});
    std::cout << sweep_csv(cells);
    return 0;
  });
}

int cmd_bounds(const BoundsCmd& cfg) {
  return run_guarded([&]() -> int {
    if (cfg.runs < 0) throw ParseError("--runs must be >= 0");
    if (cfg.ngrid < 1001) throw ParseError("--ngrid must be >= 1001");
    const SchroederTable tab = schroeder(10);
    std::cout << "k,Mk\n";
    for (int k = 1; k <= 10; ++k) std::cout << k << "," << tab.M[k] << "\n";

    std::vector<BoundRow> rows;
    if (cfg.runs > 0) {
      BoundExperimentOptions opt;
      opt.runs = cfg.runs;
      opt.seed = cfg.seed;
      opt.N_grid = cfg.ngrid;
      rows = bound_ratio_experiment(cfg.k, cfg.layers, cfg.basis, opt);
    }
    atomic_write_text(join(cfg.out, "bound_report.csv"), bound_report_csv(rows));
    atomic_write_text(join(cfg.out, "bound_summary.json"), bound_summary_json(rows));
    write_run_json(cfg.out, {{"command", "bounds"},
                             {"k", cfg.k},
                             {"layers", cfg.layers},
                             {"basis", cfg.basis},
                             {"runs", cfg.runs},
                             {"ngrid", cfg.ngrid},
                             {"seed", cfg.seed},
                             {"out", cfg.out}});
    const SchroederTable full = schroeder(12);
    for (const auto& r : rows) {
      if (r.ratio > static_cast<double>(full.M[r.k]) + 1e-6) {
        std::cerr << "bound violated: k=" << r.k << " L=" << r.L << " M=" << r.M
                  << " ratio=" << fmt_double(r.ratio) << "\n";
        return 1;
      }
    }
    return 0;
  });
}

int cmd_compare_gd(const CompareGdCmd& cfg) {
  return run_guarded([&]() -> int {
    if (cfg.grid < 16) throw ParseError("--grid must be >= 16");
    SampledCurve c1, c2;
    if (cfg.input1.empty() && cfg.input2.empty()) {
      c1 = builtin_warped_curve(cfg.grid);
      c2 = builtin_curve(cfg.grid);
    } else {
      const ShapeInput s1 = load_shape(cfg.input1, cfg.grid);
      const ShapeInput s2 = load_shape(cfg.input2, cfg.grid);
      if (s1.dim != 1 || s2.dim != 1) throw ParseError("compare-gd needs curve inputs");
      c1 = s1.curve;
      c2 = s2.curve;
    }
    const QMap q1 = srvt(c1);
    const QMap q2 = srvt(c2);

    GDConfig gd;
    gd.M = 6;
    gd.max_iter = cfg.max_iter;
    gd.grad_tol = cfg.grad_tol;
    gd.epsilon = cfg.epsilon;
    const FitResult gd_fit = gd_reparam(q1, q2, gd);

    LossProblem p = make_loss_problem(q1, q2, make_net_1d(6, 6, cfg.epsilon));
    BfgsOptions opt;
    opt.max_iter = cfg.max_iter;
    opt.grad_tol = cfg.grad_tol;
    opt.seed = cfg.seed;
    const FitResult deep_fit = bfgs_reparam(p, opt, feasible_spec(p.net));

    atomic_write_text(join(cfg.out, "gd_convergence.csv"), convergence_csv(gd_fit.log));
    atomic_write_text(join(cfg.out, "deep_convergence.csv"), convergence_csv(deep_fit.log));
    atomic_write_text(join(cfg.out, "gd_phi.csv"), phi_csv_1d(gd_fit.net, c1.K()));
    atomic_write_text(join(cfg.out, "deep_phi.csv"), phi_csv_1d(deep_fit.net, c1.K()));
    write_run_json(cfg.out, {{"command", "compare-gd"},
                             {"input1", cfg.input1},
                             {"input2", cfg.input2},
                             {"grid", cfg.grid},
                             {"epsilon", cfg.epsilon},
                             {"max_iter", cfg.max_iter},
                             {"grad_tol", cfg.grad_tol},
                             {"seed", cfg.seed},
                             {"out", cfg.out},
                             {"gd", fit_json(gd_fit)},
                             {"deep", fit_json(deep_fit)}});
    std::cout << "gd   " << fmt_double(gd_fit.E0) << " -> " << fmt_double(gd_fit.E_final) << "\n"
              << "deep " << fmt_double(deep_fit.E0) << " -> " << fmt_double(deep_fit.E_final)
              << "\n";
    return 0;
  });
}

}  // namespace shapereg::cli
