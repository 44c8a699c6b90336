#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace cli = shapereg::cli;

namespace {

template <typename Cmd>
void add_common(CLI::App* app, Cmd& cfg) {
  app->add_option("--layers", cfg.layers, "number of composed layers");
  app->add_option("--basis", cfg.basis, "basis size (modes per layer)");
  app->add_option("--grid", cfg.grid, "sample grid for builtin shapes and lifted images");
  app->add_option("--epsilon", cfg.epsilon, "feasibility margin in (0,1)");
  app->add_option("--max-iter", cfg.max_iter, "iteration cap");
  app->add_option("--grad-tol", cfg.grad_tol, "gradient infinity-norm stop");
  app->add_option("--seed", cfg.seed, "random seed");
  app->add_option("--out", cfg.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal reparametrization of curves and surfaces"};
  app.require_subcommand(1);

  cli::CurveCmd curve;
  auto* sc_curve = app.add_subcommand("reparam-curve", "fit a warp aligning two curves");
  sc_curve->add_option("input1", curve.input1, "warped-side curve CSV (omit for builtin pair)");
  sc_curve->add_option("input2", curve.input2, "reference curve CSV");
  add_common(sc_curve, curve);
  sc_curve->add_option("--transform", curve.transform, "srvt or q");

  cli::SurfaceCmd surf;
  auto* sc_surf = app.add_subcommand("reparam-surface", "fit a warp aligning two surfaces");
  sc_surf->add_option("input1", surf.input1, "warped-side surface CSV or PGM");
  sc_surf->add_option("input2", surf.input2, "reference surface CSV or PGM");
  add_common(sc_surf, surf);
  sc_surf->add_option("--transform", surf.transform, "srnf or qsurf");

  cli::InterpCmd interp;
  auto* sc_interp = app.add_subcommand("interpolate", "emit a transition path between shapes");
  sc_interp->add_option("input1", interp.input1, "first shape (omit for builtin pair)");
  sc_interp->add_option("input2", interp.input2, "second shape");
  add_common(sc_interp, interp);
  sc_interp->add_option("--transform", interp.transform, "transform for reparam-lerp");
  sc_interp->add_option("--mode", interp.mode, "direct, reparam-lerp, or geodesic");
  sc_interp->add_option("--frames", interp.frames, "number of path samples");

  cli::SweepCmd sweep;
  auto* sc_sweep = app.add_subcommand("sweep", "grid of fits over network sizes");
  sc_sweep->add_option("input1", sweep.input1, "warped-side curve CSV (omit for builtin pair)");
  sc_sweep->add_option("input2", sweep.input2, "reference curve CSV");
  sc_sweep->add_option("--layers", sweep.layers, "layer counts, comma separated")
      ->delimiter(',');
  sc_sweep->add_option("--basis", sweep.basis, "basis sizes, comma separated")->delimiter(',');
  sc_sweep->add_option("--grid", sweep.grid, "sample grid for builtin shapes");
  sc_sweep->add_option("--epsilon", sweep.epsilon, "feasibility margin in (0,1)");
  sc_sweep->add_option("--max-iter", sweep.max_iter, "iteration cap per cell");
  sc_sweep->add_option("--grad-tol", sweep.grad_tol, "gradient infinity-norm stop");
  sc_sweep->add_option("--seed", sweep.seed, "random seed");
  sc_sweep->add_option("--out", sweep.out, "output directory");
  sc_sweep->add_option("--transform", sweep.transform, "srvt or q");

  cli::BoundsCmd bounds;
  auto* sc_bounds = app.add_subcommand("bounds", "composition-bound ratio experiment");
  sc_bounds->add_option("--k", bounds.k, "derivative orders, comma separated")->delimiter(',');
  sc_bounds->add_option("--layers", bounds.layers, "layer counts, comma separated")
      ->delimiter(',');
  sc_bounds->add_option("--basis", bounds.basis, "basis sizes, comma separated")->delimiter(',');
  sc_bounds->add_option("--runs", bounds.runs, "random draws per cell (0: table only)");
  sc_bounds->add_option("--ngrid", bounds.ngrid, "evaluation grid (>= 1001)");
  sc_bounds->add_option("--seed", bounds.seed, "random seed");
  sc_bounds->add_option("--out", bounds.out, "output directory");

  cli::CompareGdCmd cmp;
  auto* sc_cmp = app.add_subcommand("compare-gd", "gradient-descent baseline vs deep fit");
  sc_cmp->add_option("input1", cmp.input1, "warped-side curve CSV (omit for builtin pair)");
  sc_cmp->add_option("input2", cmp.input2, "reference curve CSV");
  sc_cmp->add_option("--grid", cmp.grid, "sample grid for builtin shapes");
  sc_cmp->add_option("--epsilon", cmp.epsilon, "feasibility margin in (0,1)");
  sc_cmp->add_option("--max-iter", cmp.max_iter, "iteration cap");
  sc_cmp->add_option("--grad-tol", cmp.grad_tol, "gradient infinity-norm stop");
  sc_cmp->add_option("--seed", cmp.seed, "random seed");
  sc_cmp->add_option("--out", cmp.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  if (sc_curve->parsed()) return cli::cmd_reparam_curve(curve);
  if (sc_surf->parsed()) return cli::cmd_reparam_surface(surf);
  if (sc_interp->parsed()) return cli::cmd_interpolate(interp);
  if (sc_sweep->parsed()) return cli::cmd_sweep(sweep);
  if (sc_bounds->parsed()) return cli::cmd_bounds(bounds);
  if (sc_cmp->parsed()) return cli::cmd_compare_gd(cmp);
  return 2;
}
