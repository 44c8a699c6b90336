#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shapereg/diffeo.hpp"
#include "shapereg/geometry.hpp"
#include "shapereg/transforms.hpp"

namespace shapereg::cli {

// ---- builtin benchmark shapes ----

// Two-frequency closed curve c(t) = (cos 2 pi t, sin 4 pi t).
Eigen::Vector2d builtin_curve_point(double t);
// Logarithmic-plus-sigmoid warp of [0,1] with steep mid and end regions.
double builtin_warp(double t);
SampledCurve builtin_curve(int K);
SampledCurve builtin_warped_curve(int K);  // c o warp, sampled analytically

// Gaussian-bump graph surface and a fixed feasible synthetic warp.
double builtin_bump(double x, double y);
SampledSurface builtin_surface(int K);
DiffeoNet builtin_surface_warp();
SampledSurface builtin_warped_surface(int K);  // f o warp, sampled analytically

// ---- shape loading ----

struct ShapeInput {
  int dim = 0;  // 1 curve, 2 surface
  SampledCurve curve;
  SampledSurface surface;
};

// CSV headers decide the kind (t,... curve / x,y,... surface); .pgm images are
// lifted to a grid x grid graph surface and must be at least 4x4.
ShapeInput load_shape(const std::string& path, int grid);

QMap transform_curve(const SampledCurve& c, const std::string& name);     // srvt | q
QMap transform_surface(const SampledSurface& s, const std::string& name);  // srnf | qsurf

// ---- command configs (defaults are the documented CLI defaults) ----

struct CurveCmd {
  std::string input1, input2;  // both empty: builtin pair (warped, reference)
  int layers = 10;
  int basis = 10;
  int grid = 1024;
  double epsilon = 1e-2;
  int max_iter = 200;
  double grad_tol = 1e-8;
  uint64_t seed = 0;
  std::string out = "out";
  std::string transform = "srvt";
};

struct SurfaceCmd {
  std::string input1, input2;
  int layers = 5;
  int basis = 3;  // max frequency N
  int grid = 64;
  double epsilon = 1e-2;
  int max_iter = 200;
  double grad_tol = 1e-8;
  uint64_t seed = 0;
  std::string out = "out";
  std::string transform = "srnf";
};

struct InterpCmd {
  std::string input1, input2;
  std::string mode = "direct";  // direct | reparam-lerp | geodesic
  int layers = 10;
  int basis = 10;
  int grid = 256;
  double epsilon = 1e-2;
  int max_iter = 200;
  double grad_tol = 1e-8;
  uint64_t seed = 0;
  int frames = 11;
  std::string out = "out";
  std::string transform = "srvt";
};

struct SweepCmd {
  std::string input1, input2;
  std::vector<int> layers{0, 1, 2, 4, 6, 8, 10};
  std::vector<int> basis{1, 2, 4, 6, 8, 10};
  int grid = 1024;
  double epsilon = 1e-2;
  int max_iter = 200;
  double grad_tol = 1e-8;
  uint64_t seed = 0;
  std::string out = "out";
  std::string transform = "srvt";
};

struct BoundsCmd {
  std::vector<int> k{1, 2, 3};
  std::vector<int> layers{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> basis{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int runs = 500;
  int ngrid = 2001;
  uint64_t seed = 0;
  std::string out = "out";
};

struct CompareGdCmd {
  std::string input1, input2;
  int grid = 1024;
  double epsilon = 1e-2;
  int max_iter = 200;
  double grad_tol = 1e-8;
  uint64_t seed = 0;
  std::string out = "out";
};

// Each command returns a process exit code: 0 success, 2 input/parse errors,
// 3 optimization failure, 4 degenerate surface, 5 vanishing interpolation
// combination, 1 other (bounds: a ratio above its constant).
int cmd_reparam_curve(const CurveCmd& cfg);
int cmd_reparam_surface(const SurfaceCmd& cfg);
int cmd_interpolate(const InterpCmd& cfg);
int cmd_sweep(const SweepCmd& cfg);
int cmd_bounds(const BoundsCmd& cfg);
int cmd_compare_gd(const CompareGdCmd& cfg);

}  // namespace shapereg::cli
