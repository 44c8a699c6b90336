#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shapereg/diffeo.hpp"
#include "shapereg/transforms.hpp"

namespace shapereg {

// E(W) = mean over the grid of |q1(x) - sqrt(phi'(x)) r(phi(x))|^2, with
// sqrt(det J_phi) in two dimensions; r is q2's interpolant.
struct LossProblem {
  QMap q1;
  QMap q2;
  DiffeoNet net;
};

// Validates kind/dim agreement and that net.dim matches the shapes.
LossProblem make_loss_problem(QMap q1, QMap q2, DiffeoNet net);

double loss(const LossProblem& p);
// Returns the loss; fills grad (layer-major flattened). Throws
// NearSingularDerivative when phi' (or det J) < 1e-10 at a sample.
double loss_grad(const LossProblem& p, Eigen::VectorXd& grad);

Eigen::VectorXd get_weights(const DiffeoNet& net);
void set_weights(DiffeoNet& net, const Eigen::VectorXd& W);

struct LogRow {
  int iter;
  double loss;
  double grad_norm;  // infinity norm
  double step;
  int projected;     // 1 when the projection moved the accepted iterate
};

struct OptimState {
  Eigen::VectorXd W;
  Eigen::MatrixXd H;  // inverse Hessian approximation, reset to I on failure
  int iter = 0;
  std::vector<LogRow> log;
};

struct BfgsOptions {
  int max_iter = 200;
  double grad_tol = 1e-8;       // absolute, infinity norm
  double c1 = 1e-4;             // Armijo slope fraction
  double rel_loss_floor = 1e-14;
  double min_step = 1e-16;
  bool record_iterates = false;  // keep accepted W per log row (for audits)
  bool resample_on_reset = false;  // redraw the sample grid at Hessian resets
  uint64_t seed = 0;
};

struct FitResult {
  DiffeoNet net;
  std::vector<LogRow> log;
  std::vector<Eigen::VectorXd> iterates;
  double E0 = 0.0;
  double E_final = 0.0;
  int iters = 0;
  std::string stop_reason;
};

// Projected BFGS: backtracking Armijo line search on projected trial points;
// per-layer projection after every accepted step; (s,y) update skipped when
// s.y <= 1e-10 |s||y|; every accepted iterate is logged.
FitResult bfgs_reparam(const LossProblem& p, const BfgsOptions& opt, const FeasibleSpec& spec);

struct GDConfig {
  int M = 6;
  double eta = 1.0;
  int max_iter = 200;
  double grad_tol = 1e-8;
  double min_eta = 1e-12;
  bool refit_last = false;  // update the innermost layer instead of composing
  double epsilon = 1e-2;
};

// Composes one elementary step id - eta sum_j lambda_j f_j per iteration
// (innermost position); lambda is the gradient of a one-extra-zero-layer
// loss; eta backtracks until the projected layer decreases the loss.
// Throws StagnatedStep when no feasible decreasing eta >= min_eta exists at
// the first iteration; later stagnation stops the run normally.
FitResult gd_reparam(const QMap& q1, const QMap& q2, const GDConfig& cfg);

struct SweepCell {
  int L;
  int M;
  double final_loss;
  int iters;
  double seconds;
  bool failed = false;
  std::string error;
};

// One bfgs_reparam per (L, M) cell with identical settings; L = 0 means the
// identity net (loss E0). Cell failures are recorded and the sweep continues.
std::vector<SweepCell> run_sweep(const QMap& q1, const QMap& q2,
                                 const std::vector<int>& Ls, const std::vector<int>& Ms,
                                 const BfgsOptions& opt, double epsilon = 1e-2);

std::string convergence_csv(const std::vector<LogRow>& log);
std::string sweep_csv(const std::vector<SweepCell>& cells);

// Deterministic pairwise tree reduction (also more accurate than naive sums).
double pairwise_sum(const double* v, std::ptrdiff_t n);

}  // namespace shapereg
