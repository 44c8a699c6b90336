#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shapereg/diffeo.hpp"

namespace shapereg {

// Exact values M_0..M_kmax of the composition-bound constants (Schroeder's
// fourth problem): M_0 = M_1 = 1, M_k = sum over set partitions of k elements
// into >= 2 blocks of the product of M_{|block|}.
struct SchroederTable {
  std::vector<uint64_t> M;  // index by k
};
SchroederTable schroeder(int kmax);

// Integer partition of m with count = number of set partitions of that type:
// m! / (prod_s (s!)^{mult_s} mult_s!). Shared by schroeder and the
// higher-order chain rule.
struct PartitionType {
  std::vector<int> mult;  // mult[s] = blocks of size s, index 0 unused
  int blocks = 0;
  uint64_t count = 0;
};
const std::vector<PartitionType>& partition_types(int m);  // m <= 12, cached

struct CkNormSpec {
  int k = 1;
  int N_grid = 10001;  // >= 1001
};

// Derivatives 0..k of the composed network at x: value and per-order entries.
// Layer derivatives are closed-form; composition uses the 1D higher-order
// chain rule with the partition multinomials above. No feasibility check.
void net_derivatives(const DiffeoNet& net, double x, int k, double* value, double* ders);

// C^k norm (max over orders 0..k of grid sup norms) of a single layer's
// residual field f = sum w_n f_n.
double ck_norm_field(const Eigen::VectorXd& w, int k, int N_grid);
// C^k norm of composition - id over the grid {i/(N_grid-1)}.
double ck_norm_net(const DiffeoNet& net, int k, int N_grid);

struct ScaleResult {
  double alpha;     // min{1, 1/sum}
  double sum_norm;  // sum of layer norms after scaling
};
// Multiplies every weight by alpha so that sum_l ||f_l||_{C^k} <= 1 (+1e-9).
ScaleResult scale_to_hypothesis(DiffeoNet& net, int k, int N_grid);

struct BoundRow {
  int k, L, M;
  std::string strategy;  // "ones" or "normal"
  uint64_t seed;         // substream index for normal runs
  double sum_norm;       // after scaling
  double comp_norm;
  double ratio;          // comp / (sum * exp(k * sum)); 0 when sum == 0
};

struct BoundExperimentOptions {
  int runs = 500;     // normal-init runs per cell (plus one all-ones run)
  uint64_t seed = 0;
  int N_grid = 2001;
};

std::vector<BoundRow> bound_ratio_experiment(const std::vector<int>& ks,
                                             const std::vector<int>& Ls,
                                             const std::vector<int>& Ms,
                                             const BoundExperimentOptions& opt);

// ||comp - id||_inf <= sum_j ||f_j||_inf, no smallness hypothesis.
struct SupBoundCheck {
  double lhs, rhs;
  bool ok;
};
SupBoundCheck sup_sum_check(const DiffeoNet& net, int N_grid, double rel_tol = 1e-4);

// Lip(comp - id) <= prod(1 + Lip f_j) - 1 <= e^{sum Lip} - 1 <= e^{sum} * sum,
// with Lip(comp - id) estimated by the max difference quotient over adjacent
// grid nodes and Lip f_j by the closed-form grid sup of |f_j'|.
struct LipschitzCheck {
  double lip_comp, chain_prod, chain_exp, chain_linear;
  bool ok;
};
LipschitzCheck lipschitz_product_check(const DiffeoNet& net, int N_grid, double rel_tol = 1e-4);

std::string bound_report_csv(const std::vector<BoundRow>& rows);
// {"per_cell": [{k, L, M, max_ratio}...], "per_k": [{k, max_ratio, Mk}...]}
std::string bound_summary_json(const std::vector<BoundRow>& rows);

}  // namespace shapereg
