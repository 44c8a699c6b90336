#include "shapereg/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "shapereg/io.hpp"
#include "shapereg/rng.hpp"

#include "json.hpp"

namespace shapereg {

namespace {

constexpr int kMaxOrder = 12;

uint64_t factorial(int n) {
  uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<uint64_t>(i);
  return f;
}

std::vector<std::vector<PartitionType>> build_partition_cache() {
  std::vector<std::vector<PartitionType>> cache(kMaxOrder + 1);
  for (int m = 1; m <= kMaxOrder; ++m) {
    std::vector<int> parts;
    auto emit = [&]() {
      PartitionType t;
      t.mult.assign(m + 1, 0);
      for (int s : parts) ++t.mult[s];
      t.blocks = static_cast<int>(parts.size());
      uint64_t denom = 1;
      for (int s = 1; s <= m; ++s) {
        if (t.mult[s] == 0) continue;
        for (int r = 0; r < t.mult[s]; ++r) denom *= factorial(s);
        denom *= factorial(t.mult[s]);
      }
      t.count = factorial(m) / denom;
      cache[m].push_back(std::move(t));
    };
    auto rec = [&](auto&& self, int remaining, int max_part) -> void {
      if (remaining == 0) {
        emit();
        return;
      }
      for (int s = std::min(remaining, max_part); s >= 1; --s) {
        parts.push_back(s);
        self(self, remaining - s, s);
        parts.pop_back();
      }
    };
    rec(rec, m, m);
  }
  return cache;
}

// Derivatives 1..k of one layer's map u -> u + sum w_n sin((n+1) pi u)/((n+1) pi)
// evaluated at u; P[0] is the value. The (j>=1)-th derivative of each basis
// term is ((n+1) pi)^(j-1) times sin, cos, -sin, -cos cyclically.
void layer_ders(const Eigen::VectorXd& w, double u, int k, double* P, Basis1DWork& wk) {
  const int M = static_cast<int>(w.size());
  trig_tables_1d(M, u, wk);
  double disp = 0.0;
  for (int n = 0; n < M; ++n) disp += w[n] * wk.s[n] / ((n + 1) * M_PI);
  P[0] = u + disp;
  for (int j = 1; j <= k; ++j) {
    double acc = (j == 1) ? 1.0 : 0.0;
    for (int n = 0; n < M; ++n) {
      const double freq = (n + 1) * M_PI;
      double scale = 1.0;
      for (int r = 1; r < j; ++r) scale *= freq;
      const double trig = (j % 4 == 0)   ? wk.s[n]
                          : (j % 4 == 1) ? wk.c[n]
                          : (j % 4 == 2) ? -wk.s[n]
                                         : -wk.c[n];
      acc += w[n] * scale * trig;
    }
    P[j] = acc;
  }
}

// Derivatives 0..k of the full composition at x via the higher-order chain
// rule: (phi o g)^(m) = sum over partition types count * phi^(blocks)(g) *
// prod_s (g^(s))^(mult_s).
void comp_ders_point(const DiffeoNet& net, double x, int k, double* G, Basis1DWork& wk) {
  G[0] = x;
  if (k >= 1) G[1] = 1.0;
  for (int j = 2; j <= k; ++j) G[j] = 0.0;
  double P[kMaxOrder + 1];
  double H[kMaxOrder + 1];
  for (const auto& layer : net.layers) {
    layer_ders(layer.w, G[0], k, P, wk);
    H[0] = P[0];
    for (int m = 1; m <= k; ++m) {
      double acc = 0.0;
      for (const auto& t : partition_types(m)) {
        double term = static_cast<double>(t.count) * P[t.blocks];
        for (int s = 1; s <= m; ++s)
          for (int r = 0; r < t.mult[s]; ++r) term *= G[s];
        acc += term;
      }
      H[m] = acc;
    }
    for (int j = 0; j <= k; ++j) G[j] = H[j];
  }
}

// sin((n+1) pi x_i) and cos tables on the uniform grid, one column per mode.
struct TrigGrid {
  Eigen::MatrixXd S, C;
};

TrigGrid make_trig_grid(int N_grid, int Mmax) {
  TrigGrid tg;
  tg.S.resize(N_grid, Mmax);
  tg.C.resize(N_grid, Mmax);
  const double h = 1.0 / (N_grid - 1);
  for (int i = 0; i < N_grid; ++i) {
    const double s1 = std::sin(M_PI * i * h);
    const double c1 = std::cos(M_PI * i * h);
    double sp = 0.0, cp = 1.0, s = s1, c = c1;
    for (int n = 0; n < Mmax; ++n) {
      tg.S(i, n) = s;
      tg.C(i, n) = c;
      const double sn = 2.0 * c1 * s - sp;
      const double cn = 2.0 * c1 * c - cp;
      sp = s;
      cp = c;
      s = sn;
      c = cn;
    }
  }
  return tg;
}

// Grid sup norm of each derivative order of f = sum w_n f_n; the sign of the
// trig cycle drops out under the absolute value.
double field_norm_grid(const Eigen::VectorXd& w, int k, const TrigGrid& tg) {
  const int M = static_cast<int>(w.size());
  Eigen::VectorXd ws(M);
  double best = 0.0;
  for (int j = 0; j <= k; ++j) {
    for (int n = 0; n < M; ++n) {
      const double freq = (n + 1) * M_PI;
      double scale = 1.0;
      if (j == 0) {
        scale = 1.0 / freq;
      } else {
        for (int r = 1; r < j; ++r) scale *= freq;
      }
      ws[n] = w[n] * scale;
    }
    const auto& table = (j % 2 == 0) ? tg.S : tg.C;
    const double sup = (table.leftCols(M) * ws).cwiseAbs().maxCoeff();
    best = std::max(best, sup);
  }
  return best;
}

double comp_norm_grid(const DiffeoNet& net, int k, int N_grid, Basis1DWork& wk) {
  double G[kMaxOrder + 1];
  const double h = 1.0 / (N_grid - 1);
  double best = 0.0;
  for (int i = 0; i < N_grid; ++i) {
    const double x = i * h;
    comp_ders_point(net, x, k, G, wk);
    double dev = std::abs(G[0] - x);
    if (k >= 1) dev = std::max(dev, std::abs(G[1] - 1.0));
    for (int j = 2; j <= k; ++j) dev = std::max(dev, std::abs(G[j]));
    best = std::max(best, dev);
  }
  return best;
}

void require_order(int k) {
  if (k < 0 || k > kMaxOrder) throw std::out_of_range("derivative order outside 0..12");
}

}  // namespace

const std::vector<PartitionType>& partition_types(int m) {
  if (m < 1 || m > kMaxOrder) throw std::out_of_range("partition order outside 1..12");
  static const std::vector<std::vector<PartitionType>> cache = build_partition_cache();
  return cache[m];
}

SchroederTable schroeder(int kmax) {
  if (kmax < 0 || kmax > kMaxOrder) throw std::out_of_range("schroeder order outside 0..12");
  SchroederTable tab;
  tab.M.assign(kmax + 1, 1);
  for (int k = 2; k <= kmax; ++k) {
    uint64_t acc = 0;
    for (const auto& t : partition_types(k)) {
      if (t.blocks < 2) continue;
      uint64_t term = t.count;
      for (int s = 1; s <= k; ++s)
        for (int r = 0; r < t.mult[s]; ++r) term *= tab.M[s];
      acc += term;
    }
    tab.M[k] = acc;
  }
  return tab;
}

void net_derivatives(const DiffeoNet& net, double x, int k, double* value, double* ders) {
  require_order(k);
  if (net.dim != 1) throw GridMismatch("composition derivatives are for 1D warps");
  Basis1DWork wk;
  wk.resize(net.basis1.M);
  double G[kMaxOrder + 1];
  comp_ders_point(net, x, k, G, wk);
  *value = G[0];
  for (int j = 1; j <= k; ++j) ders[j - 1] = G[j];
}

double ck_norm_field(const Eigen::VectorXd& w, int k, int N_grid) {
  require_order(k);
  const TrigGrid tg = make_trig_grid(N_grid, static_cast<int>(w.size()));
  return field_norm_grid(w, k, tg);
}

double ck_norm_net(const DiffeoNet& net, int k, int N_grid) {
  require_order(k);
  if (net.dim != 1) throw GridMismatch("composition norms are for 1D warps");
  Basis1DWork wk;
  wk.resize(net.basis1.M);
  return comp_norm_grid(net, k, N_grid, wk);
}

ScaleResult scale_to_hypothesis(DiffeoNet& net, int k, int N_grid) {
  require_order(k);
  const TrigGrid tg = make_trig_grid(N_grid, net.basis1.M);
  double sum = 0.0;
  for (const auto& layer : net.layers) sum += field_norm_grid(layer.w, k, tg);
  const double alpha = (sum <= 1.0) ? 1.0 : 1.0 / sum;
  if (alpha < 1.0)
    for (auto& layer : net.layers) layer.w *= alpha;
  return {alpha, alpha * sum};  // layer norms are linear in the weights
}

std::vector<BoundRow> bound_ratio_experiment(const std::vector<int>& ks,
                                             const std::vector<int>& Ls,
                                             const std::vector<int>& Ms,
                                             const BoundExperimentOptions& opt) {
  int Mmax = 1;
  for (int M : Ms) Mmax = std::max(Mmax, M);
  const TrigGrid tg = make_trig_grid(opt.N_grid, Mmax);
  Basis1DWork wk;
  wk.resize(Mmax);
  std::vector<BoundRow> rows;
  for (int k : ks) {
    require_order(k);
    for (int L : Ls) {
      for (int M : Ms) {
        const uint64_t cell_key =
            static_cast<uint64_t>(k) * 10000 + static_cast<uint64_t>(L) * 100 +
            static_cast<uint64_t>(M);
        for (int run = 0; run <= opt.runs; ++run) {
          DiffeoNet net = make_net_1d(L, M, 1e-2);
          if (run == 0) {
            for (auto& layer : net.layers) layer.w.setOnes();
          } else {
            Rng rng(mix_seed(mix_seed(opt.seed, cell_key), static_cast<uint64_t>(run)));
            for (auto& layer : net.layers)
              for (int n = 0; n < M; ++n) layer.w[n] = rng.normal();
          }
          double sum = 0.0;
          for (const auto& layer : net.layers) sum += field_norm_grid(layer.w, k, tg);
          BoundRow row;
          row.k = k;
          row.L = L;
          row.M = M;
          row.strategy = run == 0 ? "ones" : "normal";
          row.seed = static_cast<uint64_t>(run);
          if (sum == 0.0) {
            row.sum_norm = 0.0;
            row.comp_norm = 0.0;
            row.ratio = 0.0;
          } else {
            const double alpha = (sum <= 1.0) ? 1.0 : 1.0 / sum;
            if (alpha < 1.0)
              for (auto& layer : net.layers) layer.w *= alpha;
            row.sum_norm = alpha * sum;
            row.comp_norm = comp_norm_grid(net, k, opt.N_grid, wk);
            row.ratio = row.comp_norm / (row.sum_norm * std::exp(k * row.sum_norm));
          }
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

SupBoundCheck sup_sum_check(const DiffeoNet& net, int N_grid, double rel_tol) {
  SupBoundCheck chk;
  chk.lhs = ck_norm_net(net, 0, N_grid);
  const TrigGrid tg = make_trig_grid(N_grid, net.basis1.M);
  chk.rhs = 0.0;
  for (const auto& layer : net.layers) chk.rhs += field_norm_grid(layer.w, 0, tg);
  chk.ok = chk.lhs <= chk.rhs * (1.0 + rel_tol) + 1e-15;
  return chk;
}

LipschitzCheck lipschitzcheck_impl(const DiffeoNet& net, int N_grid, double rel_tol) {
  LipschitzCheck chk;
  Basis1DWork wk;
  wk.resize(net.basis1.M);
  const double h = 1.0 / (N_grid - 1);
  double prev = 0.0;
  chk.lip_comp = 0.0;
  for (int i = 0; i < N_grid; ++i) {
    double cur = i * h;
    for (const auto& layer : net.layers) cur = layer_eval(layer.w, cur, wk).y;
    const double dev = cur - i * h;
    if (i > 0) chk.lip_comp = std::max(chk.lip_comp, std::abs(dev - prev) / h);
    prev = dev;
  }
  const TrigGrid tg = make_trig_grid(N_grid, net.basis1.M);
  double sum_lip = 0.0;
  double prod = 1.0;
  for (const auto& layer : net.layers) {
    Eigen::VectorXd w1 = layer.w;  // sup |f'| = sup |sum w_n cos((n+1) pi x)|
    const double lip = (tg.C.leftCols(w1.size()) * w1).cwiseAbs().maxCoeff();
    sum_lip += lip;
    prod *= 1.0 + lip;
  }
  chk.chain_prod = prod - 1.0;
  chk.chain_exp = std::exp(sum_lip) - 1.0;
  chk.chain_linear = std::exp(sum_lip) * sum_lip;
  const double slack = 1e-15;
  chk.ok = chk.lip_comp <= chk.chain_prod * (1.0 + rel_tol) + slack &&
           chk.chain_prod <= chk.chain_exp * (1.0 + rel_tol) + slack &&
           chk.chain_exp <= chk.chain_linear * (1.0 + rel_tol) + slack;
  return chk;
}

LipschitzCheck lipschitz_product_check(const DiffeoNet& net, int N_grid, double rel_tol) {
  if (net.dim != 1) throw GridMismatch("the Lipschitz chain check is for 1D warps");
  return lipschitzcheck_impl(net, N_grid, rel_tol);
}

std::string bound_report_csv(const std::vector<BoundRow>& rows) {
  std::string out = "k,L,M,strategy,seed,sum_norm,comp_norm,ratio\n";
  for (const auto& r : rows) {
    out += std::to_string(r.k) + "," + std::to_string(r.L) + "," + std::to_string(r.M) + "," +
           r.strategy + "," + std::to_string(r.seed) + "," + fmt_double(r.sum_norm) + "," +
           fmt_double(r.comp_norm) + "," + fmt_double(r.ratio) + "\n";
  }
  return out;
}

std::string bound_summary_json(const std::vector<BoundRow>& rows) {
  nlohmann::json per_cell = nlohmann::json::array();
  std::map<std::tuple<int, int, int>, size_t> cell_index;
  int kmax = 1;
  for (const auto& r : rows) {
    kmax = std::max(kmax, r.k);
    const auto key = std::make_tuple(r.k, r.L, r.M);
    auto it = cell_index.find(key);
    if (it == cell_index.end()) {
      cell_index.emplace(key, per_cell.size());
      per_cell.push_back({{"k", r.k}, {"L", r.L}, {"M", r.M}, {"max_ratio", r.ratio}});
    } else {
      auto& slot = per_cell[it->second]["max_ratio"];
      slot = std::max(slot.get<double>(), r.ratio);
    }
  }
  const SchroederTable tab = schroeder(kmax);
  std::map<int, double> per_k_max;
  for (const auto& r : rows) {
    auto [it, fresh] = per_k_max.emplace(r.k, r.ratio);
    if (!fresh) it->second = std::max(it->second, r.ratio);
  }
  nlohmann::json per_k = nlohmann::json::array();
  for (const auto& [k, ratio] : per_k_max)
    per_k.push_back({{"k", k}, {"max_ratio", ratio}, {"Mk", tab.M[k]}});
  nlohmann::json out = {{"per_cell", per_cell}, {"per_k", per_k}};
  return out.dump(2) + "\n";
}

}  // namespace shapereg
