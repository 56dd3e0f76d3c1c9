#include "qdim/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qdim {

namespace {

constexpr double kGoldenTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double golden_section(double lo, double hi, const auto& f) {
  // Minimum of a convex function to bracket width kGoldenTol.
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > kGoldenTol * std::max(1.0, std::fabs(a) + std::fabs(b))) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

// Prefix-sum machinery for block costs over sorted atoms. Closed forms for
// r = 2 (weighted mean) and r = 1 (weighted median, lower median on even
// mass); golden section on the convex block cost otherwise.
class BlockCost {
 public:
  BlockCost(std::span<const double> x, std::span<const double> w, double r)
      : x_(x), w_(w), r_(r) {
    std::size_t m = x.size();
    cw_.assign(m + 1, 0.0);
    cwx_.assign(m + 1, 0.0);
    cwx2_.assign(m + 1, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      cw_[k + 1] = cw_[k] + w[k];
      cwx_[k + 1] = cwx_[k] + w[k] * x[k];
      cwx2_[k + 1] = cwx2_[k] + w[k] * x[k] * x[k];
    }
  }

  double raw_cost(std::size_t i, std::size_t j, double c) const {
    double acc = 0.0;
    for (std::size_t k = i; k <= j; ++k)
      acc += w_[k] * std::pow(std::fabs(x_[k] - c), r_);
    return acc;
  }

  double center(std::size_t i, std::size_t j) const {
    if (i == j) return x_[i];
    if (r_ == 2.0) {
      double W = cw_[j + 1] - cw_[i];
      return (cwx_[j + 1] - cwx_[i]) / W;
    }
    if (r_ == 1.0) return x_[median_index(i, j)];
    if (r_ > 1.0)
      return golden_section(x_[i], x_[j],
                            [&](double c) { return raw_cost(i, j, c); });
    // r < 1: concave per-atom cost, minimum sits on an atom.
    double best = kInf, arg = x_[i];
    for (std::size_t k = i; k <= j; ++k) {
      double v = raw_cost(i, j, x_[k]);
      if (v < best) {
        best = v;
        arg = x_[k];
      }
    }
    return arg;
  }

  double cost(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    if (r_ == 2.0) {
      double W = cw_[j + 1] - cw_[i];
      double S = cwx_[j + 1] - cwx_[i];
      double Q = cwx2_[j + 1] - cwx2_[i];
      return std::max(0.0, Q - S * S / W);
    }
    if (r_ == 1.0) {
      std::size_t mi = median_index(i, j);
      double med = x_[mi];
      double left = med * (cw_[mi + 1] - cw_[i]) - (cwx_[mi + 1] - cwx_[i]);
      double right = (cwx_[j + 1] - cwx_[mi + 1]) - med * (cw_[j + 1] - cw_[mi + 1]);
      return left + right;
    }
    return raw_cost(i, j, center(i, j));
  }

 private:
  std::size_t median_index(std::size_t i, std::size_t j) const {
    double target = cw_[i] + 0.5 * (cw_[j + 1] - cw_[i]);
    auto it = std::lower_bound(cw_.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                               cw_.begin() + static_cast<std::ptrdiff_t>(j) + 2, target);
    std::size_t k = static_cast<std::size_t>(it - cw_.begin()) - 1;
    return std::min(std::max(k, i), j);
  }

  std::span<const double> x_;
  std::span<const double> w_;
  double r_;
  std::vector<double> cw_, cwx_, cwx2_;
};

// Divide-and-conquer row fill: opt split index is monotone in the block
// end for convex per-block costs (concave-Monge cost matrix).
void fill_row(const BlockCost& cost, std::span<const double> prev,
              std::span<double> cur, std::span<std::uint32_t> arg,
              std::size_t jlo, std::size_t jhi, std::size_t ilo, std::size_t ihi) {
  if (jlo > jhi) return;
  std::size_t j = jlo + (jhi - jlo) / 2;
  double best = kInf;
  std::size_t besti = ilo;
  std::size_t top = std::min(ihi, j);
  for (std::size_t i = ilo; i <= top; ++i) {
    double base = (i == 0) ? kInf : prev[i - 1];
    if (base == kInf) continue;
    double v = base + cost.cost(i, j);
    if (v < best) {
      best = v;
      besti = i;
    }
  }
  cur[j] = best;
  arg[j] = static_cast<std::uint32_t>(besti);
  if (j > jlo) fill_row(cost, prev, cur, arg, jlo, j - 1, ilo, besti);
  if (j < jhi) fill_row(cost, prev, cur, arg, j + 1, jhi, besti, ihi);
}

struct DpTable {
  std::vector<double> final_errors;              // V_{k,r}, k = 1..kmax
  std::vector<std::vector<std::uint32_t>> args;  // split starts per row
};

DpTable run_dp(const AtomicMeasure& mu, std::size_t kmax, double r,
               bool keep_args) {
  const auto x = mu.atoms();
  const auto w = mu.weights();
  const std::size_t m = x.size();
  kmax = std::min(kmax, m);
  BlockCost cost(x, w, r);

  DpTable table;
  std::vector<double> prev(m), cur(m);
  std::vector<std::uint32_t> arg(m);
  for (std::size_t j = 0; j < m; ++j) prev[j] = cost.cost(0, j);
  table.final_errors.push_back(prev[m - 1]);
  if (keep_args) table.args.push_back(std::vector<std::uint32_t>(m, 0));

  for (std::size_t k = 2; k <= kmax; ++k) {
    std::fill(cur.begin(), cur.end(), kInf);
    // Blocks are nonempty: row k covers ends j >= k-1.
    fill_row(cost, prev, cur, arg, k - 1, m - 1, 1, m - 1);
    for (std::size_t j = 0; j + 1 < k; ++j) cur[j] = prev[j];  // fewer atoms than blocks
    table.final_errors.push_back(cur[m - 1]);
    if (keep_args) table.args.emplace_back(arg.begin(), arg.end());
    std::swap(prev, cur);
  }
  return table;
}

Codebook backtrack_codebook(const AtomicMeasure& mu, const DpTable& table,
                            std::size_t k, double r) {
  const auto x = mu.atoms();
  const auto w = mu.weights();
  BlockCost cost(x, w, r);
  std::vector<double> points;
  std::size_t j = mu.size() - 1;
  std::size_t row = std::min(k, mu.size());
  while (row >= 1) {
    std::size_t i = (row == 1) ? 0 : table.args[row - 1][j];
    points.push_back(cost.center(i, j));
    if (row == 1) break;
    j = i - 1;
    --row;
  }
  std::reverse(points.begin(), points.end());
  return Codebook::of(std::move(points));
}

double cap_to_complement(double x, std::span<const Interval> sosc) {
  // Distance to G^c: zero outside every open interval of G, else distance
  // to the nearest endpoint of the covering interval.
  for (const auto& iv : sosc)
    if (iv.contains_open(x)) return std::min(x - iv.lo, iv.hi - x);
  return 0.0;
}

}  // namespace

Codebook Codebook::of(std::vector<double> points) {
  if (points.empty()) throw ValidationError("codebook: empty");
  for (double p : points)
    if (!std::isfinite(p)) throw ValidationError("codebook: non-finite point");
  std::sort(points.begin(), points.end());
  return Codebook{std::move(points)};
}

const char* to_string(QuantMethod m) {
  return m == QuantMethod::dp_exact ? "dp_exact" : "lloyd";
}

double QuantizationResult::e() const { return std::pow(error, 1.0 / r); }

double quant_error(const AtomicMeasure& mu, const Codebook& codebook, double r) {
  if (!(r > 0.0)) throw ValidationError("quant_error: r must be positive");
  const auto& a = codebook.points;
  double acc = 0.0;
  std::size_t k = 0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    double x = mu.atoms()[j];
    while (k + 1 < a.size() && std::fabs(a[k + 1] - x) < std::fabs(a[k] - x)) ++k;
    acc += mu.weights()[j] * std::pow(std::fabs(x - a[k]), r);
  }
  return acc;
}

QuantizationResult optimal_quantizer_dp(const AtomicMeasure& mu, std::size_t n,
                                        double r) {
  if (n < 1) throw ValidationError("optimal_quantizer_dp: n must be >= 1");
  if (r < 1.0)
    throw ValidationError(
        "optimal_quantizer_dp: r < 1 unsupported (cell contiguity not "
        "guaranteed); use lloyd for an upper bound");
  DpTable table = run_dp(mu, n, r, /*keep_args=*/true);
  std::size_t rows = table.final_errors.size();
  QuantizationResult result;
  result.n = n;
  result.r = r;
  result.method = QuantMethod::dp_exact;
  result.error = table.final_errors[rows - 1];
  result.codebook = backtrack_codebook(mu, table, rows, r);
  return result;
}

std::vector<double> quantization_error_sweep(const AtomicMeasure& mu,
                                             std::size_t n_max, double r) {
  if (n_max < 1) throw ValidationError("quantization_error_sweep: n_max must be >= 1");
  if (r < 1.0) throw ValidationError("quantization_error_sweep: r < 1 unsupported");
  DpTable table = run_dp(mu, n_max, r, /*keep_args=*/false);
  auto v = table.final_errors;
  // n beyond the atom count keeps V = 0.
  while (v.size() < n_max) v.push_back(0.0);
  return v;
}

QuantizationResult lloyd(const AtomicMeasure& mu, std::size_t n, double r,
                         std::size_t restarts, std::uint64_t seed) {
  if (n < 1) throw ValidationError("lloyd: n must be >= 1");
  if (!(r > 0.0)) throw ValidationError("lloyd: r must be positive");
  if (restarts < 1) restarts = 1;
  const auto x = mu.atoms();
  const auto w = mu.weights();
  const std::size_t m = x.size();
  BlockCost cost(x, w, r);

  QuantizationResult best;
  best.error = kInf;
  for (std::size_t restart = 0; restart < restarts; ++restart) {
    Rng rng(derive_seed(seed ^ (restart * 0x51ed2701ULL), SeedStream::lloyd));
    // Distinct initial codepoints drawn from the atoms.
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::size_t picks = std::min(n, m);
    for (std::size_t i = 0; i < picks; ++i) {
      std::size_t j = i + rng.index(m - i);
      std::swap(idx[i], idx[j]);
    }
    std::vector<double> code(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(picks));
    for (auto& c : code) c = x[static_cast<std::size_t>(c)];
    std::sort(code.begin(), code.end());

    double err = kInf;
    std::size_t iter = 0;
    for (; iter < 500; ++iter) {
      // Assignment: nearest codepoint, ties to the left one. Cells of a
      // sorted codebook are contiguous.
      std::vector<std::size_t> cell_start(code.size() + 1, m);
      cell_start[0] = 0;
      std::size_t k = 0;
      for (std::size_t j = 0; j < m; ++j) {
        while (k + 1 < code.size() &&
               std::fabs(code[k + 1] - x[j]) < std::fabs(code[k] - x[j])) {
          ++k;
          cell_start[k] = j;
        }
      }
      for (std::size_t c = k + 1; c < code.size(); ++c) cell_start[c] = m;
      cell_start[code.size()] = m;

      double new_err = 0.0;
      std::vector<double> new_code;
      new_code.reserve(code.size());
      std::size_t worst_atom = 0;
      double worst_contrib = -1.0;
      for (std::size_t c = 0; c < code.size(); ++c) {
        std::size_t i0 = cell_start[c], i1 = cell_start[c + 1];
        if (i0 >= i1) continue;  // empty cell dropped; reseeded below
        double ctr = cost.center(i0, i1 - 1);
        new_code.push_back(ctr);
        for (std::size_t j = i0; j < i1; ++j) {
          double contrib = w[j] * std::pow(std::fabs(x[j] - ctr), r);
          new_err += contrib;
          if (contrib > worst_contrib) {
            worst_contrib = contrib;
            worst_atom = j;
          }
        }
      }
      while (new_code.size() < std::min(n, m)) {
        new_code.push_back(x[worst_atom]);  // deterministic empty-cell reseed
        std::sort(new_code.begin(), new_code.end());
        worst_atom = (worst_atom + m / 2) % m;
      }
      std::sort(new_code.begin(), new_code.end());
      bool converged = err < kInf && std::fabs(err - new_err) <= 1e-10 * std::max(err, 1e-300);
      code = std::move(new_code);
      err = new_err;
      if (converged) break;
    }
    if (err < best.error) {
      best.error = err;
      best.codebook = Codebook::of(std::move(code));
      best.iterations = iter + 1;
    }
  }
  best.n = n;
  best.r = r;
  best.method = QuantMethod::lloyd;
  best.restarts = restarts;
  return best;
}

double constrained_error_u(const AtomicMeasure& mu, const Codebook& codebook,
                           std::span<const Interval> sosc, double r) {
  if (!(r > 0.0)) throw ValidationError("constrained_error_u: r must be positive");
  double acc = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    double x = mu.atoms()[j];
    double d = cap_to_complement(x, sosc);
    for (double a : codebook.points) d = std::min(d, std::fabs(x - a));
    acc += mu.weights()[j] * std::pow(d, r);
  }
  return acc;
}

std::vector<ConstrainedQuantization> constrained_quantizer_sweep(
    const AtomicMeasure& mu, std::size_t n_max, std::span<const Interval> sosc,
    double r) {
  if (!(r >= 1.0)) throw ValidationError("constrained_quantizer_u: needs r >= 1");
  const auto x = mu.atoms();
  const auto w = mu.weights();
  const std::size_t m = x.size();
  if (m > 1024)
    throw ResourceError("constrained_quantizer_u: quadratic cost tables need <= 1024 atoms");

  std::vector<double> cap(m), cap_cost_prefix(m + 1, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    cap[j] = cap_to_complement(x[j], sosc);
    cap_cost_prefix[j + 1] = cap_cost_prefix[j] + w[j] * std::pow(cap[j], r);
  }
  auto ceded = [&](std::size_t i, std::size_t j) {
    return cap_cost_prefix[j + 1] - cap_cost_prefix[i];
  };

  auto capped_cost = [&](std::size_t i, std::size_t j, double c) {
    double acc = 0.0;
    for (std::size_t k = i; k <= j; ++k)
      acc += w[k] * std::pow(std::min(std::fabs(x[k] - c), cap[k]), r);
    return acc;
  };

  // Served-block cost: piecewise convex in the center between breakpoints
  // at the atoms and at the cap kinks x_k +/- g_k; scan candidates, then
  // refine the best bracket by golden section.
  std::vector<std::vector<double>> served(m), served_center(m);
  std::vector<double> bps;
  for (std::size_t i = 0; i < m; ++i) {
    served[i].assign(m - i, 0.0);
    served_center[i].assign(m - i, 0.0);
    for (std::size_t j = i; j < m; ++j) {
      bps.clear();
      for (std::size_t k = i; k <= j; ++k) {
        bps.push_back(x[k]);
        if (cap[k] > 0.0) {
          if (x[k] - cap[k] > x[i]) bps.push_back(x[k] - cap[k]);
          if (x[k] + cap[k] < x[j]) bps.push_back(x[k] + cap[k]);
        }
      }
      std::sort(bps.begin(), bps.end());
      double best = kInf, arg = x[i];
      for (double c : bps) {
        double v = capped_cost(i, j, c);
        if (v < best) {
          best = v;
          arg = c;
        }
      }
      auto it = std::lower_bound(bps.begin(), bps.end(), arg);
      double lo = (it == bps.begin()) ? arg : *(it - 1);
      double hi = (it + 1 == bps.end()) ? arg : *(it + 1);
      if (hi > lo) {
        double c = golden_section(lo, hi, [&](double t) { return capped_cost(i, j, t); });
        double v = capped_cost(i, j, c);
        if (v < best) {
          best = v;
          arg = c;
        }
      }
      served[i][j - i] = best;
      served_center[i][j - i] = arg;
    }
  }

  // u[k][j]: best cost of atoms 0..j with exactly k served segments (the
  // minimum over <= n follows since an extra codepoint never hurts below
  // the atom count); segments are either ceded (no codepoint) or served
  // (one codepoint).
  const std::size_t kmax = std::min(n_max, m);
  std::vector<std::vector<double>> u(kmax + 1, std::vector<double>(m, kInf));
  std::vector<std::vector<std::uint32_t>> from(kmax + 1, std::vector<std::uint32_t>(m, 0));
  std::vector<std::vector<std::uint8_t>> kind(kmax + 1, std::vector<std::uint8_t>(m, 0));
  for (std::size_t k = 0; k <= kmax; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i <= j; ++i) {
        double base = (i == 0) ? 0.0 : u[k][i - 1];
        if (base < kInf) {
          double v = base + ceded(i, j);
          if (v < u[k][j]) {
            u[k][j] = v;
            from[k][j] = static_cast<std::uint32_t>(i);
            kind[k][j] = 0;
          }
        }
        if (k > 0) {
          double base2 = (i == 0) ? 0.0 : u[k - 1][i - 1];
          if (base2 < kInf) {
            double v = base2 + served[i][j - i];
            if (v < u[k][j]) {
              u[k][j] = v;
              from[k][j] = static_cast<std::uint32_t>(i);
              kind[k][j] = 1;
            }
          }
        }
      }
    }
  }

  std::vector<ConstrainedQuantization> out(n_max + 1);
  for (std::size_t target = 0; target <= n_max; ++target) {
    std::size_t rows = std::min(target, kmax);
    out[target].error = u[rows][m - 1];
    std::vector<double> points;
    std::size_t k = rows;
    std::size_t j = m - 1;
    while (true) {
      std::size_t i = from[k][j];
      if (kind[k][j] == 1) {
        points.push_back(served_center[i][j - i]);
        --k;
      }
      if (i == 0) break;
      j = i - 1;
    }
    if (!points.empty()) {
      std::sort(points.begin(), points.end());
      out[target].codebook = Codebook{std::move(points)};
    }
  }
  return out;
}

ConstrainedQuantization constrained_quantizer_u(const AtomicMeasure& mu,
                                                std::size_t n,
                                                std::span<const Interval> sosc,
                                                double r) {
  return constrained_quantizer_sweep(mu, n, sosc, r).back();
}

UpperRecursionReport recursion_check_upper(
    const IfsModel& model, const AtomicMeasure& mu, std::span<const Word> antichain,
    std::size_t n, double r, std::span<const std::vector<std::size_t>> allocations,
    double c2) {
  UpperRecursionReport report;
  report.c2 = c2;
  report.lhs = optimal_quantizer_dp(mu, n, r).error;
  report.rhs_best = kInf;

  std::vector<double> pw(antichain.size()), tw(antichain.size());
  for (std::size_t i = 0; i < antichain.size(); ++i) {
    pw[i] = word_weight(model, antichain[i]);
    tw[i] = word_bounds(model, antichain[i]).t;
  }

  for (const auto& alloc : allocations) {
    if (alloc.size() != antichain.size())
      throw ValidationError("recursion_check_upper: allocation size mismatch");
    std::size_t total = std::accumulate(alloc.begin(), alloc.end(), std::size_t{0});
    if (total > n)
      throw ValidationError("recursion_check_upper: allocation exceeds n");
    double rhs = 0.0;
    for (std::size_t i = 0; i < alloc.size(); ++i) {
      if (alloc[i] < 1)
        throw ValidationError("recursion_check_upper: n_w must be >= 1");
      rhs += pw[i] * std::pow(tw[i], r) *
             optimal_quantizer_dp(mu, alloc[i], r).error;
    }
    rhs *= std::pow(c2, r);
    report.rhs_per_allocation.push_back(rhs);
    report.rhs_best = std::min(report.rhs_best, rhs);
  }
  report.slack = report.rhs_best - report.lhs;
  report.holds = report.lhs <= report.rhs_best;
  return report;
}

std::vector<std::size_t> balanced_allocation(std::size_t n, std::size_t cells) {
  if (cells == 0 || n < cells)
    throw ValidationError("balanced_allocation: need n >= cells >= 1");
  std::vector<std::size_t> alloc(cells, n / cells);
  for (std::size_t i = 0; i < n % cells; ++i) ++alloc[i];
  return alloc;
}

std::vector<std::size_t> proportional_allocation(std::span<const double> weights,
                                                 std::size_t n) {
  const std::size_t cells = weights.size();
  if (cells == 0 || n < cells)
    throw ValidationError("proportional_allocation: need n >= cells >= 1");
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> alloc(cells, 1);
  std::size_t left = n - cells;
  std::vector<std::pair<double, std::size_t>> remainders;
  for (std::size_t i = 0; i < cells; ++i) {
    double share = static_cast<double>(left) * weights[i] / total;
    std::size_t whole = static_cast<std::size_t>(share);
    alloc[i] += whole;
    remainders.emplace_back(share - static_cast<double>(whole), i);
  }
  std::size_t assigned = std::accumulate(alloc.begin(), alloc.end(), std::size_t{0});
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (std::size_t k = 0; assigned < n && k < remainders.size(); ++k, ++assigned)
    ++alloc[remainders[k].second];
  return alloc;
}

}  // namespace qdim
