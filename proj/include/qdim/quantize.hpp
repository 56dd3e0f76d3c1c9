#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qdim/ifs.hpp"
#include "qdim/measure.hpp"

namespace qdim {

struct Codebook {
  std::vector<double> points;  // sorted

  static Codebook of(std::vector<double> points);
  std::size_t size() const { return points.size(); }
};

enum class QuantMethod { dp_exact, lloyd };

const char* to_string(QuantMethod m);

struct QuantizationResult {
  std::size_t n = 0;
  double r = 2.0;
  double error = 0.0;  // V_{n,r}
  Codebook codebook;
  QuantMethod method = QuantMethod::dp_exact;
  std::size_t iterations = 0;
  std::size_t restarts = 0;

  double e() const;  // e_{n,r} = error^{1/r}
};

// int d(x,A)^r dmu = sum_j w_j min_a |x_j - a|^r. Ties between codepoints
// go to the left one.
double quant_error(const AtomicMeasure& mu, const Codebook& codebook, double r);

// Globally optimal n-point quantizer of a 1-D atomic measure for r >= 1.
// Optimal cells under a convex cost are contiguous runs of atoms, so a
// dynamic program over block boundaries is exact.
QuantizationResult optimal_quantizer_dp(const AtomicMeasure& mu, std::size_t n,
                                        double r);

// V_{k,r} for every k = 1..n_max from a single DP table.
std::vector<double> quantization_error_sweep(const AtomicMeasure& mu,
                                             std::size_t n_max, double r);

// Heuristic upper bound on V_{n,r}; the only route offered for r < 1,
// where block contiguity is not guaranteed.
QuantizationResult lloyd(const AtomicMeasure& mu, std::size_t n, double r,
                         std::size_t restarts, std::uint64_t seed);

// u-cost of a fixed codebook: sum_j w_j min(d(x_j,A), d(x_j,G^c))^r where G
// is a finite union of open intervals. Empty G makes every cap zero (the
// degenerate case: u vanishes identically).
double constrained_error_u(const AtomicMeasure& mu, const Codebook& codebook,
                           std::span<const Interval> sosc, double r);

struct ConstrainedQuantization {
  double error = 0.0;  // u_{n,r}
  Codebook codebook;   // may hold fewer than n points (n = 0 allowed)
};

// Exact u_{n,r} by a two-segment-kind dynamic program: runs of atoms are
// either served by one codepoint or ceded to G^c at their cap cost.
ConstrainedQuantization constrained_quantizer_u(const AtomicMeasure& mu,
                                                std::size_t n,
                                                std::span<const Interval> sosc,
                                                double r);

// u_{k,r} with optimal codebooks for every k = 0..n_max from one DP table.
std::vector<ConstrainedQuantization> constrained_quantizer_sweep(
    const AtomicMeasure& mu, std::size_t n_max, std::span<const Interval> sosc,
    double r);

struct UpperRecursionReport {
  double lhs = 0.0;  // V_{n,r}(mu)
  double c2 = 1.0;
  std::vector<double> rhs_per_allocation;  // C2^r sum p_w T_w^r V_{n_w,r}
  double rhs_best = 0.0;
  double slack = 0.0;  // rhs_best - lhs
  bool holds = false;
};

// Checks V_{n,r} <= C2^r inf over the supplied allocations {n_w}.
UpperRecursionReport recursion_check_upper(
    const IfsModel& model, const AtomicMeasure& mu, std::span<const Word> antichain,
    std::size_t n, double r, std::span<const std::vector<std::size_t>> allocations,
    double c2);

// Allocation helpers for the recursion checks: near-equal split, and
// largest-remainder split proportional to the word weights (each cell >= 1).
std::vector<std::size_t> balanced_allocation(std::size_t n, std::size_t cells);
std::vector<std::size_t> proportional_allocation(std::span<const double> weights,
                                                 std::size_t n);

}  // namespace qdim
