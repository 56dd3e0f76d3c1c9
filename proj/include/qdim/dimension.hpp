#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdim/measure.hpp"
#include "qdim/quantize.hpp"
#include "qdim/spectral.hpp"

namespace qdim {

struct DimensionEstimate {
  double r = 2.0;
  double slope = 0.0;      // fitted D_r
  double intercept = 0.0;
  double residual = 0.0;   // RMS residual of the fit
  std::size_t points_used = 0;

  struct TraceRow {
    std::size_t n;
    double v;  // V_{n,r}
    double e;  // V^{1/r}
  };
  std::vector<TraceRow> trace;
};

// Least-squares slope of r log n against -log V_{n,r} over DP-exact errors.
// Points with V below 1e-15 are refused (the Example-1 mechanism: V hits
// exact zero once n reaches the support size).
DimensionEstimate empirical_dimension(const AtomicMeasure& mu, double r,
                                      std::span<const std::size_t> n_list);

struct CoefficientTrace {
  double r = 2.0;
  double s = 0.0;
  std::vector<std::pair<std::size_t, double>> values;  // (n, n V^{s/r})
  double min_value = 0.0;
  double max_value = 0.0;

  double ratio() const { return max_value / min_value; }
};

CoefficientTrace coefficient_trace(const AtomicMeasure& mu, double r, double s,
                                   std::span<const std::size_t> n_list);

struct ContinuityReport {
  struct MemberRow {
    std::size_t index = 0;
    double sigma = 0.0;
    double sigma_gap = 0.0;  // |sigma_k - sigma_limit|
    double w1_gap = 0.0;     // d_H(mu_k, mu_limit) as W1
    bool sosc_ok = true;
    std::string note;
  };
  std::vector<MemberRow> members;
  double limit_sigma = 0.0;
  bool limit_sosc_ok = true;
  std::string limit_note;
};

struct ContinuityOptions {
  int measure_depth = 10;
  std::size_t mesh_size = 1025;
  double tol = 1e-10;
};

// Per-member sigma (closed form for similitudes, spectral otherwise) against
// the limit model's, plus W1 gaps between the invariant measures. A limit
// model failing validation (degenerate maps, broken SOSC) is flagged rather
// than rejected: that failure mode is itself an experimental outcome.
ContinuityReport continuity_experiment(std::span<const IfsModel> family,
                                       const IfsModel& limit, double r,
                                       const ContinuityOptions& options = {});

// mu_n = (1/n) sum_{i=1..n} delta_{i/n}: converges weakly to Lebesgue on
// [0,1] while every quantization error V_{m,r}(mu_n) with m >= n is exactly
// zero, so D_r(mu_n) = 0 does not converge to D_r(Lebesgue) = 1.
struct WeakConvergenceReport {
  struct Row {
    std::size_t n = 0;
    double v_at_support_size = 0.0;   // V_{n,r}(mu_n)
    double v_past_support = 0.0;      // V_{n+3,r}(mu_n)
    double w1_to_uniform = 0.0;
    double expected_w1 = 0.0;         // 1/(2n)
  };
  std::vector<Row> rows;
  std::size_t grid_atoms = 0;
};

WeakConvergenceReport weak_convergence_counterexample(std::span<const std::size_t> ns,
                                                      double r,
                                                      std::size_t grid_atoms = 16384);

// Midpoint-grid discretization of Lebesgue measure on [0,1].
AtomicMeasure uniform_grid_measure(std::size_t atoms);

// Shrinking-similitude family of Example 2: maps x/(2n) and x/(2n) + 1/(2n),
// equal weights; closed-form sigma equals ln 2 / (ln 2 + ln n).
IfsModel example2_model(int n);

// The degenerate limit of that family (both maps collapse to 0); fails
// validation by design.
IfsModel example2_limit_model();

}  // namespace qdim
