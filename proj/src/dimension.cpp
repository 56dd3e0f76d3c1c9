#include "qdim/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qdim {

namespace {

constexpr double kZeroFloor = 1e-15;

void check_n_list(const AtomicMeasure& mu, std::span<const std::size_t> n_list) {
  if (n_list.empty()) throw ValidationError("n_list: empty");
  for (std::size_t i = 0; i + 1 < n_list.size(); ++i)
    if (!(n_list[i] < n_list[i + 1]))
      throw ValidationError("n_list: must be strictly increasing");
  if (n_list.front() < 1) throw ValidationError("n_list: n must be >= 1");
  // Keep the quantization of the approximant faithful to the ideal measure.
  if (2 * n_list.back() > mu.size())
    throw ValidationError("n_list: need 2 n_max <= support size " +
                          std::to_string(mu.size()));
}

}  // namespace

DimensionEstimate empirical_dimension(const AtomicMeasure& mu, double r,
                                      std::span<const std::size_t> n_list) {
  check_n_list(mu, n_list);
  auto sweep = quantization_error_sweep(mu, n_list.back(), r);

  DimensionEstimate est;
  est.r = r;
  std::vector<double> xs, ys;
  for (std::size_t n : n_list) {
    double v = sweep[n - 1];
    est.trace.push_back({n, v, std::pow(v, 1.0 / r)});
    if (v < kZeroFloor) continue;  // log breaks at exact zeros
    xs.push_back(-std::log(v));
    ys.push_back(r * std::log(static_cast<double>(n)));
  }
  est.points_used = xs.size();
  if (xs.size() < 3)
    throw NumericError("empirical_dimension: fewer than 3 usable points (V too small)");

  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw NumericError("empirical_dimension: degenerate abscissae");
  est.slope = sxy / sxx;
  est.intercept = my - est.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double resid = ys[i] - (est.intercept + est.slope * xs[i]);
    rss += resid * resid;
  }
  est.residual = std::sqrt(rss / static_cast<double>(xs.size()));
  return est;
}

CoefficientTrace coefficient_trace(const AtomicMeasure& mu, double r, double s,
                                   std::span<const std::size_t> n_list) {
  check_n_list(mu, n_list);
  auto sweep = quantization_error_sweep(mu, n_list.back(), r);

  CoefficientTrace trace;
  trace.r = r;
  trace.s = s;
  trace.min_value = std::numeric_limits<double>::infinity();
  trace.max_value = 0.0;
  for (std::size_t n : n_list) {
    double v = sweep[n - 1];
    double value = static_cast<double>(n) * std::pow(v, s / r);
    trace.values.emplace_back(n, value);
    if (v >= kZeroFloor) {
      trace.min_value = std::min(trace.min_value, value);
      trace.max_value = std::max(trace.max_value, value);
    }
  }
  return trace;
}

namespace {

struct SigmaOutcome {
  double sigma = 0.0;
  bool ok = true;
  std::string note;
};

SigmaOutcome sigma_for(const IfsModel& model, double r, const ContinuityOptions& opt) {
  SigmaOutcome out;
  auto issues = validate_model(model);
  if (!issues.empty()) {
    bool constant_maps = std::all_of(model.maps.begin(), model.maps.end(),
                                     [](const MapDescriptor& m) {
                                       return m.kind == MapKind::affine && m.a == 0.0;
                                     });
    if (constant_maps) {
      // Point-mass invariant measure; SOSC cannot hold (images coincide).
      out.sigma = 0.0;
      out.ok = false;
      out.note = "SOSC fails: degenerate constant maps, D_r = 0";
      return out;
    }
    out.sigma = std::numeric_limits<double>::quiet_NaN();
    out.ok = false;
    out.note = "invalid model: " + issues.front();
    return out;
  }
  if (model.is_similitude()) {
    auto ratios = model.contraction_ratios();
    out.sigma = closed_form_sigma(model.probs, ratios, r);
  } else {
    out.sigma = solve_sigma_spectral(model, opt.mesh_size, r, opt.tol).sigma;
  }
  if (!model.has_sosc()) out.note = "no SOSC set declared";
  return out;
}

AtomicMeasure measure_for(const IfsModel& model, const ContinuityOptions& opt) {
  auto issues = validate_model(model);
  if (issues.empty())
    return invariant_atoms(model, opt.measure_depth, model.domain.midpoint());
  // Degenerate constant-map family limit: the invariant measure collapses
  // to the common fixed point.
  bool constant_maps = std::all_of(model.maps.begin(), model.maps.end(),
                                   [](const MapDescriptor& m) {
                                     return m.kind == MapKind::affine && m.a == 0.0;
                                   });
  bool same_value = constant_maps && !model.maps.empty();
  for (const auto& m : model.maps)
    same_value = same_value && m.b == model.maps.front().b;
  if (same_value) return AtomicMeasure::dirac(model.maps.front().b);
  throw ValidationError("continuity: limit model has no computable invariant measure");
}

}  // namespace

ContinuityReport continuity_experiment(std::span<const IfsModel> family,
                                       const IfsModel& limit, double r,
                                       const ContinuityOptions& options) {
  if (family.empty()) throw ValidationError("continuity: empty family");
  ContinuityReport report;
  auto limit_sigma = sigma_for(limit, r, options);
  report.limit_sigma = limit_sigma.sigma;
  report.limit_sosc_ok = limit_sigma.ok && limit.has_sosc();
  report.limit_note = limit_sigma.note;
  AtomicMeasure limit_measure = measure_for(limit, options);

  for (std::size_t k = 0; k < family.size(); ++k) {
    ContinuityReport::MemberRow row;
    row.index = k;
    auto outcome = sigma_for(family[k], r, options);
    row.sigma = outcome.sigma;
    row.sosc_ok = outcome.ok && family[k].has_sosc();
    row.note = outcome.note;
    row.sigma_gap = std::fabs(outcome.sigma - report.limit_sigma);
    row.w1_gap = w1_distance(measure_for(family[k], options), limit_measure);
    report.members.push_back(std::move(row));
  }
  return report;
}

AtomicMeasure uniform_grid_measure(std::size_t atoms) {
  if (atoms < 1) throw ValidationError("uniform_grid_measure: need atoms >= 1");
  std::vector<double> xs(atoms), ws(atoms, 1.0 / static_cast<double>(atoms));
  for (std::size_t j = 0; j < atoms; ++j)
    xs[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(atoms);
  return AtomicMeasure::from_samples(std::move(xs), std::move(ws));
}

WeakConvergenceReport weak_convergence_counterexample(std::span<const std::size_t> ns,
                                                      double r,
                                                      std::size_t grid_atoms) {
  WeakConvergenceReport report;
  report.grid_atoms = grid_atoms;
  AtomicMeasure uniform = uniform_grid_measure(grid_atoms);
  for (std::size_t n : ns) {
    if (n < 1) throw ValidationError("weak_convergence: n must be >= 1");
    std::vector<double> xs(n), ws(n, 1.0 / static_cast<double>(n));
    for (std::size_t i = 1; i <= n; ++i)
      xs[i - 1] = static_cast<double>(i) / static_cast<double>(n);
    AtomicMeasure mu_n = AtomicMeasure::from_samples(std::move(xs), std::move(ws));

    WeakConvergenceReport::Row row;
    row.n = n;
    row.v_at_support_size = optimal_quantizer_dp(mu_n, n, r).error;
    row.v_past_support = optimal_quantizer_dp(mu_n, n + 3, r).error;
    row.w1_to_uniform = w1_distance(mu_n, uniform);
    row.expected_w1 = 0.5 / static_cast<double>(n);
    report.rows.push_back(row);
  }
  return report;
}

IfsModel example2_model(int n) {
  if (n < 1) throw ValidationError("example2_model: n must be >= 1");
  double c = 0.5 / static_cast<double>(n);
  return make_model({MapDescriptor::make_affine(c, 0.0),
                     MapDescriptor::make_affine(c, c)},
                    {0.5, 0.5}, {0.0, 1.0}, {{0.0, 1.0}});
}

IfsModel example2_limit_model() {
  IfsModel limit;
  limit.maps = {MapDescriptor::make_affine(0.0, 0.0),
                MapDescriptor::make_affine(0.0, 0.0)};
  limit.probs = {0.5, 0.5};
  limit.domain = {0.0, 1.0};
  limit.sosc = {};
  return limit;
}

}  // namespace qdim
