#include "qdim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace qdim {

Mesh Mesh::over(Interval domain, std::size_t m) {
  if (m < 2) throw ValidationError("mesh: need at least two points");
  if (!(domain.lo < domain.hi)) throw ValidationError("mesh: degenerate interval");
  return Mesh{domain.lo, domain.hi, m};
}

double Mesh::point(std::size_t j) const {
  if (j + 1 == m) return hi;
  return lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(m - 1);
}

double MeshFunction::min_value() const {
  return *std::min_element(values.begin(), values.end());
}

double MeshFunction::max_value() const {
  return *std::max_element(values.begin(), values.end());
}

void OperatorMatrix::apply(std::span<const double> in, std::span<double> out) const {
  for (std::size_t j = 0; j < rows_.size(); ++j) {
    double acc = 0.0;
    for (const auto& [col, val] : rows_[j]) acc += val * in[col];
    out[j] = acc;
  }
}

double OperatorMatrix::entry(std::size_t row, std::size_t col) const {
  double acc = 0.0;
  for (const auto& [c, v] : rows_[row])
    if (c == col) acc += v;
  return acc;
}

double OperatorMatrix::row_sum(std::size_t row) const {
  double acc = 0.0;
  for (const auto& [c, v] : rows_[row]) acc += v;
  return acc;
}

OperatorMatrix OperatorMatrix::from_dense(const std::vector<std::vector<double>>& dense) {
  OperatorMatrix op;
  op.rows_.resize(dense.size());
  for (std::size_t j = 0; j < dense.size(); ++j) {
    if (dense[j].size() != dense.size())
      throw ValidationError("operator: dense matrix must be square");
    for (std::size_t k = 0; k < dense[j].size(); ++k) {
      if (dense[j][k] < 0.0) throw ValidationError("operator: negative entry");
      if (dense[j][k] != 0.0)
        op.rows_[j].emplace_back(static_cast<std::uint32_t>(k), dense[j][k]);
    }
  }
  return op;
}

OperatorMatrix assemble_operator(const IfsModel& model, const Mesh& mesh,
                                 double sigma, double r) {
  if (!(r > 0.0)) throw ValidationError("assemble_operator: r must be positive");
  if (sigma < 0.0) throw ValidationError("assemble_operator: sigma must be >= 0");
  if (mesh.lo > model.domain.lo + 1e-12 || mesh.hi < model.domain.hi - 1e-12)
    throw ValidationError("assemble_operator: mesh does not cover the domain");

  const double s = sigma / (r + sigma);
  const double h = mesh.spacing();
  const int n = model.map_count();
  OperatorMatrix op;
  op.rows_.resize(mesh.m);
  for (std::size_t j = 0; j < mesh.m; ++j) {
    double x = mesh.point(j);
    auto& row = op.rows_[j];
    row.reserve(2 * static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
      double coef = std::pow(model.probs[static_cast<std::size_t>(i - 1)] *
                                 std::pow(eval_df(model.maps[static_cast<std::size_t>(i - 1)], x), r),
                             s);
      double y = eval_map(model.maps[static_cast<std::size_t>(i - 1)], x);
      double t = (y - mesh.lo) / h;
      if (t < -1e-9 || t > static_cast<double>(mesh.m - 1) + 1e-9)
        throw NumericError("assemble_operator: image point escapes the mesh hull");
      t = std::clamp(t, 0.0, static_cast<double>(mesh.m - 1));
      std::size_t k = std::min(static_cast<std::size_t>(t), mesh.m - 2);
      double frac = t - static_cast<double>(k);
      row.emplace_back(static_cast<std::uint32_t>(k), coef * (1.0 - frac));
      if (frac != 0.0)
        row.emplace_back(static_cast<std::uint32_t>(k + 1), coef * frac);
    }
  }
  return op;
}

SpectralRadiusResult spectral_radius(const OperatorMatrix& op, double tol,
                                     std::size_t max_iterations) {
  if (!(tol > 0.0)) throw ValidationError("spectral_radius: tol must be positive");
  const std::size_t m = op.size();
  std::vector<double> v(m, 1.0), w(m, 0.0);
  double lambda_prev = std::numeric_limits<double>::quiet_NaN();
  std::size_t iter = 0;
  for (; iter < max_iterations; ++iter) {
    op.apply(v, w);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      num += v[j] * w[j];
      den += v[j] * v[j];
    }
    double lambda = num / den;
    if (!(lambda > 0.0))
      throw NumericError("spectral_radius: estimate left the positive cone");
    double sup = *std::max_element(w.begin(), w.end());
    for (auto& val : w) val /= sup;
    std::swap(v, w);
    if (iter > 0 && std::fabs(lambda - lambda_prev) < tol) {
      SpectralRadiusResult result;
      result.spr = lambda;
      result.eigenfunction.values = v;
      result.iterations = iter + 1;
      return result;
    }
    lambda_prev = lambda;
  }
  std::ostringstream os;
  os << "spectral_radius: no convergence in " << max_iterations
     << " iterations (last estimate " << lambda_prev << ")";
  throw NumericError(os.str());
}

const char* to_string(SigmaMethod m) {
  switch (m) {
    case SigmaMethod::closed_form: return "closed_form";
    case SigmaMethod::word_sum: return "word_sum";
    default: return "spectral";
  }
}

SigmaSolveResult solve_sigma_spectral(const IfsModel& model, const Mesh& mesh,
                                      double r, std::pair<double, double> bracket,
                                      double tol) {
  if (!(tol > 0.0)) throw ValidationError("solve_sigma_spectral: tol must be positive");
  // Inner eigenvalue tolerance well below the bisection resolution keeps the
  // recorded trace strictly monotone.
  const double inner_tol = std::min(tol * 1e-3, 1e-12);

  SigmaSolveResult result;
  result.method = SigmaMethod::spectral;
  result.tol = tol;
  auto spr_at = [&](double sigma) {
    double value = spectral_radius(assemble_operator(model, mesh, sigma, r), inner_tol).spr;
    result.spr_trace.emplace_back(sigma, value);
    return value;
  };

  double lo = std::max(0.0, bracket.first);
  double hi = bracket.second;
  if (!(hi > lo)) throw ValidationError("solve_sigma_spectral: empty bracket");
  if (spr_at(lo) <= 1.0) {
    lo = 0.0;  // spr(0) = N > 1 always re-establishes the left end
    if (spr_at(lo) <= 1.0)
      throw NumericError("solve_sigma_spectral: spr(0) <= 1 (degenerate model)");
  }
  const double hi_limit = hi * 64.0;
  while (spr_at(hi) >= 1.0) {
    hi *= 2.0;
    if (hi > hi_limit)
      throw NumericError("solve_sigma_spectral: could not bracket spr = 1 below sigma = " +
                         std::to_string(hi_limit));
  }
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (spr_at(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  result.sigma = 0.5 * (lo + hi);
  result.bracket_lo = lo;
  result.bracket_hi = hi;
  result.sigma_upper = result.sigma;
  result.sigma_lower = result.sigma;
  return result;
}

SigmaSolveResult solve_sigma_spectral(const IfsModel& model, std::size_t mesh_size,
                                      double r, double tol) {
  return solve_sigma_spectral(model, Mesh::over(model.domain, mesh_size), r,
                              {0.0, 10.0 * r}, tol);
}

double closed_form_sigma(std::span<const double> probs, std::span<const double> ratios,
                         double r) {
  if (probs.size() != ratios.size() || probs.empty())
    throw ValidationError("closed_form_sigma: probs/ratios mismatch");
  if (!(r > 0.0)) throw ValidationError("closed_form_sigma: r must be positive");
  double psum = 0.0;
  for (double p : probs) {
    if (!(p > 0.0)) throw ValidationError("closed_form_sigma: probabilities must be positive");
    psum += p;
  }
  if (std::fabs(psum - 1.0) > 1e-9)
    throw ValidationError("closed_form_sigma: probabilities must sum to 1");
  bool all_zero = std::all_of(ratios.begin(), ratios.end(),
                              [](double c) { return c == 0.0; });
  if (all_zero) return 0.0;  // point-mass limit
  for (double c : ratios)
    if (!(c > 0.0 && c < 1.0))
      throw ValidationError("closed_form_sigma: ratios must lie in (0,1)");

  // g(s) = sum (p_i c_i^r)^s is strictly decreasing with g(0) = N >= 1 and
  // g(1) < 1; bisect to fixed point of machine resolution in s.
  auto g = [&](double s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
      acc += std::pow(probs[i] * std::pow(ratios[i], r), s);
    return acc;
  };
  if (g(0.0) <= 1.0 + 1e-15) return 0.0;  // single map: dimension 0
  double lo = 0.0, hi = 1.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (g(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  double s = 0.5 * (lo + hi);
  return r * s / (1.0 - s);
}

SigmaSolveResult word_sum_sigma(const IfsModel& model, double r, int depth,
                                double tol, std::size_t cap) {
  if (depth < 1) throw ValidationError("word_sum_sigma: depth must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("word_sum_sigma: tol must be positive");
  auto level = level_word_data(model, depth, cap);  // complete level; throws past cap

  std::vector<double> log_t(level.size()), log_r(level.size());
  for (std::size_t i = 0; i < level.size(); ++i) {
    log_t[i] = std::log(level[i].weight) + r * std::log(level[i].t_bound);
    log_r[i] = std::log(level[i].weight) + r * std::log(level[i].r_bound);
  }

  auto level_growth = [&](std::span<const double> logs, double s) {
    // exp of (1/n) log sum exp(s * log term), stabilized.
    double mx = -std::numeric_limits<double>::infinity();
    for (double l : logs) mx = std::max(mx, s * l);
    double acc = 0.0;
    for (double l : logs) acc += std::exp(s * l - mx);
    return std::exp((mx + std::log(acc)) / static_cast<double>(depth));
  };

  SigmaSolveResult result;
  result.method = SigmaMethod::word_sum;
  result.tol = tol;
  auto solve = [&](std::span<const double> logs, bool record) {
    double lo = 0.0, hi = 1.0 - 1e-12;
    double sigma_lo = 0.0, sigma_hi = std::numeric_limits<double>::infinity();
    while (sigma_hi - sigma_lo > tol) {
      double mid = 0.5 * (lo + hi);
      double growth = level_growth(logs, mid);
      double sigma_mid = r * mid / (1.0 - mid);
      if (record) result.spr_trace.emplace_back(sigma_mid, growth);
      if (growth > 1.0) {
        lo = mid;
        sigma_lo = sigma_mid;
      } else {
        hi = mid;
        sigma_hi = sigma_mid;
      }
      if (hi - lo < 1e-16) break;
    }
    return r * (0.5 * (lo + hi)) / (1.0 - 0.5 * (lo + hi));
  };

  result.sigma_upper = solve(log_t, true);
  result.sigma_lower = solve(log_r, false);
  result.sigma = result.sigma_upper;  // the T_w characterization is primary
  result.bracket_lo = result.sigma_lower;
  result.bracket_hi = result.sigma_upper;
  return result;
}

}  // namespace qdim
