#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qdim/ifs.hpp"

namespace qdim {

struct Mesh {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t m = 2;

  static Mesh over(Interval domain, std::size_t m);
  double point(std::size_t j) const;
  double spacing() const { return (hi - lo) / static_cast<double>(m - 1); }
};

struct MeshFunction {
  std::vector<double> values;

  double min_value() const;
  double max_value() const;
};

// Collocation matrix of (L Phi)(x_j) = sum_i (p_i Df_i(x_j)^r)^{sigma/(r+sigma)}
// Phi(f_i(x_j)) with Phi(f_i(x_j)) read off by linear interpolation between
// the bracketing mesh points. At most 2N entries per row; stored sparse.
class OperatorMatrix {
 public:
  std::size_t size() const { return rows_.size(); }
  void apply(std::span<const double> in, std::span<double> out) const;
  double entry(std::size_t row, std::size_t col) const;  // dense view
  double row_sum(std::size_t row) const;

  static OperatorMatrix from_dense(const std::vector<std::vector<double>>& dense);

  friend OperatorMatrix assemble_operator(const IfsModel&, const Mesh&, double, double);

 private:
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows_;
};

OperatorMatrix assemble_operator(const IfsModel& model, const Mesh& mesh,
                                 double sigma, double r);

struct SpectralRadiusResult {
  double spr = 0.0;
  MeshFunction eigenfunction;
  std::size_t iterations = 0;
};

// Power iteration from the constant positive start vector with sup-norm
// normalization; stops when successive Rayleigh estimates settle within tol.
SpectralRadiusResult spectral_radius(const OperatorMatrix& op, double tol,
                                     std::size_t max_iterations = 100000);

enum class SigmaMethod { closed_form, word_sum, spectral };

const char* to_string(SigmaMethod m);

struct SigmaSolveResult {
  double sigma = 0.0;
  std::vector<std::pair<double, double>> spr_trace;  // (sigma, spr-like value)
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  SigmaMethod method = SigmaMethod::spectral;
  double tol = 0.0;
  // Word-sum route only: roots of the T_w and R_w level sums. Their gap is
  // the distortion-induced error bar.
  double sigma_upper = 0.0;
  double sigma_lower = 0.0;
};

// Bisection on sigma for spr(L_{sigma,r}) = 1; spr is continuous and
// strictly decreasing in sigma, and spr(0) = N > 1.
SigmaSolveResult solve_sigma_spectral(const IfsModel& model, const Mesh& mesh,
                                      double r, std::pair<double, double> bracket,
                                      double tol);

SigmaSolveResult solve_sigma_spectral(const IfsModel& model, std::size_t mesh_size,
                                      double r, double tol);

// Root of sum_i (p_i c_i^r)^s = 1 over s in (0,1), mapped to
// sigma = r s / (1 - s). Exact route for similitude models.
double closed_form_sigma(std::span<const double> probs, std::span<const double> ratios,
                         double r);

// Roots of the fixed-depth level sums (1/n) log sum_{|w|=n} (p_w T_w^r)^s = 0
// and the R_w variant. Word sums must be complete; no subsampling.
SigmaSolveResult word_sum_sigma(const IfsModel& model, double r, int depth,
                                double tol, std::size_t cap = kDefaultWordCap);

}  // namespace qdim
