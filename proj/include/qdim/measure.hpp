#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qdim/ifs.hpp"

namespace qdim {

// Finite Borel probability measure on the line: strictly increasing atoms
// with positive weights summing to 1. Coincident points (within 1e-14
// absolute) merge on construction.
class AtomicMeasure {
 public:
  AtomicMeasure() = default;

  static AtomicMeasure from_samples(std::vector<double> atoms,
                                    std::vector<double> weights,
                                    double merge_tol = 1e-14);
  static AtomicMeasure dirac(double x);

  std::span<const double> atoms() const { return atoms_; }
  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }
  double total_mass() const;
  Interval support_hull() const;

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

// Level-n tree approximant sum over |w| = depth of p_w * delta_{f_w(anchor)}.
AtomicMeasure invariant_atoms(const IfsModel& model, int depth, double anchor,
                              std::size_t cap = kDefaultWordCap);

struct SamplerConfig {
  std::uint64_t seed = 0;
  std::size_t burn_in = 100;
  std::size_t samples = 10000;
};

// Empirical measure of the random orbit after burn-in; deterministic for a
// fixed seed.
AtomicMeasure chaos_game(const IfsModel& model, const SamplerConfig& config);

// Exact L1 distance between distribution functions, which on the line is
// the Lipschitz-dual (Wasserstein-1) metric.
double w1_distance(const AtomicMeasure& mu, const AtomicMeasure& nu);

// sum_i p_i (f_i)_* mu
AtomicMeasure pushforward(const IfsModel& model, const AtomicMeasure& mu);

// W1 defect of mu against its own Hutchinson image; zero iff mu is the
// invariant measure (within atom resolution).
double self_similarity_residual(const IfsModel& model, const AtomicMeasure& mu);

}  // namespace qdim
