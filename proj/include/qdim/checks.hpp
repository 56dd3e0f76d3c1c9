#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdim/ifs.hpp"

namespace qdim {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  double r = 2.0;
  int distortion_depth = 8;
  int distortion_mesh = 17;
  int band_half_depth = 3;     // word pairs with |w|, |tau| <= this
  int level_sum_depth = 12;
  int word_sum_depth = 12;
  int measure_depth = 10;      // upper recursion measure
  int u_measure_depth = 8;     // lower recursion measure (quadratic DP)
  std::size_t mesh_size = 1025;
  double tol = 1e-10;
  double slack = 1.05;         // inflation applied to sampled constants
  std::uint64_t seed = 1;
};

// Reference sigma_r: closed form for similitude models, spectral otherwise.
double reference_sigma(const IfsModel& model, double r, std::size_t mesh_size,
                       double tol);

// The numeric lemma suite behind `verify`: bounded distortion plateau,
// submultiplicativity band, level-sum band, antichain sum bounds, the upper
// and lower quantization recursions, plus cross-method and metric sanity
// checks. All constants are sampled estimates inflated by `slack`.
std::vector<CheckResult> run_verification_suite(const IfsModel& model,
                                                const VerifyOptions& options = {});

bool all_pass(const std::vector<CheckResult>& results);

}  // namespace qdim
