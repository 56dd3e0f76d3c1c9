#include "qdim/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qdim/measure.hpp"
#include "qdim/quantize.hpp"
#include "qdim/spectral.hpp"

namespace qdim {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Suite {
  std::vector<CheckResult> results;

  void add(const std::string& name, bool pass, const std::string& detail) {
    results.push_back({name, pass, detail});
  }

  template <typename Fn>
  void guarded(const std::string& name, Fn&& fn) {
    try {
      fn();
    } catch (const std::exception& err) {
      add(name, false, std::string("exception: ") + err.what());
    }
  }
};

std::vector<Word> words_up_to(const IfsModel& model, int depth) {
  std::vector<Word> out;
  for (int len = 1; len <= depth; ++len) {
    auto level = enumerate_words(model, len);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

}  // namespace

double reference_sigma(const IfsModel& model, double r, std::size_t mesh_size,
                       double tol) {
  if (model.is_similitude()) {
    auto ratios = model.contraction_ratios();
    return closed_form_sigma(model.probs, ratios, r);
  }
  return solve_sigma_spectral(model, mesh_size, r, tol).sigma;
}

std::vector<CheckResult> run_verification_suite(const IfsModel& model,
                                                const VerifyOptions& opt) {
  Suite suite;
  const double r = opt.r;
  const DistortionReport distortion =
      distortion_report(model, opt.distortion_depth, opt.distortion_mesh,
                        kDefaultWordCap, opt.seed);
  const double c2 = distortion.c2 * opt.slack;
  const double m_const = distortion.m * opt.slack;
  const double sigma = reference_sigma(model, r, opt.mesh_size, opt.tol);
  const double s = sigma / (r + sigma);

  suite.guarded("chain_rule_consistency", [&] {
    auto words = words_up_to(model, std::min(opt.band_half_depth + 2, 5));
    double worst = 0.0;
    for (const auto& w : words) {
      for (const auto& tau : words) {
        for (int k = 0; k < 7; ++k) {
          double x = model.domain.lo + model.domain.length() * k / 6.0;
          double whole = eval_df_word(model, w.concat(tau), x);
          double split = eval_df_word(model, w, eval_map_word(model, tau, x)) *
                         eval_df_word(model, tau, x);
          worst = std::max(worst, std::fabs(whole - split) / std::max(whole, 1e-300));
        }
      }
    }
    suite.add("chain_rule_consistency", worst <= 1e-12,
              "max relative defect " + fmt(worst));
  });

  suite.guarded("distortion_plateau", [&] {
    double ref = 1.0;
    for (const auto& row : distortion.per_depth)
      if (row.depth <= 4) ref = std::max(ref, row.max_t_over_r);
    double late = 1.0;
    for (const auto& row : distortion.per_depth)
      if (row.depth > 4) late = std::max(late, row.max_t_over_r);
    bool pass = late <= 1.01 * ref;
    suite.add("distortion_plateau", pass,
              "depth<=4 max T/R " + fmt(ref) + ", deeper max " + fmt(late));
  });

  suite.guarded("submultiplicativity_band", [&] {
    auto words = words_up_to(model, opt.band_half_depth);
    double worst_lo = 1e300, worst_hi = 0.0;
    bool pass = true;
    for (const auto& w : words) {
      double tw = word_bounds(model, w).t;
      for (const auto& tau : words) {
        double ttau = word_bounds(model, tau).t;
        double twt = word_bounds(model, w.concat(tau)).t;
        double ratio = twt / (tw * ttau);
        worst_lo = std::min(worst_lo, ratio);
        worst_hi = std::max(worst_hi, ratio);
        pass = pass && ratio >= 1.0 / m_const && ratio <= m_const;
      }
    }
    suite.add("submultiplicativity_band", pass,
              "T_{w tau}/(T_w T_tau) in [" + fmt(worst_lo) + ", " + fmt(worst_hi) +
                  "], band [" + fmt(1.0 / m_const) + ", " + fmt(m_const) + "]");
  });

  suite.guarded("level_sum_band", [&] {
    double lo_band = std::pow(m_const, -r * s);
    double hi_band = std::pow(m_const, r * s);
    double worst_lo = 1e300, worst_hi = 0.0;
    bool pass = true;
    for (int n = 1; n <= opt.level_sum_depth; ++n) {
      auto level = level_word_data(model, n);
      double sum = 0.0;
      for (const auto& wd : level)
        sum += std::pow(wd.weight * std::pow(wd.t_bound, r), s);
      worst_lo = std::min(worst_lo, sum);
      worst_hi = std::max(worst_hi, sum);
      pass = pass && sum >= lo_band && sum <= hi_band;
    }
    suite.add("level_sum_band", pass,
              "sums in [" + fmt(worst_lo) + ", " + fmt(worst_hi) + "], band [" +
                  fmt(lo_band) + ", " + fmt(hi_band) + "]");
  });

  suite.guarded("antichain_sum_bounds", [&] {
    double upper = std::pow(c2, 2.0 * r * s);
    double lower = std::pow(m_const, -6.0 * r * s);
    bool pass = true;
    std::string detail;
    for (double cprime : {0.7, 0.4, 0.2, 0.08}) {
      auto antichain = antichain_threshold(model, r, s, cprime);
      auto cert = verify_antichain(antichain, model.map_count());
      double t_sum = 0.0, r_sum = 0.0;
      for (const auto& w : antichain) {
        double pw = word_weight(model, w);
        auto wb = word_bounds(model, w);
        t_sum += std::pow(pw * std::pow(wb.t, r), s);
        r_sum += std::pow(pw * std::pow(wb.r, r), s);
      }
      bool ok = cert.ok && t_sum <= upper && r_sum >= lower;
      pass = pass && ok;
      if (!ok)
        detail += " c'=" + fmt(cprime) + (cert.ok ? "" : " not-antichain") +
                  " Tsum=" + fmt(t_sum) + " Rsum=" + fmt(r_sum) + ";";
    }
    if (pass)
      detail = "T sums <= " + fmt(upper) + ", R sums >= " + fmt(lower) +
               " across 4 thresholds";
    suite.add("antichain_sum_bounds", pass, detail);
  });

  suite.guarded("upper_recursion", [&] {
    AtomicMeasure mu =
        invariant_atoms(model, opt.measure_depth, model.domain.midpoint());
    bool pass = true;
    std::string detail;
    for (int level : {1, 2}) {
      auto antichain = enumerate_words(model, level);
      std::vector<double> pw;
      for (const auto& w : antichain) pw.push_back(word_weight(model, w));
      std::size_t cells = antichain.size();
      for (std::size_t n : {2 * cells, 4 * cells}) {
        std::vector<std::vector<std::size_t>> allocations;
        allocations.push_back(balanced_allocation(n, cells));
        allocations.push_back(proportional_allocation(pw, n));
        if (cells == 2) allocations.push_back({1, n - 1});
        auto report = recursion_check_upper(model, mu, antichain, n, r,
                                            allocations, c2);
        pass = pass && report.holds;
        detail += "L" + std::to_string(level) + " n=" + std::to_string(n) +
                  " slack=" + fmt(report.slack) + "; ";
      }
    }
    suite.add("upper_recursion", pass, detail);
  });

  suite.guarded("lower_recursion", [&] {
    if (!model.has_sosc()) {
      suite.add("lower_recursion", true, "not applicable: no SOSC set declared");
      return;
    }
    AtomicMeasure mu =
        invariant_atoms(model, opt.u_measure_depth, model.domain.midpoint());
    auto antichain = enumerate_words(model, 1);
    std::vector<double> pw(antichain.size()), rw(antichain.size());
    std::vector<std::vector<Interval>> cells(antichain.size());
    for (std::size_t i = 0; i < antichain.size(); ++i) {
      pw[i] = word_weight(model, antichain[i]);
      rw[i] = word_bounds(model, antichain[i]).r;
      for (const auto& g : model.sosc) {
        double a = eval_map_word(model, antichain[i], g.lo);
        double b = eval_map_word(model, antichain[i], g.hi);
        if (a > b) std::swap(a, b);
        cells[i].push_back({a, b});
      }
    }

    const std::size_t n_cap = 24;
    auto u = constrained_quantizer_sweep(mu, n_cap, model.sosc, r);

    auto cell_counts = [&](const Codebook& codebook) {
      std::vector<std::size_t> counts(antichain.size(), 0);
      for (double a : codebook.points)
        for (std::size_t i = 0; i < cells.size(); ++i)
          for (const auto& iv : cells[i])
            if (iv.contains_open(a)) ++counts[i];
      return counts;
    };

    std::size_t n0 = 0;
    for (std::size_t n = antichain.size(); n <= n_cap && n0 == 0; ++n) {
      auto counts = cell_counts(u[n].codebook);
      if (*std::min_element(counts.begin(), counts.end()) >= 1) n0 = n;
    }
    if (n0 == 0) {
      suite.add("lower_recursion", false,
                "no n <= " + std::to_string(n_cap) + " covers every cell");
      return;
    }

    bool pass = true;
    std::string detail = "n0=" + std::to_string(n0) + ";";
    double factor = std::pow(c2, -r);
    for (std::size_t n = n0; n <= std::min(n0 + 6, n_cap); ++n) {
      auto counts = cell_counts(u[n].codebook);
      double rhs = 0.0;
      for (std::size_t i = 0; i < antichain.size(); ++i)
        rhs += pw[i] * std::pow(rw[i], r) * u[counts[i]].error;
      rhs *= factor;
      bool ok = u[n].error >= rhs;
      pass = pass && ok;
      detail += " n=" + std::to_string(n) + " u=" + fmt(u[n].error) +
                " rhs=" + fmt(rhs) + (ok ? "" : " VIOLATED") + ";";
    }
    suite.add("lower_recursion", pass, detail);
  });

  suite.guarded("quantizer_monotone_and_zero", [&] {
    AtomicMeasure small = invariant_atoms(model, 3, model.domain.midpoint());
    std::size_t card = small.size();
    auto sweep = quantization_error_sweep(small, card + 2, std::max(r, 1.0));
    bool monotone = true;
    for (std::size_t k = 1; k < sweep.size(); ++k)
      monotone = monotone && sweep[k] <= sweep[k - 1] + 1e-15;
    bool zero_at = sweep[card - 1] == 0.0 && sweep[card + 1] == 0.0;
    bool positive_before = card < 2 || sweep[card - 2] > 0.0;
    suite.add("quantizer_monotone_and_zero",
              monotone && zero_at && positive_before,
              "V monotone, V_card = 0 exactly, V_{card-1} > 0 (card " +
                  std::to_string(card) + ")");
  });

  suite.guarded("u_below_v", [&] {
    if (!model.has_sosc()) {
      suite.add("u_below_v", true, "not applicable: no SOSC set declared");
      return;
    }
    AtomicMeasure mu = invariant_atoms(model, 6, model.domain.midpoint());
    bool pass = true;
    double worst = 0.0;
    auto sweep = quantization_error_sweep(mu, 8, std::max(r, 1.0));
    auto u = constrained_quantizer_sweep(mu, 8, model.sosc, std::max(r, 1.0));
    for (std::size_t n = 1; n <= 8; ++n) {
      worst = std::max(worst, u[n].error - sweep[n - 1]);
      pass = pass && u[n].error <= sweep[n - 1] + 1e-12;
    }
    suite.add("u_below_v", pass, "max(u - V) = " + fmt(worst));
  });

  suite.guarded("lloyd_never_beats_dp", [&] {
    AtomicMeasure mu = invariant_atoms(model, 7, model.domain.midpoint());
    bool pass = true;
    std::string detail;
    for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{4}, std::size_t{8}}) {
      auto dp = optimal_quantizer_dp(mu, n, std::max(r, 1.0));
      auto heur = lloyd(mu, n, std::max(r, 1.0), 8, opt.seed);
      pass = pass && heur.error >= dp.error - 1e-12;
      if (n == 1) pass = pass && std::fabs(heur.error - dp.error) <= 1e-12;
      detail += "n=" + std::to_string(n) + " gap=" + fmt(heur.error - dp.error) + "; ";
    }
    suite.add("lloyd_never_beats_dp", pass, detail);
  });

  suite.guarded("sigma_method_agreement", [&] {
    auto spectral = solve_sigma_spectral(model, opt.mesh_size, r, opt.tol);
    auto wordsum = word_sum_sigma(model, r, opt.word_sum_depth, 1e-12);
    bool pass;
    std::string detail;
    if (model.is_similitude()) {
      auto ratios = model.contraction_ratios();
      double closed = closed_form_sigma(model.probs, ratios, r);
      pass = std::fabs(spectral.sigma - closed) <= 1e-3 &&
             std::fabs(wordsum.sigma_upper - closed) <= 1e-2 &&
             std::fabs(wordsum.sigma_lower - closed) <= 1e-2 &&
             std::fabs(wordsum.sigma_upper - wordsum.sigma_lower) <= 1e-12;
      detail = "closed " + fmt(closed) + ", spectral " + fmt(spectral.sigma) +
               ", word-sum " + fmt(wordsum.sigma);
    } else {
      pass = spectral.sigma >= wordsum.sigma_lower - 1e-9 &&
             spectral.sigma <= wordsum.sigma_upper + 1e-9 &&
             wordsum.sigma_upper - wordsum.sigma_lower < 2e-2;
      detail = "spectral " + fmt(spectral.sigma) + " inside word-sum bracket [" +
               fmt(wordsum.sigma_lower) + ", " + fmt(wordsum.sigma_upper) + "]";
    }
    // The recorded trace must be strictly decreasing in sigma.
    auto trace = spectral.spr_trace;
    std::sort(trace.begin(), trace.end());
    for (std::size_t i = 0; i + 1 < trace.size(); ++i)
      pass = pass && trace[i].second > trace[i + 1].second;
    suite.add("sigma_method_agreement", pass, detail);
  });

  suite.guarded("eigenfunction_positive", [&] {
    Mesh mesh = Mesh::over(model.domain, 257);
    auto op = assemble_operator(model, mesh, sigma, r);
    auto result = spectral_radius(op, opt.tol);
    std::vector<double> image(mesh.m);
    op.apply(result.eigenfunction.values, image);
    double residual = 0.0;
    for (std::size_t j = 0; j < mesh.m; ++j)
      residual = std::max(residual,
                          std::fabs(image[j] - result.spr * result.eigenfunction.values[j]));
    residual /= result.eigenfunction.max_value();
    bool pass = result.eigenfunction.min_value() > 0.0 && residual < 10.0 * opt.tol;
    suite.add("eigenfunction_positive",
              pass, "min " + fmt(result.eigenfunction.min_value()) + ", residual " +
                        fmt(residual));
  });

  suite.guarded("invariant_measure_sanity", [&] {
    double c_max = *std::max_element(model.contraction_ratios().begin(),
                                     model.contraction_ratios().end());
    bool pass = true;
    std::string detail;
    double prev_residual = 1e300;
    for (int depth : {2, 4, 6, 8}) {
      AtomicMeasure mu = invariant_atoms(model, depth, model.domain.midpoint());
      pass = pass && std::fabs(mu.total_mass() - 1.0) <= 1e-12;
      double residual = self_similarity_residual(model, mu);
      double bound = std::pow(c_max, depth) * model.domain.length();
      pass = pass && residual <= bound + 1e-12 && residual <= prev_residual + 1e-12;
      prev_residual = residual;
      if (depth == 8) detail = "depth-8 residual " + fmt(residual) + " <= " + fmt(bound);
    }
    suite.add("invariant_measure_sanity", pass, detail);
  });

  suite.guarded("w1_metric_properties", [&] {
    Rng rng(derive_seed(opt.seed, SeedStream::triple_sampling));
    bool pass = true;
    for (int trial = 0; trial < 8; ++trial) {
      auto sample = [&] {
        std::vector<double> xs, ws;
        std::size_t count = 2 + rng.index(6);
        double total = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
          xs.push_back(model.domain.lo + model.domain.length() * rng.uniform());
          ws.push_back(0.1 + rng.uniform());
          total += ws.back();
        }
        for (auto& w : ws) w /= total;
        return AtomicMeasure::from_samples(std::move(xs), std::move(ws));
      };
      AtomicMeasure a = sample(), b = sample(), c = sample();
      double ab = w1_distance(a, b), ba = w1_distance(b, a);
      double ac = w1_distance(a, c), cb = w1_distance(c, b);
      pass = pass && std::fabs(ab - ba) <= 1e-15;
      pass = pass && ab <= ac + cb + 1e-12;
      pass = pass && w1_distance(a, a) == 0.0;
    }
    suite.add("w1_metric_properties", pass,
              "symmetry, identity and triangle inequality on seeded triples");
  });

  suite.guarded("similitude_probe", [&] {
    std::vector<double> probes{model.domain.lo + 0.25 * model.domain.length(),
                               model.domain.midpoint(),
                               model.domain.lo + 0.75 * model.domain.length()};
    std::vector<double> ladder{1e-2, 1e-3, 1e-4, 1e-5};
    for (auto& h : ladder) h *= model.domain.length();
    bool pass = true;
    double worst = 0.0;
    for (const auto& map : model.maps) {
      auto probe = check_infinitesimal_similitude(map, probes, ladder);
      pass = pass && probe.convergent;
      for (const auto& row : probe.rows) worst = std::max(worst, row.deviation);
      if (map.kind == MapKind::affine)
        for (const auto& row : probe.rows) pass = pass && row.deviation == 0.0;
    }
    suite.add("similitude_probe", pass, "max chord deviation " + fmt(worst));
  });

  return suite.results;
}

bool all_pass(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& c) { return c.pass; });
}

}  // namespace qdim
