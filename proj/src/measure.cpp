#include "qdim/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qdim {

AtomicMeasure AtomicMeasure::from_samples(std::vector<double> atoms,
                                          std::vector<double> weights,
                                          double merge_tol) {
  if (atoms.size() != weights.size())
    throw ValidationError("measure: atoms and weights differ in length");
  if (atoms.empty()) throw ValidationError("measure: no atoms");

  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return atoms[a] < atoms[b] || (atoms[a] == atoms[b] && a < b);
  });

  AtomicMeasure mu;
  mu.atoms_.reserve(atoms.size());
  mu.weights_.reserve(atoms.size());
  for (std::size_t k : order) {
    if (!std::isfinite(atoms[k])) throw ValidationError("measure: non-finite atom");
    if (!(weights[k] > 0.0)) throw ValidationError("measure: non-positive weight");
    // Merge against the group representative (first atom of the run).
    if (!mu.atoms_.empty() && atoms[k] - mu.atoms_.back() <= merge_tol) {
      mu.weights_.back() += weights[k];
    } else {
      mu.atoms_.push_back(atoms[k]);
      mu.weights_.push_back(weights[k]);
    }
  }
  double mass = mu.total_mass();
  if (std::fabs(mass - 1.0) > 1e-10)
    throw ValidationError("measure: weights sum to " + std::to_string(mass));
  return mu;
}

AtomicMeasure AtomicMeasure::dirac(double x) {
  return from_samples({x}, {1.0});
}

double AtomicMeasure::total_mass() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

Interval AtomicMeasure::support_hull() const {
  if (atoms_.empty()) throw ValidationError("measure: empty support");
  return {atoms_.front(), atoms_.back()};
}

AtomicMeasure invariant_atoms(const IfsModel& model, int depth, double anchor,
                              std::size_t cap) {
  if (depth < 0) throw ValidationError("invariant_atoms: negative depth");
  if (!model.domain.contains(anchor, 1e-12))
    throw ValidationError("invariant_atoms: anchor outside domain");
  const int n = model.map_count();
  if (std::pow(static_cast<double>(n), depth) > static_cast<double>(cap))
    throw ResourceError("invariant_atoms: N^depth exceeds cap");

  std::vector<double> xs{anchor};
  std::vector<double> ws{1.0};
  for (int level = 0; level < depth; ++level) {
    std::vector<double> nx, nw;
    nx.reserve(xs.size() * static_cast<std::size_t>(n));
    nw.reserve(xs.size() * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto& m = model.maps[static_cast<std::size_t>(i)];
      double p = model.probs[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < xs.size(); ++k) {
        nx.push_back(eval_map(m, xs[k]));
        nw.push_back(p * ws[k]);
      }
    }
    xs = std::move(nx);
    ws = std::move(nw);
  }
  return AtomicMeasure::from_samples(std::move(xs), std::move(ws));
}

AtomicMeasure chaos_game(const IfsModel& model, const SamplerConfig& config) {
  if (config.samples < 1) throw ValidationError("chaos_game: samples must be >= 1");
  Rng rng(derive_seed(config.seed, SeedStream::chaos_game));
  const int n = model.map_count();

  double x = model.domain.midpoint();
  auto step = [&]() {
    double u = rng.uniform();
    double acc = 0.0;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      acc += model.probs[static_cast<std::size_t>(i)];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    x = eval_map(model.maps[static_cast<std::size_t>(pick)], x);
  };

  for (std::size_t k = 0; k < config.burn_in; ++k) step();
  std::vector<double> xs;
  xs.reserve(config.samples);
  for (std::size_t k = 0; k < config.samples; ++k) {
    step();
    xs.push_back(x);
  }
  std::vector<double> ws(xs.size(), 1.0 / static_cast<double>(xs.size()));
  return AtomicMeasure::from_samples(std::move(xs), std::move(ws));
}

double w1_distance(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  auto xa = mu.atoms(), xb = nu.atoms();
  auto wa = mu.weights(), wb = nu.weights();
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0;  // CDF values left of the sweep point
  double prev = std::min(xa.front(), xb.front());
  double total = 0.0;
  while (i < xa.size() || j < xb.size()) {
    double x;
    if (j >= xb.size() || (i < xa.size() && xa[i] <= xb[j]))
      x = xa[i];
    else
      x = xb[j];
    total += std::fabs(fa - fb) * (x - prev);
    while (i < xa.size() && xa[i] == x) fa += wa[i++];
    while (j < xb.size() && xb[j] == x) fb += wb[j++];
    prev = x;
  }
  return total;
}

AtomicMeasure pushforward(const IfsModel& model, const AtomicMeasure& mu) {
  const int n = model.map_count();
  std::vector<double> xs, ws;
  xs.reserve(mu.size() * static_cast<std::size_t>(n));
  ws.reserve(mu.size() * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& m = model.maps[static_cast<std::size_t>(i)];
    double p = model.probs[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < mu.size(); ++k) {
      xs.push_back(eval_map(m, mu.atoms()[k]));
      ws.push_back(p * mu.weights()[k]);
    }
  }
  return AtomicMeasure::from_samples(std::move(xs), std::move(ws));
}

double self_similarity_residual(const IfsModel& model, const AtomicMeasure& mu) {
  return w1_distance(mu, pushforward(model, mu));
}

}  // namespace qdim
