#include "qdim/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qdim {

namespace {

constexpr double kDomainTol = 1e-9;

// 2x2 coefficient matrix [[a,b],[c,d]] acting as x -> (ax+b)/(cx+d).
// Affine maps embed as (a,b,0,1); composition is matrix product, and the
// derivative modulus is |det| / (cx+d)^2 (scale invariant).
struct Mat2 {
  double a, b, c, d;
};

Mat2 as_matrix(const MapDescriptor& m) {
  if (m.kind == MapKind::affine) return {m.a, m.b, 0.0, 1.0};
  return {m.a, m.b, m.c, m.d};
}

Mat2 compose(const Mat2& l, const Mat2& r) {
  Mat2 out{l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
           l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
  double mx = std::max({std::fabs(out.a), std::fabs(out.b), std::fabs(out.c),
                        std::fabs(out.d)});
  if (mx > 1e8 || (mx > 0.0 && mx < 1e-8)) {
    out.a /= mx;
    out.b /= mx;
    out.c /= mx;
    out.d /= mx;
  }
  return out;
}

double mat_apply(const Mat2& m, double x) {
  return (m.a * x + m.b) / (m.c * x + m.d);
}

double mat_df(const Mat2& m, double x) {
  double den = m.c * x + m.d;
  return std::fabs(m.a * m.d - m.b * m.c) / (den * den);
}

void check_symbol(const IfsModel& model, int symbol) {
  if (symbol < 1 || symbol > model.map_count())
    throw ValidationError("word symbol " + std::to_string(symbol) +
                          " outside {1.." + std::to_string(model.map_count()) + "}");
}

void check_in_domain(const IfsModel& model, double x) {
  if (!model.domain.contains(x, kDomainTol * (1.0 + model.domain.length())))
    throw ValidationError("point " + std::to_string(x) + " outside domain [" +
                          std::to_string(model.domain.lo) + ", " +
                          std::to_string(model.domain.hi) + "]");
}

}  // namespace

MapDescriptor MapDescriptor::make_affine(double slope, double offset) {
  MapDescriptor m;
  m.kind = MapKind::affine;
  m.a = slope;
  m.b = offset;
  return m;
}

MapDescriptor MapDescriptor::make_moebius(double a, double b, double c, double d) {
  MapDescriptor m;
  m.kind = MapKind::moebius;
  m.a = a;
  m.b = b;
  m.c = c;
  m.d = d;
  return m;
}

double eval_map(const MapDescriptor& map, double x) {
  if (map.kind == MapKind::affine) return map.a * x + map.b;
  double den = map.c * x + map.d;
  if (den == 0.0) throw NumericError("moebius pole at x = " + std::to_string(x));
  return (map.a * x + map.b) / den;
}

double eval_df(const MapDescriptor& map, double x) {
  double v;
  if (map.kind == MapKind::affine) {
    v = std::fabs(map.a);
  } else {
    double den = map.c * x + map.d;
    if (den == 0.0) throw NumericError("moebius pole at x = " + std::to_string(x));
    v = std::fabs(map.a * map.d - map.b * map.c) / (den * den);
  }
  if (v <= 0.0)
    throw NumericError("zero derivative modulus at x = " + std::to_string(x) +
                       " (strict positivity violated)");
  return v;
}

double IfsModel::apply(int symbol, double x) const {
  check_symbol(*this, symbol);
  check_in_domain(*this, x);
  return eval_map(maps[static_cast<std::size_t>(symbol - 1)], x);
}

double IfsModel::derivative(int symbol, double x) const {
  check_symbol(*this, symbol);
  check_in_domain(*this, x);
  return eval_df(maps[static_cast<std::size_t>(symbol - 1)], x);
}

bool IfsModel::is_similitude() const {
  return std::all_of(maps.begin(), maps.end(), [](const MapDescriptor& m) {
    return m.kind == MapKind::affine;
  });
}

std::vector<double> IfsModel::contraction_ratios() const {
  std::vector<double> out;
  out.reserve(maps.size());
  for (const auto& m : maps) {
    double at_lo = eval_df(m, domain.lo);
    double at_hi = eval_df(m, domain.hi);
    out.push_back(std::max(at_lo, at_hi));
  }
  return out;
}

std::vector<std::string> validate_model(const IfsModel& model, int mesh_size) {
  std::vector<std::string> issues;
  const int n = model.map_count();
  if (n == 0) issues.push_back("maps: empty map list");
  if (model.probs.size() != model.maps.size())
    issues.push_back("probs: length " + std::to_string(model.probs.size()) +
                     " does not match " + std::to_string(n) + " maps");
  if (!(model.domain.lo < model.domain.hi))
    issues.push_back("domain: lo must be strictly below hi");
  if (mesh_size < 2) mesh_size = 2;

  double psum = 0.0;
  for (std::size_t i = 0; i < model.probs.size(); ++i) {
    if (!(model.probs[i] > 0.0))
      issues.push_back("probs[" + std::to_string(i) + "]: must be strictly positive");
    psum += model.probs[i];
  }
  if (!model.probs.empty() && std::fabs(psum - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "probs: probabilities sum to " << psum;
    issues.push_back(os.str());
  }

  const double lo = model.domain.lo, hi = model.domain.hi;
  for (int i = 0; i < n; ++i) {
    const auto& m = model.maps[static_cast<std::size_t>(i)];
    std::string tag = "map " + std::to_string(i + 1);
    if (m.kind == MapKind::moebius) {
      if (m.a * m.d - m.b * m.c == 0.0) {
        issues.push_back(tag + ": singular moebius coefficients (ad - bc = 0)");
        continue;
      }
      if (m.c != 0.0) {
        double pole = -m.d / m.c;
        if (model.domain.contains(pole)) {
          issues.push_back(tag + ": pole inside domain");
          continue;
        }
      } else if (m.d == 0.0) {
        issues.push_back(tag + ": degenerate moebius denominator");
        continue;
      }
    }
    // Both kinds are monotone with monotone |f'|: endpoint checks are
    // exact; the mesh guards future kinds.
    double sup_df = 0.0;
    bool df_positive = true;
    for (int k = 0; k < mesh_size; ++k) {
      double x = lo + (hi - lo) * static_cast<double>(k) /
                          static_cast<double>(mesh_size - 1);
      double den = (m.kind == MapKind::moebius) ? m.c * x + m.d : 1.0;
      if (den == 0.0) {
        df_positive = false;
        break;
      }
      double v = (m.kind == MapKind::affine)
                     ? std::fabs(m.a)
                     : std::fabs(m.a * m.d - m.b * m.c) / (den * den);
      sup_df = std::max(sup_df, v);
      if (!(v > 0.0)) df_positive = false;
    }
    if (!df_positive)
      issues.push_back(tag + ": derivative modulus not strictly positive on mesh");
    if (sup_df >= 1.0)
      issues.push_back(tag + " is not a contraction (sup |f'| = " +
                       std::to_string(sup_df) + ")");
    double ilo = eval_map(m, lo), ihi = eval_map(m, hi);
    if (ilo > ihi) std::swap(ilo, ihi);
    double tol = kDomainTol * (1.0 + hi - lo);
    if (ilo < lo - tol || ihi > hi + tol)
      issues.push_back(tag + ": image [" + std::to_string(ilo) + ", " +
                       std::to_string(ihi) + "] escapes the domain");
  }

  if (!model.sosc.empty() && issues.empty()) {
    for (std::size_t g = 0; g < model.sosc.size(); ++g) {
      const auto& iv = model.sosc[g];
      if (!(iv.lo < iv.hi) || iv.lo < lo - kDomainTol || iv.hi > hi + kDomainTol)
        issues.push_back("sosc[" + std::to_string(g) + "]: not an open subinterval of the domain");
    }
    // Monotone maps send intervals to intervals, so image endpoints decide
    // f_i(G) subset G and pairwise disjointness exactly.
    std::vector<std::vector<Interval>> images(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (const auto& iv : model.sosc) {
        double u = eval_map(model.maps[static_cast<std::size_t>(i)], iv.lo);
        double v = eval_map(model.maps[static_cast<std::size_t>(i)], iv.hi);
        if (u > v) std::swap(u, v);
        images[static_cast<std::size_t>(i)].push_back({u, v});
        bool inside = false;
        for (const auto& host : model.sosc)
          if (u >= host.lo - kDomainTol && v <= host.hi + kDomainTol) inside = true;
        if (!inside)
          issues.push_back("sosc: image of map " + std::to_string(i + 1) +
                           " is not contained in G");
      }
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (const auto& a : images[static_cast<std::size_t>(i)])
          for (const auto& b : images[static_cast<std::size_t>(j)])
            if (std::min(a.hi, b.hi) - std::max(a.lo, b.lo) > kDomainTol)
              issues.push_back("sosc: images of maps " + std::to_string(i + 1) +
                               " and " + std::to_string(j + 1) + " overlap");
  }
  return issues;
}

IfsModel make_model(std::vector<MapDescriptor> maps, std::vector<double> probs,
                    Interval domain, std::vector<Interval> sosc) {
  IfsModel model{std::move(maps), std::move(probs), domain, std::move(sosc)};
  auto issues = validate_model(model);
  if (!issues.empty()) {
    std::string msg = "invalid model:";
    for (const auto& s : issues) msg += "\n  - " + s;
    throw ValidationError(msg);
  }
  return model;
}

Word Word::parent() const {
  if (symbols.empty()) throw ValidationError("empty word has no parent");
  Word p{symbols};
  p.symbols.pop_back();
  return p;
}

Word Word::concat(const Word& tail) const {
  Word out{symbols};
  out.symbols.insert(out.symbols.end(), tail.symbols.begin(), tail.symbols.end());
  return out;
}

std::string to_string(const Word& w) {
  std::string s = "(";
  for (std::size_t i = 0; i < w.symbols.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(w.symbols[i]);
  }
  return s + ")";
}

double word_weight(const IfsModel& model, const Word& w) {
  double p = 1.0;
  for (int s : w.symbols) {
    check_symbol(model, s);
    p *= model.probs[static_cast<std::size_t>(s - 1)];
  }
  return p;
}

double eval_map_word(const IfsModel& model, const Word& w, double x) {
  check_in_domain(model, x);
  for (auto it = w.symbols.rbegin(); it != w.symbols.rend(); ++it) {
    check_symbol(model, *it);
    x = eval_map(model.maps[static_cast<std::size_t>(*it - 1)], x);
  }
  return x;
}

double eval_df_word(const IfsModel& model, const Word& w, double x) {
  if (w.empty()) throw ValidationError("eval_df_word: word must be nonempty");
  check_in_domain(model, x);
  // (Df_w)(x) = (Df_{w_1})(f_{w_2..w_n}(x)) ... (Df_{w_n})(x), right to left.
  double prod = 1.0;
  for (auto it = w.symbols.rbegin(); it != w.symbols.rend(); ++it) {
    check_symbol(model, *it);
    const auto& m = model.maps[static_cast<std::size_t>(*it - 1)];
    prod *= eval_df(m, x);
    x = eval_map(m, x);
  }
  return prod;
}

WordBounds word_bounds(const IfsModel& model, const Word& w, int mesh_size) {
  if (mesh_size < 2) throw ValidationError("word_bounds: mesh_size must be >= 2");
  double mx = -std::numeric_limits<double>::infinity();
  double mn = std::numeric_limits<double>::infinity();
  for (int k = 0; k < mesh_size; ++k) {
    double x = model.domain.lo + model.domain.length() * static_cast<double>(k) /
                                     static_cast<double>(mesh_size - 1);
    double v = eval_df_word(model, w, x);
    mx = std::max(mx, v);
    mn = std::min(mn, v);
  }
  return {mx, mn};
}

std::vector<Word> enumerate_words(const IfsModel& model, int length,
                                  std::size_t cap) {
  if (length < 0) throw ValidationError("enumerate_words: negative length");
  const int n = model.map_count();
  double count = std::pow(static_cast<double>(n), length);
  if (count > static_cast<double>(cap))
    throw ResourceError("enumerate_words: N^n = " + std::to_string(count) +
                        " exceeds cap " + std::to_string(cap));
  std::vector<Word> out;
  out.reserve(static_cast<std::size_t>(count));
  Word w;
  w.symbols.assign(static_cast<std::size_t>(length), 1);
  if (length == 0) {
    out.push_back(w);
    return out;
  }
  while (true) {
    out.push_back(w);
    int i = length - 1;
    while (i >= 0 && w.symbols[static_cast<std::size_t>(i)] == n) {
      w.symbols[static_cast<std::size_t>(i)] = 1;
      --i;
    }
    if (i < 0) break;
    ++w.symbols[static_cast<std::size_t>(i)];
  }
  return out;
}

std::vector<WordData> level_word_data(const IfsModel& model, int length,
                                      std::size_t cap) {
  const int n = model.map_count();
  double count = std::pow(static_cast<double>(n), length);
  if (count > static_cast<double>(cap))
    throw ResourceError("level_word_data: N^n exceeds cap");

  struct Node {
    Word word;
    Mat2 mat;
    double weight;
  };
  std::vector<Node> level{{Word{}, Mat2{1.0, 0.0, 0.0, 1.0}, 1.0}};
  for (int depth = 0; depth < length; ++depth) {
    std::vector<Node> next;
    next.reserve(level.size() * static_cast<std::size_t>(n));
    for (const auto& node : level) {
      for (int s = 1; s <= n; ++s) {
        Node child;
        child.word = node.word;
        child.word.symbols.push_back(s);
        child.mat = compose(node.mat, as_matrix(model.maps[static_cast<std::size_t>(s - 1)]));
        child.weight = node.weight * model.probs[static_cast<std::size_t>(s - 1)];
        next.push_back(std::move(child));
      }
    }
    level = std::move(next);
  }

  std::vector<WordData> out;
  out.reserve(level.size());
  for (const auto& node : level) {
    double d_lo = mat_df(node.mat, model.domain.lo);
    double d_hi = mat_df(node.mat, model.domain.hi);
    out.push_back({node.word, node.weight, std::max(d_lo, d_hi), std::min(d_lo, d_hi)});
  }
  return out;
}

DistortionReport distortion_report(const IfsModel& model, int max_depth,
                                   int mesh_size, std::size_t word_cap,
                                   std::uint64_t seed) {
  if (max_depth < 1) throw ValidationError("distortion_report: max_depth must be >= 1");
  if (mesh_size < 2) mesh_size = 2;
  DistortionReport report;
  report.seed = seed;

  std::vector<double> mesh(static_cast<std::size_t>(mesh_size));
  for (int k = 0; k < mesh_size; ++k)
    mesh[static_cast<std::size_t>(k)] =
        model.domain.lo + model.domain.length() * static_cast<double>(k) /
                              static_cast<double>(mesh_size - 1);

  const int n = model.map_count();
  struct Node {
    Mat2 mat;
  };
  std::vector<Node> level{{Mat2{1.0, 0.0, 0.0, 1.0}}};
  Rng rng(derive_seed(seed, SeedStream::distortion_subsample));

  for (int depth = 1; depth <= max_depth; ++depth) {
    std::vector<Node> next;
    next.reserve(level.size() * static_cast<std::size_t>(n));
    for (const auto& node : level)
      for (int s = 1; s <= n; ++s)
        next.push_back({compose(node.mat, as_matrix(model.maps[static_cast<std::size_t>(s - 1)]))});

    bool subsampled = false;
    if (next.size() > word_cap) {
      // Uniform subsample without replacement (partial Fisher-Yates).
      subsampled = true;
      for (std::size_t i = 0; i < word_cap; ++i) {
        std::size_t j = i + rng.index(next.size() - i);
        std::swap(next[i], next[j]);
      }
      next.resize(word_cap);
    }

    DistortionReport::DepthRow row;
    row.depth = depth;
    row.words_scanned = next.size();
    row.subsampled = subsampled;
    double chord_max = report.c2;
    for (const auto& node : next) {
      double d_lo = mat_df(node.mat, model.domain.lo);
      double d_hi = mat_df(node.mat, model.domain.hi);
      row.max_t_over_r = std::max(row.max_t_over_r,
                                  std::max(d_lo, d_hi) / std::min(d_lo, d_hi));
      std::vector<double> fx(mesh.size()), dfx(mesh.size());
      for (std::size_t k = 0; k < mesh.size(); ++k) {
        fx[k] = mat_apply(node.mat, mesh[k]);
        dfx[k] = mat_df(node.mat, mesh[k]);
      }
      for (std::size_t i = 0; i + 1 < mesh.size(); ++i) {
        for (std::size_t j = i + 1; j < mesh.size(); ++j) {
          double q = std::fabs(fx[i] - fx[j]) / (mesh[j] - mesh[i]);
          chord_max = std::max({chord_max, q / dfx[i], dfx[i] / q, q / dfx[j], dfx[j] / q});
        }
      }
    }
    report.c1 = std::max(report.c1, row.max_t_over_r);
    // The hypothesis constant dominates the distortion constant, so the
    // estimate is floored at c1.
    report.c2 = std::max(report.c1, chord_max);
    row.c2_running = report.c2;
    report.per_depth.push_back(row);
    level = std::move(next);
  }
  report.m = report.c2 * report.c2;
  return report;
}

std::vector<Word> antichain_threshold(const IfsModel& model, double r, double s,
                                      double cprime, std::size_t cap) {
  if (!(cprime > 0.0 && cprime < 1.0))
    throw ValidationError("antichain_threshold: c' must lie in (0,1)");
  if (!(s > 0.0 && s < 1.0))
    throw ValidationError("antichain_threshold: exponent s must lie in (0,1)");
  const int n = model.map_count();
  const double log_cprime = std::log(cprime);
  std::vector<Word> result;

  // DFS: descend while (p_w T_w^r)^s >= c'; the value is strictly
  // decreasing along every branch, so each branch terminates and the first
  // word below the threshold joins Lambda(c').
  struct Frame {
    Word word;
    Mat2 mat;
    double weight;
  };
  std::vector<Frame> stack{{Word{}, Mat2{1.0, 0.0, 0.0, 1.0}, 1.0}};
  std::size_t visited = 0;
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (++visited > 64 * cap)
      throw ResourceError("antichain_threshold: traversal exceeded cap");
    for (int sym = n; sym >= 1; --sym) {
      Frame child;
      child.word = f.word;
      child.word.symbols.push_back(sym);
      child.mat = compose(f.mat, as_matrix(model.maps[static_cast<std::size_t>(sym - 1)]));
      child.weight = f.weight * model.probs[static_cast<std::size_t>(sym - 1)];
      double t = std::max(mat_df(child.mat, model.domain.lo),
                          mat_df(child.mat, model.domain.hi));
      double log_val = s * (std::log(child.weight) + r * std::log(t));
      if (log_val < log_cprime) {
        result.push_back(child.word);
        if (result.size() > cap)
          throw ResourceError("antichain_threshold: antichain exceeds cap");
      } else {
        stack.push_back(std::move(child));
      }
    }
  }
  std::sort(result.begin(), result.end(),
            [](const Word& a, const Word& b) { return a.symbols < b.symbols; });
  return result;
}

AntichainCertificate verify_antichain(std::span<const Word> words, int n_symbols) {
  AntichainCertificate cert;
  if (words.empty()) {
    cert.violation = "empty word set";
    return cert;
  }
  std::vector<const Word*> sorted;
  sorted.reserve(words.size());
  for (const auto& w : words) {
    if (w.empty()) {
      cert.violation = "contains the empty word";
      return cert;
    }
    sorted.push_back(&w);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Word* a, const Word* b) { return a->symbols < b->symbols; });
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const auto& a = sorted[i]->symbols;
    const auto& b = sorted[i + 1]->symbols;
    if (a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin())) {
      cert.violation = "prefix violation: " + to_string(*sorted[i]) + " precedes " +
                       to_string(*sorted[i + 1]);
      return cert;
    }
  }
  double mass = 0.0;
  for (const auto& w : words)
    mass += std::pow(static_cast<double>(n_symbols), -w.length());
  cert.mass_gap = 1.0 - mass;
  if (std::fabs(cert.mass_gap) > 1e-12) {
    std::ostringstream os;
    os << "mass gap " << cert.mass_gap << " (set is not maximal)";
    cert.violation = os.str();
    return cert;
  }
  cert.ok = true;
  return cert;
}

SimilitudeProbe check_infinitesimal_similitude(
    const std::function<double(double)>& f,
    const std::function<double(double)>* df, std::span<const double> probes,
    std::span<const double> h_ladder) {
  if (h_ladder.size() < 2)
    throw ValidationError("similitude probe: need at least two step sizes");
  for (std::size_t i = 0; i + 1 < h_ladder.size(); ++i)
    if (!(h_ladder[i] > h_ladder[i + 1] && h_ladder[i + 1] > 0.0))
      throw ValidationError("similitude probe: steps must decrease strictly to 0");

  SimilitudeProbe probe;
  probe.probes.assign(probes.begin(), probes.end());
  for (double x : probes) {
    double first_spread = 0.0, last_spread = 0.0;
    for (std::size_t k = 0; k < h_ladder.size(); ++k) {
      double h = h_ladder[k];
      SimilitudeProbe::Row row;
      row.x = x;
      row.h = h;
      row.q_symmetric = std::fabs(f(x + h) - f(x - h)) / (2.0 * h);
      row.q_left = std::fabs(f(x) - f(x - h)) / h;
      row.q_right = std::fabs(f(x + h) - f(x)) / h;
      double mx = std::max({row.q_symmetric, row.q_left, row.q_right});
      double mn = std::min({row.q_symmetric, row.q_left, row.q_right});
      row.spread = mx - mn;
      if (df) row.deviation = std::fabs(row.q_symmetric - (*df)(x));
      if (k == 0) first_spread = row.spread;
      last_spread = row.spread;
      probe.rows.push_back(row);
    }
    // The three quotients must collapse as h -> 0; a flat positive spread
    // (|.| at the kink) signals a missing limit.
    bool conv = last_spread < 1e-3 || last_spread <= 0.5 * first_spread;
    probe.probe_convergent.push_back(conv);
    probe.convergent = probe.convergent && conv;
  }
  return probe;
}

SimilitudeProbe check_infinitesimal_similitude(const MapDescriptor& map,
                                               std::span<const double> probes,
                                               std::span<const double> h_ladder) {
  std::function<double(double)> f = [&map](double x) { return eval_map(map, x); };
  std::function<double(double)> g = [&map](double x) { return eval_df(map, x); };
  return check_infinitesimal_similitude(f, &g, probes, h_ladder);
}

}  // namespace qdim
