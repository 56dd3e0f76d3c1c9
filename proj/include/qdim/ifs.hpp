#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdim/common.hpp"

namespace qdim {

inline constexpr std::size_t kDefaultWordCap = std::size_t{1} << 16;

enum class MapKind { affine, moebius };

// A contraction on the model domain. Affine: f(x) = a x + b. Moebius:
// f(x) = (a x + b) / (c x + d) with ad - bc != 0. Both kinds have a
// closed-form derivative modulus |f'| that is monotone on an interval
// avoiding the pole, and both compose into Moebius maps again.
struct MapDescriptor {
  MapKind kind = MapKind::affine;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 1.0;

  static MapDescriptor make_affine(double slope, double offset);
  static MapDescriptor make_moebius(double a, double b, double c, double d);
  bool operator==(const MapDescriptor&) const = default;
};

double eval_map(const MapDescriptor& map, double x);
double eval_df(const MapDescriptor& map, double x);

struct IfsModel {
  std::vector<MapDescriptor> maps;
  std::vector<double> probs;
  Interval domain{0.0, 1.0};
  std::vector<Interval> sosc;  // open subintervals; empty when not declared

  int map_count() const { return static_cast<int>(maps.size()); }
  bool has_sosc() const { return !sosc.empty(); }

  // Domain-checked evaluation (1-based symbol, matching word notation).
  double apply(int symbol, double x) const;
  double derivative(int symbol, double x) const;

  bool is_similitude() const;  // every map affine (constant |f'|)
  std::vector<double> contraction_ratios() const;  // sup |f_i'| over the domain
};

// Empty list means valid. Each entry names the offending field.
std::vector<std::string> validate_model(const IfsModel& model, int mesh_size = 129);

// Validating constructor; throws ValidationError listing every violation.
IfsModel make_model(std::vector<MapDescriptor> maps, std::vector<double> probs,
                    Interval domain, std::vector<Interval> sosc = {});

struct Word {
  std::vector<int> symbols;  // over {1..N}

  int length() const { return static_cast<int>(symbols.size()); }
  bool empty() const { return symbols.empty(); }
  Word parent() const;  // w* (drop last symbol)
  Word concat(const Word& tail) const;
  bool operator==(const Word&) const = default;
};

std::string to_string(const Word& w);

double word_weight(const IfsModel& model, const Word& w);
double eval_map_word(const IfsModel& model, const Word& w, double x);   // f_w(x)
double eval_df_word(const IfsModel& model, const Word& w, double x);    // chain rule

struct WordBounds {
  double t = 0.0;  // T_w = max Df_w
  double r = 0.0;  // R_w = min Df_w
};

// Extrema of Df_w over a uniform mesh (endpoints included). |f_w'| is
// monotone for the supported kinds, so the endpoints are exact and the
// interior mesh acts as an audit.
WordBounds word_bounds(const IfsModel& model, const Word& w, int mesh_size = 33);

// Complete lexicographic enumeration of one tree level.
std::vector<Word> enumerate_words(const IfsModel& model, int length,
                                  std::size_t cap = kDefaultWordCap);

// One level of the coding tree with weights and Df bounds, computed
// incrementally by matrix composition (exact endpoint extrema).
struct WordData {
  Word word;
  double weight = 1.0;
  double t_bound = 1.0;
  double r_bound = 1.0;
};
std::vector<WordData> level_word_data(const IfsModel& model, int length,
                                      std::size_t cap = kDefaultWordCap);

struct DistortionReport {
  double c1 = 1.0;  // max over scanned words of T_w / R_w
  double c2 = 1.0;  // >= c1; also covers chord-vs-Df ratios
  double m = 1.0;   // c2^2

  struct DepthRow {
    int depth = 0;
    double max_t_over_r = 1.0;   // per-depth maximum
    double c2_running = 1.0;     // cumulative up to this depth
    std::size_t words_scanned = 0;
    bool subsampled = false;
  };
  std::vector<DepthRow> per_depth;
  std::uint64_t seed = 0;
};

// Scans all words to max_depth (uniform random subsample past word_cap,
// seed recorded) and all mesh pairs x != y; estimates are suprema and
// grow monotonically with the sample.
DistortionReport distortion_report(const IfsModel& model, int max_depth,
                                   int mesh_size = 17,
                                   std::size_t word_cap = kDefaultWordCap,
                                   std::uint64_t seed = 0);

// Lambda(c') = { w : (p_w T_w^r)^s < c' <= (p_{w*} T_{w*}^r)^s }, a finite
// maximal antichain for any 0 < c' < 1.
std::vector<Word> antichain_threshold(const IfsModel& model, double r, double s,
                                      double cprime,
                                      std::size_t cap = kDefaultWordCap);

struct AntichainCertificate {
  bool ok = false;
  std::string violation;  // empty when ok
  double mass_gap = 0.0;  // 1 - sum N^{-|w|}
};

// True iff prefix-free and the uniform weights N^{-|w|} sum to 1, which is
// maximality on the full N-ary tree (and equivalent to sum p_w = 1 for any
// strictly positive probability vector).
AntichainCertificate verify_antichain(std::span<const Word> words, int n_symbols);

struct SimilitudeProbe {
  struct Row {
    double x = 0.0;
    double h = 0.0;
    double q_symmetric = 0.0;  // |f(x+h)-f(x-h)| / 2h
    double q_left = 0.0;       // |f(x)-f(x-h)| / h
    double q_right = 0.0;      // |f(x+h)-f(x)| / h
    double spread = 0.0;       // max - min of the three quotients
    double deviation = 0.0;    // |q_symmetric - Df(x)| when Df available
  };
  std::vector<Row> rows;
  std::vector<double> probes;
  std::vector<bool> probe_convergent;
  bool convergent = true;
};

// Chord-quotient diagnostic: quotients over shrinking two-sided pairs must
// collapse onto one limit for an infinitesimal similitude. df may be null
// when no closed-form derivative modulus exists.
SimilitudeProbe check_infinitesimal_similitude(
    const std::function<double(double)>& f,
    const std::function<double(double)>* df, std::span<const double> probes,
    std::span<const double> h_ladder);

SimilitudeProbe check_infinitesimal_similitude(const MapDescriptor& map,
                                               std::span<const double> probes,
                                               std::span<const double> h_ladder);

}  // namespace qdim
