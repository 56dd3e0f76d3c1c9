#pragma once

#include <filesystem>
#include <string>

#include "qdim/ifs.hpp"
#include "qdim/measure.hpp"

namespace qdim {

// Config document shape:
//   {"maps":[{"kind":"affine","a":0.3333333333,"b":0.0},
//            {"kind":"moebius","a":0,"b":1,"c":1,"d":2}],
//    "probs":[0.5,0.5],"domain":[0.0,1.0],"sosc":[[0.0,1.0]]}
// "sosc" is optional. Parsing validates every model invariant and reports
// the offending field.
IfsModel parse_model_json(const std::string& text);
IfsModel load_model(const std::filesystem::path& path);
std::string model_to_json(const IfsModel& model);

// CSV with header `atom,weight`, atoms ascending, full-precision decimals.
std::string measure_to_csv(const AtomicMeasure& mu);
AtomicMeasure parse_measure_csv(const std::string& text);
AtomicMeasure load_measure_csv(const std::filesystem::path& path);

// RFC-4180 field quoting.
std::string csv_escape(const std::string& field);

// Full round-trip decimal rendering.
std::string format_double(double v);

}  // namespace qdim
