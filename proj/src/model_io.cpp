#include "qdim/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qdim {

namespace {

using nlohmann::json;

double number_at(const json& node, const std::string& context) {
  if (!node.is_number())
    throw ValidationError(context + ": expected a number");
  return node.get<double>();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

IfsModel parse_model_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ValidationError(std::string("malformed model document: ") + err.what());
  }
  if (!doc.is_object()) throw ValidationError("model document must be an object");
  if (!doc.contains("maps") || !doc["maps"].is_array() || doc["maps"].empty())
    throw ValidationError("maps: required non-empty array");
  if (!doc.contains("probs") || !doc["probs"].is_array())
    throw ValidationError("probs: required array");
  if (!doc.contains("domain") || !doc["domain"].is_array() || doc["domain"].size() != 2)
    throw ValidationError("domain: required [lo, hi] pair");

  IfsModel model;
  for (std::size_t i = 0; i < doc["maps"].size(); ++i) {
    const auto& entry = doc["maps"][i];
    std::string at = "maps[" + std::to_string(i) + "]";
    if (!entry.is_object() || !entry.contains("kind"))
      throw ValidationError(at + ": expected object with \"kind\"");
    std::string kind = entry["kind"].get<std::string>();
    if (kind == "affine") {
      model.maps.push_back(MapDescriptor::make_affine(
          number_at(entry.value("a", json()), at + ".a"),
          number_at(entry.value("b", json()), at + ".b")));
    } else if (kind == "moebius") {
      model.maps.push_back(MapDescriptor::make_moebius(
          number_at(entry.value("a", json()), at + ".a"),
          number_at(entry.value("b", json()), at + ".b"),
          number_at(entry.value("c", json()), at + ".c"),
          number_at(entry.value("d", json()), at + ".d")));
    } else {
      throw ValidationError(at + ".kind: unknown kind \"" + kind + "\"");
    }
  }
  for (std::size_t i = 0; i < doc["probs"].size(); ++i)
    model.probs.push_back(number_at(doc["probs"][i], "probs[" + std::to_string(i) + "]"));
  model.domain = {number_at(doc["domain"][0], "domain[0]"),
                  number_at(doc["domain"][1], "domain[1]")};
  if (doc.contains("sosc")) {
    if (!doc["sosc"].is_array()) throw ValidationError("sosc: expected array of pairs");
    for (std::size_t g = 0; g < doc["sosc"].size(); ++g) {
      const auto& iv = doc["sosc"][g];
      std::string at = "sosc[" + std::to_string(g) + "]";
      if (!iv.is_array() || iv.size() != 2)
        throw ValidationError(at + ": expected [lo, hi]");
      model.sosc.push_back({number_at(iv[0], at + "[0]"), number_at(iv[1], at + "[1]")});
    }
  }

  auto issues = validate_model(model);
  if (!issues.empty()) {
    std::string msg = "model rejected:";
    for (const auto& s : issues) msg += "\n  - " + s;
    throw ValidationError(msg);
  }
  return model;
}

IfsModel load_model(const std::filesystem::path& path) {
  try {
    return parse_model_json(read_file(path));
  } catch (const ValidationError& err) {
    throw ValidationError(path.string() + ": " + err.what());
  }
}

std::string model_to_json(const IfsModel& model) {
  json doc;
  doc["maps"] = json::array();
  for (const auto& m : model.maps) {
    json entry;
    if (m.kind == MapKind::affine) {
      entry["kind"] = "affine";
      entry["a"] = m.a;
      entry["b"] = m.b;
    } else {
      entry["kind"] = "moebius";
      entry["a"] = m.a;
      entry["b"] = m.b;
      entry["c"] = m.c;
      entry["d"] = m.d;
    }
    doc["maps"].push_back(entry);
  }
  doc["probs"] = model.probs;
  doc["domain"] = {model.domain.lo, model.domain.hi};
  if (!model.sosc.empty()) {
    doc["sosc"] = json::array();
    for (const auto& iv : model.sosc) doc["sosc"].push_back({iv.lo, iv.hi});
  }
  return doc.dump(2);
}

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string measure_to_csv(const AtomicMeasure& mu) {
  std::string out = "atom,weight\n";
  for (std::size_t j = 0; j < mu.size(); ++j) {
    out += format_double(mu.atoms()[j]);
    out += ',';
    out += format_double(mu.weights()[j]);
    out += '\n';
  }
  return out;
}

AtomicMeasure parse_measure_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("atom,weight", 0) != 0)
    throw ValidationError("measure csv: missing `atom,weight` header");
  std::vector<double> atoms, weights;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ValidationError("measure csv line " + std::to_string(lineno) +
                            ": expected `atom,weight`");
    try {
      atoms.push_back(std::stod(line.substr(0, comma)));
      weights.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ValidationError("measure csv line " + std::to_string(lineno) +
                            ": unparsable number");
    }
  }
  return AtomicMeasure::from_samples(std::move(atoms), std::move(weights));
}

AtomicMeasure load_measure_csv(const std::filesystem::path& path) {
  return parse_measure_csv(read_file(path));
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace qdim
