#include "angpool/json_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "angpool/error.hpp"

namespace angpool {

std::string cdf_to_json(const PiecewiseLinearCdf& cdf) {
  nlohmann::json knots = nlohmann::json::array();
  for (const auto& k : cdf.knots()) {
    knots.push_back(nlohmann::json::array({k.x, k.p}));
  }
  nlohmann::json doc;
  doc["knots"] = std::move(knots);
  return doc.dump();
}

PiecewiseLinearCdf cdf_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail("invalid-input", std::string("bad CDF JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("knots") || !doc["knots"].is_array()) {
    fail("invalid-input", "CDF JSON must be an object with a \"knots\" array");
  }
  std::vector<Knot> knots;
  for (const auto& entry : doc["knots"]) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
        !entry[1].is_number()) {
      fail("invalid-input", "each knot must be a [x, p] number pair");
    }
    knots.push_back({entry[0].get<double>(), entry[1].get<double>()});
  }
  return PiecewiseLinearCdf(std::move(knots));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("io-error", "cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("io-error", "cannot write file: " + path);
  out << content;
  if (!out) fail("io-error", "write failed: " + path);
}

PiecewiseLinearCdf load_cdf_file(const std::string& path) {
  return cdf_from_json(read_text_file(path));
}

void save_cdf_file(const PiecewiseLinearCdf& cdf, const std::string& path) {
  write_text_file(path, cdf_to_json(cdf) + "\n");
}

std::vector<double> load_weights_file(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail("invalid-input", std::string("bad weights JSON: ") + e.what());
  }
  if (!doc.is_array()) fail("invalid-input", "weights file must be a JSON array");
  std::vector<double> weights;
  for (const auto& entry : doc) {
    if (!entry.is_number()) fail("invalid-input", "weights must be numbers");
    weights.push_back(entry.get<double>());
  }
  return weights;
}

}  // namespace angpool
