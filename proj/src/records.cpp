#include "klvote/records.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "klvote/error.hpp"

namespace klvote {
namespace {

using nlohmann::json;

double real_field(const json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field \"") + key + "\"", line);
  if (!it->is_number()) throw ParseError(std::string("field \"") + key + "\" must be a number", line);
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ParseError(std::string("field \"") + key + "\" is not finite", line);
  return v;
}

std::int64_t integer_field(const json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field \"") + key + "\"", line);
  if (!it->is_number_integer()) throw ParseError(std::string("field \"") + key + "\" must be an integer", line);
  return it->get<std::int64_t>();
}

int category_field(const json& j, std::size_t line) {
  const std::int64_t v = integer_field(j, "category_id", line);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ParseError("category_id out of range", line);
  return static_cast<int>(v);
}

std::array<double, 4> quad_field(const json& j, const char* key, std::size_t line) {
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 4) throw ParseError(std::string("field \"") + key + "\" must hold 4 numbers", line);
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!a[i].is_number()) throw ParseError(std::string("field \"") + key + "\" must hold 4 numbers", line);
    out[i] = a[i].get<double>();
    if (!std::isfinite(out[i])) throw ParseError(std::string("field \"") + key + "\" has a non-finite entry", line);
  }
  return out;
}

Box box_field(const json& j, std::size_t line) {
  if (!j.contains("bbox")) throw ParseError("missing field \"bbox\"", line);
  const Box b = Box::from_coords(quad_field(j, "bbox", line));
  if (b.crossed()) throw ParseError("bbox must satisfy x1 <= x2 and y1 <= y2", line);
  return b;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, std::size_t line) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ParseError("unknown field \"" + key + "\"", line);
  }
}

// Calls fn(json, line) for every non-blank line.
template <typename Fn>
void for_each_object(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line);
    }
    if (!j.is_object()) throw ParseError("expected a JSON object", line);
    fn(j, line);
  }
}

std::string quad(const std::array<double, 4>& v) {
  return "[" + format_real(v[0]) + "," + format_real(v[1]) + "," + format_real(v[2]) + "," + format_real(v[3]) + "]";
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<DetectionRecord> parse_detections(std::istream& in, std::vector<std::size_t>* lines) {
  std::vector<DetectionRecord> out;
  for_each_object(in, [&](const json& j, std::size_t line) {
    reject_unknown(j, {"image_id", "category_id", "bbox", "score", "var"}, line);
    DetectionRecord r;
    r.image_id = integer_field(j, "image_id", line);
    r.category_id = category_field(j, line);
    r.bbox = box_field(j, line);
    r.score = real_field(j, "score", line);
    if (r.score < 0.0 || r.score > 1.0) throw ParseError("score must lie in [0, 1]", line);
    if (j.contains("var") && !j.at("var").is_null()) {
      Variances v = quad_field(j, "var", line);
      for (double x : v)
        if (!(x > 0.0)) throw ParseError("var entries must be positive", line);
      r.var = v;
    }
    out.push_back(r);
    if (lines) lines->push_back(line);
  });
  return out;
}

std::vector<GroundTruthRecord> parse_ground_truth(std::istream& in) {
  std::vector<GroundTruthRecord> out;
  for_each_object(in, [&](const json& j, std::size_t line) {
    reject_unknown(j, {"image_id", "category_id", "bbox"}, line);
    out.push_back({integer_field(j, "image_id", line), category_field(j, line), box_field(j, line)});
  });
  return out;
}

std::vector<DetectionRecord> read_detections(const std::string& path, std::vector<std::size_t>* lines) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return parse_detections(in, lines);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::vector<GroundTruthRecord> read_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return parse_ground_truth(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string serialize(const DetectionRecord& r) {
  std::string s = "{\"image_id\":" + std::to_string(r.image_id) + ",\"category_id\":" + std::to_string(r.category_id) +
                  ",\"bbox\":" + quad(r.bbox.coords()) + ",\"score\":" + format_real(r.score);
  if (r.var) s += ",\"var\":" + quad(*r.var);
  return s + "}";
}

std::string serialize(const GroundTruthRecord& r) {
  return "{\"image_id\":" + std::to_string(r.image_id) + ",\"category_id\":" + std::to_string(r.category_id) +
         ",\"bbox\":" + quad(r.bbox.coords()) + "}";
}

void write_detections(std::ostream& out, std::span<const DetectionRecord> records) {
  for (const auto& r : records) out << serialize(r) << '\n';
}

}  // namespace klvote
