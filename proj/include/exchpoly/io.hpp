#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "exchpoly/geometry.hpp"
#include "exchpoly/inference.hpp"
#include "exchpoly/pex.hpp"
#include "exchpoly/rays.hpp"

namespace exchpoly {

using nlohmann::json;

// CSV number format: '.' decimal, enough digits to round-trip a double.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline json to_json(const RayDensity& r) {
  json j;
  if (r.is_point_mass()) {
    j["support"] = {r.j1};
    j["mass"] = {1.0};
  } else {
    j["support"] = {r.j1, r.j2};
    j["mass"] = {r.mass1, r.mass2};
  }
  return j;
}

inline json rays_to_json(int d, double p, const std::vector<RayDensity>& rays) {
  json out;
  out["d"] = d;
  out["p"] = p;
  out["rays"] = json::array();
  for (const RayDensity& r : rays) out["rays"].push_back(to_json(r));
  return out;
}

inline json triangulation_to_json(int d, double p, const TriangulatedPolytope& tri) {
  json out;
  out["d"] = d;
  out["p"] = p;
  out["affine_dim"] = tri.poly.affine_dim;
  out["simplices"] = tri.simplices;
  out["volumes"] = tri.volumes;
  out["probs"] = tri.probs;
  out["total_volume"] = tri.total_volume;
  return out;
}

inline json to_json(const GlrResult& r) {
  json out;
  out["lambda_stat"] = r.lambda_stat;
  out["neg2log"] = r.neg2log;
  out["df"] = r.df;
  out["p_value"] = r.p_value;
  out["alpha"] = r.alpha;
  out["reject"] = r.reject;
  out["min_expected"] = r.min_expected;
  out["low_count_warning"] = r.low_count_warning;
  return out;
}

inline json pex_rays_to_json(const pex::PartitionSpec& spec,
                             const std::vector<pex::MultiSumPmf>& rays) {
  json out;
  json shape = json::array();
  for (const auto& g : spec.groups) shape.push_back(g.size() + 1);
  out["grid_shape"] = shape;
  out["rays"] = json::array();
  for (const pex::MultiSumPmf& r : rays) {
    json jr;
    jr["support"] = json::array();
    jr["mass"] = json::array();
    for (std::size_t c = 0; c < r.cells(); ++c) {
      if (r.data()[c] > 0.0) {
        jr["support"].push_back(r.multi_index(c));
        jr["mass"].push_back(r.data()[c]);
      }
    }
    out["rays"].push_back(jr);
  }
  return out;
}

// Binary design matrix: one observation per row, d comma-separated 0/1
// entries; a single-column file is accepted as one coordinate per row.
inline std::vector<std::vector<std::uint8_t>> read_binary_csv(std::istream& in, bool header) {
  std::vector<std::vector<std::uint8_t>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    std::vector<std::uint8_t> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      std::size_t b = tok.find_first_not_of(" \t");
      std::size_t e = tok.find_last_not_of(" \t");
      if (b == std::string::npos) throw std::invalid_argument("csv: empty field");
      tok = tok.substr(b, e - b + 1);
      if (tok == "0")
        row.push_back(0);
      else if (tok == "1")
        row.push_back(1);
      else
        throw std::invalid_argument("csv: non-binary entry '" + tok + "'");
    }
    if (row.empty()) throw std::invalid_argument("csv: empty row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("csv: no data rows");
  return rows;
}

inline std::vector<std::vector<std::uint8_t>> read_binary_csv_file(const std::string& path,
                                                                   bool header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_binary_csv(in, header);
}

}  // namespace exchpoly
