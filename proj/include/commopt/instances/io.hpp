#pragma once

#include "commopt/commsim/instance.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace commopt::instances {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline nlohmann::ordered_json to_json(const Instance& inst) {
  nlohmann::ordered_json j;
  j["kind"] = inst.kind;
  j["n"] = inst.n;
  j["d"] = inst.d;
  j["L"] = inst.L;
  j["s"] = inst.s;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < inst.n; ++r) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < inst.d; ++c) row.push_back(to_string(inst.A(r, c)));
    rows.push_back(row);
  }
  j["A"] = rows;
  auto vec = [](const ExactVector& v) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& q : v) out.push_back(to_string(q));
    return out;
  };
  j["b"] = vec(inst.b);
  if (inst.c) j["c"] = vec(*inst.c);
  j["partition"] = inst.partition;
  return j;
}

inline std::string serialize(const Instance& inst) { return to_json(inst).dump(1) + "\n"; }

inline Instance from_json(const nlohmann::json& j) {
  try {
    Instance inst;
    inst.kind = j.at("kind").get<std::string>();
    inst.n = j.at("n").get<std::size_t>();
    inst.d = j.at("d").get<std::size_t>();
    inst.L = j.at("L").get<std::size_t>();
    inst.s = j.at("s").get<std::size_t>();
    inst.A = ExactMatrix(inst.n, inst.d);
    const auto& rows = j.at("A");
    if (!rows.is_array() || rows.size() != inst.n) throw ParseError("A must have n rows");
    for (std::size_t r = 0; r < inst.n; ++r) {
      if (!rows[r].is_array() || rows[r].size() != inst.d) throw ParseError("row " + std::to_string(r) + " must have d entries");
      for (std::size_t c = 0; c < inst.d; ++c) inst.A(r, c) = parse_rational(rows[r][c].get<std::string>());
    }
    auto vec = [](const nlohmann::json& arr) {
      ExactVector v;
      for (const auto& e : arr) v.push_back(parse_rational(e.get<std::string>()));
      return v;
    };
    inst.b = vec(j.at("b"));
    if (j.contains("c")) inst.c = vec(j.at("c"));
    inst.partition = j.at("partition").get<std::vector<std::size_t>>();
    inst.validate();
    return inst;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("instance parse error: ") + e.what());
  }
}

inline Instance parse(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return from_json(j);
}

inline Instance read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

inline void write_file(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize(inst);
}

// FNV-1a over the serialized form.
inline std::uint64_t content_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

}  // namespace commopt::instances
