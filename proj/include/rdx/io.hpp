#pragma once

#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rdx/model.hpp"

namespace rdx::io {

using json = nlohmann::json;

inline constexpr const char* schema_version = "rdx-gauss/1";

inline json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from_json(const json& j, const std::string& name) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw Error(ErrorKind::ParseError, name + ": expected {rows, cols, data}");
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer() || !j["data"].is_array())
    throw Error(ErrorKind::ParseError, name + ": rows/cols must be integers and data an array");
  const auto rows = j["rows"].get<std::int64_t>();
  const auto cols = j["cols"].get<std::int64_t>();
  if (rows < 1 || cols < 1) throw Error(ErrorKind::ParseError, name + ": rows and cols must be >= 1");
  const json& data = j["data"];
  if (static_cast<std::int64_t>(data.size()) != rows * cols)
    throw Error(ErrorKind::ParseError, name + ": data has " + std::to_string(data.size()) + " entries, expected " +
                                           std::to_string(rows * cols));
  Matrix m(rows, cols);
  for (std::int64_t k = 0; k < rows * cols; ++k) {
    const json& v = data[static_cast<std::size_t>(k)];
    if (!v.is_number()) throw Error(ErrorKind::ParseError, name + ": non-numeric entry at " + std::to_string(k));
    m(k / cols, k % cols) = v.get<double>();
  }
  return m;
}

inline json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

/// Both units are always emitted; bits = nats / ln 2.
inline json rate_to_json(double nats) { return json{{"nats", nats}, {"bits", nats / std::numbers::ln2}}; }

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
}

/// FNV-1a 64-bit, hex encoded. Used to fingerprint canonical input dumps.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline json model_to_json(const JointModel& m) {
  return json{{"schema_version", schema_version},
              {"dims", {{"n_x", m.nx()}, {"n_y", m.ny()}, {"n_z", m.nz()}}},
              {"blocks",
               {{"Sigma_x", matrix_to_json(m.sigma_x())},
                {"Sigma_y", matrix_to_json(m.sigma_y())},
                {"Sigma_z", matrix_to_json(m.sigma_z())},
                {"Sigma_xy", matrix_to_json(m.sigma_xy())},
                {"Sigma_xz", matrix_to_json(m.sigma_xz())},
                {"Sigma_yz", matrix_to_json(m.sigma_yz())}}}};
}

namespace detail {

inline void check_schema(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "top level must be an object");
  if (j.contains("schema_version") && j["schema_version"] != schema_version)
    throw Error(ErrorKind::ParseError, "unsupported schema_version " + j["schema_version"].dump());
}

inline std::int64_t get_dim(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_number_integer())
    throw Error(ErrorKind::ParseError, std::string("missing integer ") + key);
  const auto v = obj[key].get<std::int64_t>();
  if (v < 1) throw Error(ErrorKind::ParseError, std::string(key) + " must be >= 1");
  return v;
}

inline const json& member(const json& obj, const char* key) {
  if (!obj.contains(key)) throw Error(ErrorKind::ParseError, std::string("missing ") + key);
  return obj[key];
}

inline JointModel parse_generator(const json& g) {
  if (!g.is_object() || !g.contains("type") || !g["type"].is_string())
    throw Error(ErrorKind::ParseError, "generator needs a string type");
  const std::string type = g["type"];
  const json params = g.value("parameters", json::object());
  if (type == "random") {
    if (!g.contains("seed") || !g["seed"].is_number_integer() || g["seed"].get<std::int64_t>() < 0)
      throw Error(ErrorKind::ParseError, "random generator needs a nonnegative integer seed");
    return random_instance(get_dim(params, "n_x"), get_dim(params, "n_y"), get_dim(params, "n_z"),
                           g["seed"].get<std::uint64_t>());
  }
  if (type == "noisy_observation") {
    return noisy_observation_instance(SpdMatrix(matrix_from_json(member(params, "Sigma_x"), "Sigma_x"), "Sigma_x"),
                                      matrix_from_json(member(params, "H"), "H"),
                                      SpdMatrix(matrix_from_json(member(params, "Sigma_n1"), "Sigma_n1"), "Sigma_n1"),
                                      matrix_from_json(member(params, "K"), "K"),
                                      SpdMatrix(matrix_from_json(member(params, "Sigma_n2"), "Sigma_n2"), "Sigma_n2"));
  }
  throw Error(ErrorKind::ParseError, "unknown generator type " + type);
}

}  // namespace detail

/// Model file: {schema_version, dims, blocks} or {schema_version, generator}.
/// Any invalid content (bad shapes, non-SPD blocks) is a parse error.
inline JointModel parse_model(const json& j) {
  detail::check_schema(j);
  const bool has_blocks = j.contains("blocks");
  const bool has_gen = j.contains("generator");
  if (has_blocks == has_gen) throw Error(ErrorKind::ParseError, "exactly one of blocks / generator is required");
  try {
    JointModel model = [&] {
      if (has_gen) return detail::parse_generator(j["generator"]);
      const json& b = j["blocks"];
      return JointModel(SpdMatrix(matrix_from_json(detail::member(b, "Sigma_x"), "Sigma_x"), "Sigma_x"),
                        SpdMatrix(matrix_from_json(detail::member(b, "Sigma_y"), "Sigma_y"), "Sigma_y"),
                        SpdMatrix(matrix_from_json(detail::member(b, "Sigma_z"), "Sigma_z"), "Sigma_z"),
                        matrix_from_json(detail::member(b, "Sigma_xy"), "Sigma_xy"),
                        matrix_from_json(detail::member(b, "Sigma_xz"), "Sigma_xz"),
                        matrix_from_json(detail::member(b, "Sigma_yz"), "Sigma_yz"));
    }();
    if (j.contains("dims")) {
      const json& d = j["dims"];
      if (detail::get_dim(d, "n_x") != model.nx() || detail::get_dim(d, "n_y") != model.ny() ||
          detail::get_dim(d, "n_z") != model.nz())
        throw Error(ErrorKind::ParseError, "dims do not match the blocks");
    }
    return model;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError) throw;
    throw Error(ErrorKind::ParseError, std::string("invalid model: ") + e.what(), e.values());
  }
}

/// Distortion file: {schema_version, D: matrix} or a bare matrix object.
inline Matrix parse_distortion(const json& j) {
  detail::check_schema(j);
  if (j.contains("D")) return matrix_from_json(j["D"], "D");
  return matrix_from_json(j, "D");
}

}  // namespace rdx::io
