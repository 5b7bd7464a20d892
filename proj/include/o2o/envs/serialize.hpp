#pragma once

#include "o2o/core.hpp"
#include "o2o/envs/linear_mdp.hpp"
#include "o2o/envs/reference_q.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace o2o {

using Json = nlohmann::ordered_json;

inline constexpr const char* kMdpSchema = "o2o-mdp/1";
inline constexpr const char* kRefqSchema = "o2o-refq/1";

namespace detail {

inline const Json& field(const Json& doc, const std::string& path, const char* key) {
  if (!doc.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected an object");
  auto it = doc.find(key);
  if (it == doc.end()) throw SchemaError(path + "/" + key, "missing field");
  return *it;
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

inline std::size_t count(const Json& j, const std::string& path) {
  if (j.is_number_integer()) {
    const auto v = j.get<long long>();
    if (v < 0) throw SchemaError(path, "must be nonnegative");
    return static_cast<std::size_t>(v);
  }
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  throw SchemaError(path, "expected a nonnegative integer");
}

inline const Json& array(const Json& j, const std::string& path, std::size_t expected) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  if (j.size() != expected)
    throw SchemaError(path, "expected " + std::to_string(expected) + " entries, found " + std::to_string(j.size()));
  return j;
}

inline Vector vector_of(const Json& j, const std::string& path, std::size_t n) {
  array(j, path, n);
  Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], path + "/" + std::to_string(i));
  return v;
}

inline Matrix matrix_of(const Json& j, const std::string& path, std::size_t rows, std::size_t cols) {
  array(j, path, rows);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) m.row(static_cast<Eigen::Index>(r)) = vector_of(j[r], path + "/" + std::to_string(r), cols).transpose();
  return m;
}

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Vector(m.row(r).transpose())));
  return out;
}

inline std::vector<std::string> names_of(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a nonempty array of names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw SchemaError(path + "/" + std::to_string(i), "expected a string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

inline void expect_schema(const Json& doc, const char* schema) {
  const auto& s = field(doc, "", "schema");
  if (!s.is_string() || s.get<std::string>() != schema)
    throw SchemaError("/schema", std::string("expected \"") + schema + "\"");
}

inline std::size_t positive_count(const Json& doc, const char* key) {
  const std::string path = std::string("/") + key;
  const auto& j = field(doc, "", key);
  if (j.is_number_integer() && j.get<long long>() <= 0) throw SchemaError(path, "must be positive");
  const auto v = count(j, path);
  if (v == 0) throw SchemaError(path, "must be positive");
  return v;
}

}  // namespace detail

inline Json to_json(const LinearMdp& m) {
  Json doc;
  doc["schema"] = kMdpSchema;
  doc["d"] = m.d();
  doc["H"] = m.horizon();
  doc["states"] = m.state_names();
  doc["actions"] = m.action_names();
  doc["init_dist"] = detail::to_json(m.init_dist());
  doc["features"] = detail::to_json(m.features());
  Json next = Json::array(), reward = Json::array();
  for (std::size_t h = 0; h < m.horizon(); ++h) {
    next.push_back(detail::to_json(m.next_weights(h)));
    reward.push_back(detail::to_json(m.reward_params(h)));
  }
  doc["next_weights"] = std::move(next);
  doc["reward_params"] = std::move(reward);
  return doc;
}

inline std::string serialize(const LinearMdp& m) { return to_json(m).dump(1) + "\n"; }

inline LinearMdp mdp_from_json(const Json& doc) {
  using namespace detail;
  expect_schema(doc, kMdpSchema);
  const auto d = positive_count(doc, "d");
  const auto H = positive_count(doc, "H");
  auto states = names_of(field(doc, "", "states"), "/states");
  auto actions = names_of(field(doc, "", "actions"), "/actions");
  const auto S = states.size(), A = actions.size();
  Vector init = vector_of(field(doc, "", "init_dist"), "/init_dist", S);
  Matrix features = matrix_of(field(doc, "", "features"), "/features", S * A, d);
  const auto& nw = array(field(doc, "", "next_weights"), "/next_weights", H);
  const auto& rp = array(field(doc, "", "reward_params"), "/reward_params", H);
  std::vector<Matrix> next;
  std::vector<Vector> theta;
  for (std::size_t h = 0; h < H; ++h) {
    next.push_back(matrix_of(nw[h], "/next_weights/" + std::to_string(h), d, S));
    theta.push_back(vector_of(rp[h], "/reward_params/" + std::to_string(h), d));
  }
  return LinearMdp(d, H, std::move(states), std::move(actions), std::move(init), std::move(features),
                   std::move(next), std::move(theta));
}

inline Json parse_document(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("/", std::string("not a valid document: ") + e.what());
  }
}

inline LinearMdp deserialize(const std::string& text) { return mdp_from_json(parse_document(text)); }

inline Json to_json(const ReferenceQ& q) {
  Json doc;
  doc["schema"] = kRefqSchema;
  doc["H"] = q.horizon();
  doc["S"] = q.num_states();
  doc["A"] = q.num_actions();
  Json values = Json::array();
  for (const auto& v : q.values) values.push_back(detail::to_json(v));
  doc["values"] = std::move(values);
  doc["beta"] = q.beta;
  doc["tau"] = q.tau;
  Json planted = Json::array();
  for (const auto& t : q.planted_set) planted.push_back(Json::array({t.s, t.a, t.h}));
  doc["planted_set"] = std::move(planted);
  return doc;
}

inline std::string serialize(const ReferenceQ& q) { return to_json(q).dump(1) + "\n"; }

inline ReferenceQ refq_from_json(const Json& doc) {
  using namespace detail;
  expect_schema(doc, kRefqSchema);
  const auto H = positive_count(doc, "H");
  const auto S = positive_count(doc, "S");
  const auto A = positive_count(doc, "A");
  ReferenceQ q;
  const auto& values = array(field(doc, "", "values"), "/values", H);
  for (std::size_t h = 0; h < H; ++h) q.values.push_back(matrix_of(values[h], "/values/" + std::to_string(h), S, A));
  q.beta = number(field(doc, "", "beta"), "/beta");
  q.tau = number(field(doc, "", "tau"), "/tau");
  const auto& planted = field(doc, "", "planted_set");
  if (!planted.is_array()) throw SchemaError("/planted_set", "expected an array");
  for (std::size_t i = 0; i < planted.size(); ++i) {
    const std::string path = "/planted_set/" + std::to_string(i);
    array(planted[i], path, 3);
    q.planted_set.push_back({count(planted[i][0], path + "/0"), count(planted[i][1], path + "/1"),
                             count(planted[i][2], path + "/2")});
  }
  validate(q);
  return q;
}

inline ReferenceQ deserialize_refq(const std::string& text) { return refq_from_json(parse_document(text)); }

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline LinearMdp load_mdp(const std::string& path) { return deserialize(read_text_file(path)); }
inline ReferenceQ load_refq(const std::string& path) { return deserialize_refq(read_text_file(path)); }

}  // namespace o2o
