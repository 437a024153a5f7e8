#include "rccs/wire.hpp"

#include <cmath>
#include <set>

namespace rccs {

namespace {

const Json& member(const Json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw WireError(key, "missing");
  return *it;
}

double number(const Json& v, const std::string& field) {
  if (!v.is_number()) throw WireError(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw WireError(field, "must be finite");
  return d;
}

std::int64_t integer(const Json& v, const std::string& field) {
  if (!v.is_number_integer()) throw WireError(field, "expected an integer");
  return v.get<std::int64_t>();
}

Vector<double> vector_of(const Json& v, const std::string& field) {
  if (!v.is_array()) throw WireError(field, "expected an array of numbers");
  Vector<double> out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(v[i], field);
  return out;
}

// Array of equally sized number arrays, one column per entry.
Matrix<double> columns_of(const Json& v, const std::string& field, Eigen::Index rows) {
  if (!v.is_array()) throw WireError(field, "expected an array of arrays");
  Matrix<double> out(rows, static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) {
    const Vector<double> col = vector_of(v[j], field);
    if (col.size() != rows) throw WireError(field, "entry " + std::to_string(j) + " has the wrong length");
    out.col(static_cast<Eigen::Index>(j)) = col;
  }
  return out;
}

Json columns_json(const Matrix<double>& m) {
  Json out = Json::array();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Json col = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) col.push_back(m(i, j));
    out.push_back(std::move(col));
  }
  return out;
}

void check_object(const Json& doc, std::initializer_list<const char*> keys) {
  if (!doc.is_object()) throw WireError("body", "expected a JSON object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key())) throw WireError(it.key(), "unknown field");
  const Json& v = member(doc, "version");
  if (!v.is_number_integer() || v.get<std::int64_t>() != kWireVersion)
    throw WireError("version", "unsupported protocol version (expected " + std::to_string(kWireVersion) + ")");
}

QpStatus status_from_string(const std::string& s) {
  for (QpStatus q : {QpStatus::Optimal, QpStatus::MaxIterations, QpStatus::Infeasible})
    if (s == to_string(q)) return q;
  throw WireError("status", "unknown solver status '" + s + "'");
}

}  // namespace

Json request_to_json(const ControlRequest<double>& r) {
  Json doc;
  doc["version"] = kWireVersion;
  doc["k"] = r.k;
  doc["x"] = std::vector<double>(r.x.data(), r.x.data() + r.x.size());
  doc["setpoint"] = r.x_target.size() > 0 ? r.x_target(0) : 0.0;
  doc["h_d"] = r.h_d;
  doc["pending_u"] = columns_json(r.pending_inputs);
  return doc;
}

ControlRequest<double> request_from_json(const Json& doc) {
  check_object(doc, {"version", "k", "x", "setpoint", "h_d", "pending_u"});
  ControlRequest<double> r;
  r.k = integer(member(doc, "k"), "k");
  r.x = vector_of(member(doc, "x"), "x");
  if (r.x.size() == 0) throw WireError("x", "must not be empty");
  r.x_target = Vector<double>::Zero(r.x.size());
  r.x_target(0) = number(member(doc, "setpoint"), "setpoint");
  r.h_d = number(member(doc, "h_d"), "h_d");
  auto it = doc.find("pending_u");
  if (it != doc.end() && !it->empty()) {
    if (!it->is_array() || !(*it)[0].is_array()) throw WireError("pending_u", "expected an array of arrays");
    r.pending_inputs = columns_of(*it, "pending_u", static_cast<Eigen::Index>((*it)[0].size()));
  } else {
    r.pending_inputs.resize(0, 0);
  }
  return r;
}

Json response_to_json(const ControlResponse<double>& r) {
  Json doc;
  doc["version"] = kWireVersion;
  doc["k"] = r.k;
  doc["h_d"] = r.h_d;
  doc["u_seq"] = columns_json(r.u_seq);
  doc["x_pred"] = columns_json(r.predicted_states);
  doc["iterations"] = r.iterations;
  doc["tau_c"] = r.processing_time;
  doc["status"] = to_string(r.status);
  doc["degraded"] = r.degraded;
  return doc;
}

ControlResponse<double> response_from_json(const Json& doc) {
  check_object(doc, {"version", "k", "h_d", "u_seq", "x_pred", "iterations", "tau_c", "status", "degraded"});
  ControlResponse<double> r;
  r.k = integer(member(doc, "k"), "k");
  r.h_d = number(member(doc, "h_d"), "h_d");
  const Json& u = member(doc, "u_seq");
  if (!u.is_array() || u.empty() || !u[0].is_array()) throw WireError("u_seq", "expected a non-empty array of arrays");
  r.u_seq = columns_of(u, "u_seq", static_cast<Eigen::Index>(u[0].size()));
  const Json& x = member(doc, "x_pred");
  if (!x.is_array() || x.empty() || !x[0].is_array()) throw WireError("x_pred", "expected a non-empty array of arrays");
  r.predicted_states = columns_of(x, "x_pred", static_cast<Eigen::Index>(x[0].size()));
  if (r.predicted_states.cols() != r.u_seq.cols() + 1) throw WireError("x_pred", "needs one more entry than u_seq");
  const std::int64_t it = integer(member(doc, "iterations"), "iterations");
  if (it < 0) throw WireError("iterations", "must be non-negative");
  r.iterations = static_cast<int>(it);
  r.processing_time = number(member(doc, "tau_c"), "tau_c");
  const Json& s = member(doc, "status");
  if (!s.is_string()) throw WireError("status", "expected a string");
  r.status = status_from_string(s.get<std::string>());
  const Json& d = member(doc, "degraded");
  if (!d.is_boolean()) throw WireError("degraded", "expected a boolean");
  r.degraded = d.get<bool>();
  return r;
}

}  // namespace rccs
