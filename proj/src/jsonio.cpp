#include "jsonio.hpp"

#include <json.hpp>

#include <cstdio>

namespace fdikit {

using nlohmann::json;

namespace {

MatrixXd parse_matrix(const json& j, const std::string& what) {
  if (!j.is_array()) fail_arg(what + ": expected an array of rows");
  int rows = static_cast<int>(j.size());
  int cols = rows ? static_cast<int>(j[0].size()) : 0;
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      fail_arg(what + ": ragged rows");
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

std::vector<int> parse_indices(const json& j, const std::string& what) {
  if (!j.is_array()) fail_arg(what + ": expected an index array");
  std::vector<int> out;
  for (const auto& v : j) out.push_back(v.get<int>());
  return out;
}

LtiModel parse_model(const json& j) {
  LtiModel m;
  if (!j.is_object()) fail_arg("model: expected an object");
  if (j.contains("a")) m.a = parse_matrix(j["a"], "a");
  if (j.contains("e") && !j["e"].is_null()) m.e = parse_matrix(j["e"], "e");
  if (j.contains("b")) m.b = parse_matrix(j["b"], "b");
  if (j.contains("c")) m.c = parse_matrix(j["c"], "c");
  if (j.contains("d")) m.d = parse_matrix(j["d"], "d");
  m.ts = j.value("ts", 0.0);
  const int n = m.order();
  // Fill omitted blocks with consistent zero shapes.
  if (m.b.size() == 0)
    m.b = MatrixXd::Zero(n, m.d.size() ? m.d.cols() : 0);
  if (m.c.size() == 0)
    m.c = MatrixXd::Zero(m.d.size() ? m.d.rows() : 0, n);
  if (m.d.size() == 0)
    m.d = MatrixXd::Zero(m.c.rows(), m.b.cols());
  if (j.contains("groups"))
    for (auto it = j["groups"].begin(); it != j["groups"].end(); ++it)
      m.input_groups[it.key()] = parse_indices(it.value(), it.key());
  if (j.contains("output_groups"))
    for (auto it = j["output_groups"].begin(); it != j["output_groups"].end();
         ++it)
      m.output_groups[it.key()] = parse_indices(it.value(), it.key());
  validate(m);
  return m;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::string& out, const MatrixXd& m) {
  out += '[';
  for (int i = 0; i < m.rows(); ++i) {
    if (i) out += ',';
    out += '[';
    for (int k = 0; k < m.cols(); ++k) {
      if (k) out += ',';
      out += fmt_double(m(i, k));
    }
    out += ']';
  }
  out += ']';
}

void write_groups(std::string& out, const GroupMap& groups) {
  out += '{';
  bool first = true;
  for (const auto& [name, idx] : groups) {  // std::map: sorted keys
    if (!first) out += ',';
    first = false;
    out += '"' + name + "\":[";
    for (size_t k = 0; k < idx.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(idx[k]);
    }
    out += ']';
  }
  out += '}';
}

void write_model(std::string& out, const LtiModel& m) {
  out += "{\"a\":";
  write_matrix(out, m.a);
  out += ",\"b\":";
  write_matrix(out, m.b);
  out += ",\"c\":";
  write_matrix(out, m.c);
  out += ",\"d\":";
  write_matrix(out, m.d);
  if (!m.identity_e()) {
    out += ",\"e\":";
    write_matrix(out, m.e);
  }
  if (!m.input_groups.empty()) {
    out += ",\"groups\":";
    write_groups(out, m.input_groups);
  }
  if (!m.output_groups.empty()) {
    out += ",\"output_groups\":";
    write_groups(out, m.output_groups);
  }
  out += ",\"ts\":" + fmt_double(m.ts) + "}";
}

}  // namespace

LtiModel model_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  if (j.contains("models"))
    fail_arg("expected a single model, found a multimodel file");
  return parse_model(j);
}

std::vector<LtiModel> models_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, true, true);
  std::vector<LtiModel> out;
  if (j.contains("models")) {
    for (const auto& item : j["models"]) {
      if (item.is_null() || (item.is_object() && item.empty()))
        out.push_back(zero_model(0, 0, 0.0));  // empty bank member
      else
        out.push_back(parse_model(item));
    }
  } else {
    out.push_back(parse_model(j));
  }
  return out;
}

std::string model_to_json(const LtiModel& m) {
  std::string out;
  write_model(out, m);
  return out;
}

std::string models_to_json(const std::vector<LtiModel>& models) {
  std::string out = "{\"models\":[";
  for (size_t i = 0; i < models.size(); ++i) {
    if (i) out += ',';
    if (models[i].outputs() == 0 && models[i].inputs() == 0 &&
        models[i].order() == 0)
      out += "null";
    else
      write_model(out, models[i]);
  }
  out += "]}";
  return out;
}

std::string struct_to_json(const BoolMatrix& s) {
  std::string out = "[";
  for (int i = 0; i < s.rows(); ++i) {
    if (i) out += ',';
    out += '[';
    for (int j = 0; j < s.cols(); ++j) {
      if (j) out += ',';
      out += s(i, j) ? '1' : '0';
    }
    out += ']';
  }
  out += ']';
  return out;
}

BoolMatrix struct_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, true, true);
  if (j.is_object() && j.contains("s")) j = j["s"];
  if (!j.is_array()) fail_arg("structure matrix: expected an array of rows");
  int rows = static_cast<int>(j.size());
  int cols = rows ? static_cast<int>(j[0].size()) : 0;
  BoolMatrix s(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) s(i, k) = j[i][k].get<double>() != 0.0;
  return s;
}

std::string matrix_to_json(const MatrixXd& m) {
  std::string out;
  write_matrix(out, m);
  return out;
}

}  // namespace fdikit
