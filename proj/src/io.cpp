#include "minsuff/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace minsuff::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::Parse, path + ": " + msg);
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

int positive_int(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() <= 0) fail(path, "expected a positive integer");
  return j.get<int>();
}


cplx entry_from_json(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    fail(path, "expected a number or an [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<std::pair<std::string, Matrix>> labeled_matrices(const json& list, const std::string& path) {
  if (!list.is_array() || list.empty()) fail(path, "expected a non-empty array");
  std::vector<std::pair<std::string, Matrix>> out;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string p = path + "[" + std::to_string(k) + "]";
    const json& item = list[k];
    std::string label = std::to_string(k);
    if (item.is_object() && item.contains("label")) {
      if (!item["label"].is_string()) fail(p + ".label", "expected a string");
      label = item["label"].get<std::string>();
    }
    out.emplace_back(label, matrix_from_json(field(item, "matrix", p), p + ".matrix"));
  }
  return out;
}

}  // namespace

Matrix matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) fail(path + "[0]", "expected a row array");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array()) fail(rp, "expected a row array");
    if (j[r].size() != cols)
      fail(rp, "row has " + std::to_string(j[r].size()) + " entries, expected " + std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          entry_from_json(j[r][c], rp + "[" + std::to_string(c) + "]");
  }
  if (rows != cols) fail(path, "matrix is " + std::to_string(rows) + "x" + std::to_string(cols) + ", expected square");
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

json real_matrix_to_json(const RealMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

StatisticalExperiment experiment_from_json(const json& j, const Tolerances& tol) {
  StatisticalExperiment e;
  e.dim = positive_int(field(j, "dim", ""), "dim");
  if (j.contains("block_dims")) {
    const json& b = j["block_dims"];
    if (!b.is_array() || b.empty()) fail("block_dims", "expected a non-empty array");
    std::vector<int> dims;
    for (std::size_t k = 0; k < b.size(); ++k) dims.push_back(positive_int(b[k], "block_dims[" + std::to_string(k) + "]"));
    e.block_dims = dims;
  }
  for (auto& [label, m] : labeled_matrices(field(j, "states", ""), "states")) {
    e.labels.push_back(label);
    e.states.push_back(std::move(m));
  }
  for (std::size_t k = 0; k < e.states.size(); ++k)
    if (e.states[k].rows() != e.dim)
      fail("states[" + std::to_string(k) + "].matrix",
           "matrix is " + std::to_string(e.states[k].rows()) + "x" + std::to_string(e.states[k].rows()) +
               ", dim is " + std::to_string(e.dim));
  e.validate(tol);
  return e;
}

json experiment_to_json(const StatisticalExperiment& e) {
  json j;
  j["dim"] = e.dim;
  if (e.block_dims) j["block_dims"] = *e.block_dims;
  json states = json::array();
  for (std::size_t k = 0; k < e.states.size(); ++k)
    states.push_back({{"label", e.labels[k]}, {"matrix", matrix_to_json(e.states[k])}});
  j["states"] = std::move(states);
  return j;
}

DiscretePOVM povm_from_json(const json& j, const Tolerances& tol) {
  DiscretePOVM m;
  m.dim = positive_int(field(j, "dim", ""), "dim");
  for (auto& [label, e] : labeled_matrices(field(j, "effects", ""), "effects")) {
    m.labels.push_back(label);
    m.effects.push_back(std::move(e));
  }
  for (std::size_t k = 0; k < m.effects.size(); ++k)
    if (m.effects[k].rows() != m.dim)
      fail("effects[" + std::to_string(k) + "].matrix",
           "matrix is " + std::to_string(m.effects[k].rows()) + "x" + std::to_string(m.effects[k].rows()) +
               ", dim is " + std::to_string(m.dim));
  m.validate(tol);
  return m;
}

json povm_to_json(const DiscretePOVM& m) {
  json j;
  j["dim"] = m.dim;
  json effects = json::array();
  for (std::size_t k = 0; k < m.effects.size(); ++k)
    effects.push_back({{"label", m.labels[k]}, {"matrix", matrix_to_json(m.effects[k])}});
  j["effects"] = std::move(effects);
  return j;
}

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::Parse, source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Parse, path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

namespace {

bool is_scalar_row(const json& j) {
  if (!j.is_array()) return false;
  for (const auto& x : j)
    if (!(x.is_number() || (x.is_array() && x.size() == 2 && x[0].is_number() && x[1].is_number()))) return false;
  return true;
}

void render_scalar(std::ostream& os, const json& j) {
  if (j.is_number_float()) {
    os << std::setprecision(17) << j.get<double>();
  } else if (j.is_string()) {
    os << j.get<std::string>();
  } else if (j.is_array() && j.size() == 2 && j[0].is_number()) {
    const double re = j[0].get<double>(), im = j[1].get<double>();
    os << std::setprecision(17) << re << (im < 0 || std::signbit(im) ? "-" : "+") << std::abs(im) << "i";
  } else {
    os << j.dump();
  }
}

void render(std::ostream& os, const json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const json& v = it.value();
      if (v.is_object() || (v.is_array() && !is_scalar_row(v))) {
        os << pad << it.key() << ":\n";
        render(os, v, indent + 2);
      } else if (v.is_array()) {
        os << pad << it.key() << ": [";
        for (std::size_t k = 0; k < v.size(); ++k) {
          if (k) os << ", ";
          render_scalar(os, v[k]);
        }
        os << "]\n";
      } else {
        os << pad << it.key() << ": ";
        render_scalar(os, v);
        os << "\n";
      }
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (is_scalar_row(v)) {
        os << pad << "- [";
        for (std::size_t k = 0; k < v.size(); ++k) {
          if (k) os << ", ";
          render_scalar(os, v[k]);
        }
        os << "]\n";
      } else if (v.is_object() || v.is_array()) {
        os << pad << "-\n";
        render(os, v, indent + 2);
      } else {
        os << pad << "- ";
        render_scalar(os, v);
        os << "\n";
      }
    }
  } else {
    os << pad;
    render_scalar(os, j);
    os << "\n";
  }
}

}  // namespace

std::string dump_text(const json& j) {
  std::ostringstream os;
  render(os, j, 0);
  return os.str();
}

}  // namespace minsuff::io
