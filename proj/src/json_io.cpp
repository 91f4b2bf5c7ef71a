#include "embodied/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "embodied/error.hpp"

namespace embodied {

namespace {

void write_number(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void newline(std::string& out, int indent, int depth) {
  if (indent < 0) return;
  out += '\n';
  out.append(static_cast<std::size_t>(indent * depth), ' ');
}

void dump_into(std::string& out, const json& j, int indent, int depth) {
  switch (j.type()) {
    case json::value_t::number_float:
      write_number(out, j.get<double>());
      return;
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line even in indented mode.
      bool scalar = true;
      for (const auto& e : j) scalar = scalar && !e.is_structured();
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += scalar && indent >= 0 ? ", " : ",";
        first = false;
        if (!scalar) newline(out, indent, depth + 1);
        dump_into(out, e, indent, depth + 1);
      }
      if (!scalar) newline(out, indent, depth);
      out += ']';
      return;
    }
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(out, indent, depth + 1);
        out += json(it.key()).dump();
        out += indent >= 0 ? ": " : ":";
        dump_into(out, it.value(), indent, depth + 1);
      }
      newline(out, indent, depth);
      out += '}';
      return;
    }
    default:
      out += j.dump();
  }
}

std::size_t get_count(const json& j, const char* key, const char* what) {
  if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<long long>() <= 0) {
    throw ParseError(std::string(what) + ": missing or invalid positive integer '" + key + "'");
  }
  return j.at(key).get<std::size_t>();
}

}  // namespace

std::string dump_json(const json& j, int indent) {
  std::string out;
  dump_into(out, j, indent, 0);
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void write_json_file(const std::filesystem::path& path, const json& j, int indent) {
  write_text_file(path, dump_json(j, indent) + "\n");
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows, const char* what) {
  if (!rows.is_array()) throw ParseError(std::string(what) + ": expected an array of rows");
  const auto nr = static_cast<Eigen::Index>(rows.size());
  Eigen::Index nc = -1;
  Matrix m;
  for (Eigen::Index r = 0; r < nr; ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array()) throw ParseError(std::string(what) + ": row " + std::to_string(r) + " is not an array");
    if (nc < 0) {
      nc = static_cast<Eigen::Index>(row.size());
      m.resize(nr, nc);
    }
    if (static_cast<Eigen::Index>(row.size()) != nc) {
      throw ParseError(std::string(what) + ": row " + std::to_string(r) + " has wrong length");
    }
    for (Eigen::Index c = 0; c < nc; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) {
        throw ParseError(std::string(what) + ": row " + std::to_string(r) + " has a non-numeric entry");
      }
      m(r, c) = v.get<double>();
    }
  }
  if (nr == 0) m.resize(0, 0);
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const json& values, const char* what) {
  if (!values.is_array()) throw ParseError(std::string(what) + ": expected an array");
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].is_number()) throw ParseError(std::string(what) + ": non-numeric entry");
    v(static_cast<Eigen::Index>(i)) = values[i].get<double>();
  }
  return v;
}

json to_json(const StochasticKernel& k) {
  return json{{"domain", k.domain()}, {"codomain", k.codomain()}, {"rows", matrix_to_json(k.matrix())}};
}

json to_json(const EmpiricalKernel& k) {
  return json{{"domain", k.domain()}, {"codomain", k.codomain()}, {"rows", matrix_to_json(k.matrix())}};
}

namespace {

Matrix kernel_matrix_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("kernel: expected an object");
  const std::size_t domain = get_count(j, "domain", "kernel");
  const std::size_t codomain = get_count(j, "codomain", "kernel");
  if (!j.contains("rows")) throw ParseError("kernel: missing 'rows'");
  Matrix m = matrix_from_json(j.at("rows"), "kernel");
  if (static_cast<std::size_t>(m.rows()) != domain || static_cast<std::size_t>(m.cols()) != codomain) {
    throw ParseError("kernel: 'rows' shape does not match domain/codomain");
  }
  return m;
}

}  // namespace

StochasticKernel stochastic_kernel_from_json(const json& j, double row_tol) {
  Matrix m = kernel_matrix_from_json(j);
  try {
    return StochasticKernel(std::move(m), row_tol);
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
}

EmpiricalKernel empirical_kernel_from_json(const json& j, double row_tol) {
  Matrix m = kernel_matrix_from_json(j);
  try {
    return EmpiricalKernel(std::move(m), row_tol);
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
}

json to_json(const SmlSystem& sys) {
  return json{{"world", sys.world_card()},
              {"sensor", sys.sensor_card()},
              {"actuator", sys.actuator_card()},
              {"beta", to_json(sys.beta())},
              {"alpha", to_json(sys.alpha())},
              {"init_world", sys.init_world()}};
}

SmlSystem sml_system_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("system: expected an object");
  const std::size_t nw = get_count(j, "world", "system");
  const std::size_t ns = get_count(j, "sensor", "system");
  const std::size_t na = get_count(j, "actuator", "system");
  for (const char* key : {"beta", "alpha", "init_world"}) {
    if (!j.contains(key)) throw ParseError(std::string("system: missing '") + key + "'");
  }
  const Vector init = vector_from_json(j.at("init_world"), "system.init_world");
  try {
    return SmlSystem(StateSpace::make("world", nw), StateSpace::make("sensor", ns),
                     StateSpace::make("actuator", na), stochastic_kernel_from_json(j.at("beta")),
                     stochastic_kernel_from_json(j.at("alpha")),
                     std::vector<double>(init.data(), init.data() + init.size()), kIngestionRowTol);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("system: ") + e.what());
  }
}

json to_json(const Trajectory& traj) {
  json w = json::array(), s = json::array(), a = json::array();
  for (const auto& st : traj.steps) {
    w.push_back(st.w);
    s.push_back(st.s);
    a.push_back(st.a);
  }
  return json{{"seed", traj.seed},
              {"world_card", traj.world_card},
              {"sensor_card", traj.sensor_card},
              {"actuator_card", traj.actuator_card},
              {"w", std::move(w)},
              {"s", std::move(s)},
              {"a", std::move(a)},
              {"final_world", traj.final_world}};
}

Trajectory trajectory_from_json(const json& j) {
  try {
    Trajectory t;
    t.seed = j.at("seed").get<std::uint64_t>();
    t.world_card = j.at("world_card").get<std::size_t>();
    t.sensor_card = j.at("sensor_card").get<std::size_t>();
    t.actuator_card = j.at("actuator_card").get<std::size_t>();
    const auto& w = j.at("w");
    const auto& s = j.at("s");
    const auto& a = j.at("a");
    if (w.size() != s.size() || w.size() != a.size()) throw ParseError("trajectory: ragged arrays");
    for (std::size_t i = 0; i < w.size(); ++i) {
      Step st{w[i].get<std::size_t>(), s[i].get<std::size_t>(), a[i].get<std::size_t>()};
      if (st.w >= t.world_card || st.s >= t.sensor_card || st.a >= t.actuator_card) {
        throw ParseError("trajectory: index out of range at step " + std::to_string(i));
      }
      t.steps.push_back(st);
    }
    t.final_world = j.at("final_world").get<std::size_t>();
    if (t.final_world >= t.world_card) throw ParseError("trajectory: final world out of range");
    return t;
  } catch (const json::exception& e) {
    throw ParseError(std::string("trajectory: ") + e.what());
  }
}

StochasticKernel load_kernel(const std::filesystem::path& path) {
  try {
    return stochastic_kernel_from_json(read_json_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

SmlSystem load_system(const std::filesystem::path& path) {
  try {
    return sml_system_from_json(read_json_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_kernel(const std::filesystem::path& path, const StochasticKernel& k) {
  write_json_file(path, to_json(k));
}

void save_system(const std::filesystem::path& path, const SmlSystem& sys) {
  write_json_file(path, to_json(sys));
}

}  // namespace embodied
