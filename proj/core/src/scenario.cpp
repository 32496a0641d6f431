#include "lbcon/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "lbcon/errors.hpp"

namespace lbcon {

namespace {

using nlohmann::json;

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

std::string dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

const json& require(const json& obj, const std::string& parent, const char* key) {
  const std::string path = parent.empty() ? key : parent + "." + key;
  if (!obj.is_object()) throw ParseError(parent.empty() ? "<root>" : parent, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path, "missing field");
  return *it;
}

double parse_real_text(std::string_view text, const std::string& path) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ParseError(path, "cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

double read_real(const json& j, const std::string& path) {
  double v = 0.0;
  if (j.is_number()) {
    v = j.get<double>();
  } else if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    const auto slash = s.find('/');
    if (slash == std::string::npos) {
      v = parse_real_text(s, path);
    } else {
      const double num = parse_real_text(std::string_view(s).substr(0, slash), path);
      const double den = parse_real_text(std::string_view(s).substr(slash + 1), path);
      if (den == 0.0) throw ParseError(path, "zero denominator");
      v = num / den;
    }
  } else {
    throw ParseError(path, "expected a number or a \"p/q\" string");
  }
  if (!std::isfinite(v)) throw ParseError(path, "value is not finite");
  return v;
}

double read_positive(const json& j, const std::string& path) {
  const double v = read_real(j, path);
  if (!(v > 0.0)) throw ParseError(path, "must be positive");
  return v;
}

Matrix read_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ParseError(path, "expected a nonempty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw ParseError(index_path(path, 0), "expected an array");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = index_path(path, r);
    if (!j[r].is_array()) throw ParseError(rp, "expected an array");
    if (j[r].size() != cols) {
      throw ParseError(rp, "row has " + std::to_string(j[r].size()) +
                               " entries, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          read_real(j[r][c], index_path(rp, c));
    }
  }
  return m;
}

Matrix read_matrix(const json& j, const std::string& path, Eigen::Index rows,
                   Eigen::Index cols) {
  Matrix m = read_matrix(j, path);
  if (m.rows() != rows || m.cols() != cols) {
    throw ParseError(path, "expected " + dims(rows, cols) + ", got " +
                               dims(m.rows(), m.cols()));
  }
  return m;
}

Vector read_vector(const json& j, const std::string& path, Eigen::Index size) {
  if (!j.is_array()) throw ParseError(path, "expected an array");
  if (static_cast<Eigen::Index>(j.size()) != size) {
    throw ParseError(path, "expected " + std::to_string(size) + " entries, got " +
                               std::to_string(j.size()));
  }
  Vector v(size);
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = read_real(j[i], index_path(path, i));
  }
  return v;
}

int read_count(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v <= 0 || v > 1'000'000) throw ParseError(path, "out of range");
  return static_cast<int>(v);
}

std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path, "expected a string");
  return j.get<std::string>();
}

template <typename T>
T rethrow_as_parse(const std::string& path, auto&& fn) {
  try {
    return fn();
  } catch (const InvalidInput& e) {
    throw ParseError(path, e.what());
  }
}

}  // namespace

Vector Scenario::initial_outputs() const {
  const int l = system.l();
  Vector y(static_cast<Eigen::Index>(initial_states.size()) * l);
  for (std::size_t m = 0; m < initial_states.size(); ++m) {
    y.segment(static_cast<Eigen::Index>(m) * l, l) = system.C() * initial_states[m];
  }
  return y;
}

void refresh_bounds(Scenario& s) {
  if (s.bounds_from_file) return;
  std::vector<std::vector<std::size_t>> windows;
  if (s.schedule.mode == TopologyMode::jointly_connected) {
    // One window per cycle of the visiting order.
    std::vector<std::size_t> w(s.schedule.order.begin(), s.schedule.order.end());
    std::sort(w.begin(), w.end());
    w.erase(std::unique(w.begin(), w.end()), w.end());
    windows.push_back(std::move(w));
  }
  std::vector<Topology> used;
  std::map<std::size_t, std::size_t> remap;
  for (std::size_t idx : s.schedule.order) {
    if (remap.emplace(idx, used.size()).second) used.push_back(s.topologies[idx]);
  }
  for (auto& w : windows) {
    for (auto& idx : w) idx = remap.at(idx);
  }
  s.certificate.bounds = spectral_bounds(used, s.schedule.mode, windows);
}

Scenario parse_scenario_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("<document>", e.what());
  }
  if (!doc.is_object()) throw ParseError("<root>", "expected an object");

  std::string name = doc.contains("name") ? read_string(doc["name"], "name") : "scenario";

  const json& sys = require(doc, "", "system");
  const Matrix e = read_matrix(require(sys, "system", "E"), "system.E");
  if (e.rows() != e.cols()) throw ParseError("system.E", "must be square");
  const Eigen::Index n = e.rows();
  const Matrix a = read_matrix(require(sys, "system", "A"), "system.A", n, n);
  const Matrix b = read_matrix(require(sys, "system", "B"), "system.B");
  if (b.rows() != n) throw ParseError("system.B", "expected " + std::to_string(n) + " rows");
  const Matrix c = read_matrix(require(sys, "system", "C"), "system.C");
  if (c.cols() != n) throw ParseError("system.C", "expected " + std::to_string(n) + " columns");
  const Eigen::Index k = b.cols();

  const json& dec = require(doc, "", "decomposition");
  const Matrix u_o = read_matrix(require(dec, "decomposition", "U_o"), "decomposition.U_o", n, n);
  const int h = read_count(require(dec, "decomposition", "h"), "decomposition.h");
  if (h > n) throw ParseError("decomposition.h", "exceeds n");

  const json& topo = require(doc, "", "topologies");
  if (!topo.is_array() || topo.empty()) throw ParseError("topologies", "expected a nonempty array");
  std::vector<std::string> topo_names;
  std::vector<Topology> topologies;
  std::map<std::string, std::size_t> by_name;
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const std::string tp = index_path("topologies", i);
    const std::string tname = read_string(require(topo[i], tp, "name"), tp + ".name");
    const int agents = read_count(require(topo[i], tp, "agents"), tp + ".agents");
    const json& edges = require(topo[i], tp, "edges");
    if (!edges.is_array()) throw ParseError(tp + ".edges", "expected an array");
    std::vector<Edge> list;
    for (std::size_t q = 0; q < edges.size(); ++q) {
      const std::string ep = index_path(tp + ".edges", q);
      const json& ed = edges[q];
      if (!ed.is_array() || ed.size() < 2 || ed.size() > 3) {
        throw ParseError(ep, "expected [i, j] or [i, j, weight]");
      }
      Edge edge;
      edge.i = read_count(ed[0], index_path(ep, 0)) - 1;
      edge.j = read_count(ed[1], index_path(ep, 1)) - 1;
      if (ed.size() == 3) edge.weight = read_positive(ed[2], index_path(ep, 2));
      list.push_back(edge);
    }
    if (!by_name.emplace(tname, i).second) {
      throw ParseError(tp + ".name", "duplicate topology name '" + tname + "'");
    }
    topo_names.push_back(tname);
    topologies.push_back(rethrow_as_parse<Topology>(
        tp, [&] { return Topology(agents, std::move(list)); }));
  }
  const int agents = topologies.front().agent_count();
  for (std::size_t i = 0; i < topologies.size(); ++i) {
    if (topologies[i].agent_count() != agents) {
      throw ParseError(index_path("topologies", i) + ".agents",
                       "all topologies must have the same agent count");
    }
  }

  const json& simj = require(doc, "", "sim");
  SimSettings sim;
  sim.dt = read_positive(require(simj, "sim", "dt"), "sim.dt");
  sim.horizon = read_positive(require(simj, "sim", "horizon"), "sim.horizon");
  sim.hbar = simj.contains("hbar") ? read_positive(simj["hbar"], "sim.hbar") : sim.horizon;
  if (sim.hbar > sim.horizon) throw ParseError("sim.hbar", "exceeds sim.horizon");

  const json& sch = require(doc, "", "schedule");
  ScheduleSpec spec;
  const std::string kind = read_string(require(sch, "schedule", "kind"), "schedule.kind");
  if (kind == "cyclic") {
    spec.kind = ScheduleKind::cyclic;
  } else if (kind == "random") {
    spec.kind = ScheduleKind::random;
  } else {
    throw ParseError("schedule.kind", "expected \"cyclic\" or \"random\"");
  }
  const std::string mode = read_string(require(sch, "schedule", "mode"), "schedule.mode");
  if (mode == "switching_connected") {
    spec.mode = TopologyMode::switching_connected;
  } else if (mode == "jointly_connected") {
    spec.mode = TopologyMode::jointly_connected;
  } else {
    throw ParseError("schedule.mode",
                     "expected \"switching_connected\" or \"jointly_connected\"");
  }
  const json& order = require(sch, "schedule", "order");
  if (!order.is_array() || order.empty()) throw ParseError("schedule.order", "expected a nonempty array");
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::string op = index_path("schedule.order", i);
    const std::string tname = read_string(order[i], op);
    const auto it = by_name.find(tname);
    if (it == by_name.end()) throw ParseError(op, "unknown topology '" + tname + "'");
    spec.order.push_back(it->second);
  }
  spec.dwell = read_positive(require(sch, "schedule", "dwell"), "schedule.dwell");
  if (sch.contains("dwell_max")) {
    spec.dwell_max = read_positive(sch["dwell_max"], "schedule.dwell_max");
    if (*spec.dwell_max < spec.dwell) throw ParseError("schedule.dwell_max", "smaller than dwell");
  }
  spec.horizon = sim.horizon;
  if (spec.horizon < spec.dwell) throw ParseError("sim.horizon", "shorter than schedule.dwell");
  if (spec.kind == ScheduleKind::random && spec.mode == TopologyMode::jointly_connected) {
    throw ParseError("schedule.kind", "jointly_connected mode needs a cyclic schedule");
  }

  const json& cert = require(doc, "", "certificate");
  DesignCertificate dc;
  const json& th = require(cert, "certificate", "theorem");
  if (!th.is_number_integer() || (th.get<int>() != 2 && th.get<int>() != 3)) {
    throw ParseError("certificate.theorem", "expected 2 or 3");
  }
  dc.theorem = th.get<int>() == 2 ? Theorem::two : Theorem::three;
  dc.R_x = read_matrix(require(cert, "certificate", "R_x"), "certificate.R_x", h, h);
  dc.R_z = read_matrix(require(cert, "certificate", "R_z"), "certificate.R_z", h, h);
  dc.M = read_matrix(require(cert, "certificate", "M"), "certificate.M", k, k);
  dc.J_e_star = read_positive(require(cert, "certificate", "J_e_star"), "certificate.J_e_star");
  bool bounds_from_file = false;
  if (cert.contains("lambda_bounds")) {
    const Vector lb = read_vector(cert["lambda_bounds"], "certificate.lambda_bounds", 2);
    if (!(lb(0) > 0.0 && lb(1) >= lb(0))) {
      throw ParseError("certificate.lambda_bounds", "need 0 < min <= max");
    }
    dc.bounds = {lb(0), lb(1)};
    bounds_from_file = true;
  }

  const json& init = require(doc, "", "initial_states");
  if (!init.is_array() || init.empty()) throw ParseError("initial_states", "expected a nonempty array");
  if (static_cast<int>(init.size()) != agents) {
    throw ParseError("initial_states", "expected " + std::to_string(agents) +
                                           " agents (from topologies), got " +
                                           std::to_string(init.size()));
  }
  std::vector<Vector> x0;
  for (std::size_t i = 0; i < init.size(); ++i) {
    x0.push_back(read_vector(init[i], index_path("initial_states", i), n));
  }

  std::optional<std::uint64_t> seed;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ParseError("seed", "expected a nonnegative integer");
    seed = doc["seed"].get<std::uint64_t>();
  }

  Scenario s{std::move(name),
             rethrow_as_parse<DescriptorSystem>("system", [&] { return DescriptorSystem(e, a, b, c); }),
             u_o,
             h,
             std::move(topo_names),
             std::move(topologies),
             std::move(spec),
             std::move(dc),
             bounds_from_file,
             std::move(x0),
             sim,
             seed};
  if (!bounds_from_file) {
    try {
      refresh_bounds(s);
    } catch (const ModeViolation& ex) {
      throw ParseError("schedule.mode", ex.what());
    }
  }
  return s;
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

Scenario canned_scenario(std::string_view name) {
  return parse_scenario_text(canned_scenario_text(name));
}

}  // namespace lbcon
