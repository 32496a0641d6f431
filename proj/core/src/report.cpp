#include "lbcon/report.hpp"

#include <charconv>
#include <fstream>

#include "lbcon/errors.hpp"

namespace lbcon {

namespace {

std::string format_matrix(const Matrix& m) {
  std::string out = "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r > 0) out += "; ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ' ';
      out += format_double(m(r, c));
    }
  }
  return out + "]";
}

const char* verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string emit_kv(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    if (k.empty() || k.find_first_of("=\n") != std::string::npos) {
      throw InvalidInput("emit_kv: bad key '" + k + "'");
    }
    if (v.find('\n') != std::string::npos) {
      throw InvalidInput("emit_kv: value for '" + k + "' contains a newline");
    }
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

KeyValues parse_kv(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ParseError("line " + std::to_string(line_no), "expected key=value");
    }
    kv.emplace_back(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues report_fields(const RunReport& r) {
  KeyValues kv;
  kv.emplace_back("scenario", r.scenario);
  kv.emplace_back("command", std::string(command_name(r.command)));
  kv.emplace_back("theorem", r.theorem == Theorem::two ? "2" : "3");
  kv.emplace_back("decomposition.block_residual", format_double(r.block_residual));
  kv.emplace_back("bounds.lambda_min", format_double(r.bounds.lambda_min));
  kv.emplace_back("bounds.lambda_max", format_double(r.bounds.lambda_max));
  kv.emplace_back("gains.K_u", format_matrix(r.gains.K_u));
  kv.emplace_back("gains.K_z", format_matrix(r.gains.K_z));
  kv.emplace_back("gains.lambda_min_used", format_double(r.gains.lambda_min_used));
  for (const auto& c : r.conditions.conditions) {
    kv.emplace_back("condition." + c.id + ".pass", verdict(c.pass));
    kv.emplace_back("condition." + c.id + ".margin", format_double(c.margin));
  }
  if (r.sim) {
    kv.emplace_back("sim.dt", format_double(r.sim->dt));
    kv.emplace_back("sim.horizon", format_double(r.sim->horizon));
    kv.emplace_back("sim.hbar", format_double(r.sim->hbar));
    kv.emplace_back("sim.switches", std::to_string(r.sim->switches));
    kv.emplace_back("sim.disagreement_initial", format_double(r.sim->disagreement_initial));
    kv.emplace_back("sim.disagreement_final", format_double(r.sim->disagreement_final));
    kv.emplace_back("energy.J_e", format_double(r.sim->J_e));
    kv.emplace_back("energy.J_e_star", format_double(r.J_e_star));
    kv.emplace_back("energy.monotone", r.sim->energy_monotone ? "true" : "false");
    kv.emplace_back("csv.trajectory", r.sim->csv.string());
  }
  kv.emplace_back("overall", verdict(r.overall()));
  return kv;
}

std::string format_text(const RunReport& r) {
  std::string out;
  const auto line = [&](const std::string& a, const std::string& b) {
    out += a + "  " + b + "\n";
  };
  line("scenario", r.scenario);
  line("command", std::string(command_name(r.command)));
  line("theorem", r.theorem == Theorem::two ? "2" : "3");
  line("lambda", "[" + format_double(r.bounds.lambda_min) + ", " +
                     format_double(r.bounds.lambda_max) + "]");
  line("block_residual", format_double(r.block_residual));
  line("K_u", format_matrix(r.gains.K_u));
  line("K_z", format_matrix(r.gains.K_z));
  for (const auto& c : r.conditions.conditions) {
    out += c.id + "  " + verdict(c.pass) + "  margin=" + format_double(c.margin) + "\n";
  }
  if (r.sim) {
    line("dt", format_double(r.sim->dt));
    line("horizon", format_double(r.sim->horizon));
    line("switches", std::to_string(r.sim->switches));
    line("disagreement(0)", format_double(r.sim->disagreement_initial));
    line("disagreement(end)", format_double(r.sim->disagreement_final));
    line("J_e(hbar)", format_double(r.sim->J_e) + " (hbar=" +
                          format_double(r.sim->hbar) + ", J_e*=" +
                          format_double(r.J_e_star) + ")");
    if (!r.sim->csv.empty()) line("csv", r.sim->csv.string());
  }
  line("overall", verdict(r.overall()));
  return out;
}

std::string format_kv(const RunReport& r) { return emit_kv(report_fields(r)); }

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

void write_reports(const RunReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file_atomic(dir / "report.txt", format_text(r));
  write_file_atomic(dir / "report.kv", format_kv(r));
}

}  // namespace lbcon
