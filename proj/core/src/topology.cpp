#include "lbcon/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <utility>

#include "lbcon/errors.hpp"

namespace lbcon {

namespace {

// Uniform double in [0, 1) from the top 53 bits; std::mt19937_64 output is
// fixed by the standard, the distribution objects are not.
double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void collect_nonzero(const LaplacianReport& r, double& lo, double& hi) {
  for (double ev : r.eigenvalues) {
    if (ev > kTolConn) {
      lo = std::min(lo, ev);
      hi = std::max(hi, ev);
    }
  }
}

}  // namespace

Topology::Topology(int agent_count, std::vector<Edge> edges)
    : agent_count_(agent_count), edges_(std::move(edges)) {
  if (agent_count_ <= 0) {
    throw InvalidInput("Topology: agent count must be positive");
  }
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= agent_count_ || e.j >= agent_count_) {
      throw InvalidInput("Topology: edge (" + std::to_string(e.i) + ", " +
                         std::to_string(e.j) + ") out of range");
    }
    if (e.i == e.j) {
      throw InvalidInput("Topology: self-loop at agent " + std::to_string(e.i));
    }
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw InvalidInput("Topology: edge weights must be positive and finite");
    }
    if (!seen.insert(std::minmax(e.i, e.j)).second) {
      throw InvalidInput("Topology: repeated edge (" + std::to_string(e.i) +
                         ", " + std::to_string(e.j) + ")");
    }
  }
}

Matrix Topology::laplacian_matrix() const {
  Matrix l = Matrix::Zero(agent_count_, agent_count_);
  for (const Edge& e : edges_) {
    l(e.i, e.j) -= e.weight;
    l(e.j, e.i) -= e.weight;
    l(e.i, e.i) += e.weight;
    l(e.j, e.j) += e.weight;
  }
  return l;
}

LaplacianReport analyze_laplacian(const Matrix& l) {
  if (l.rows() == 0) throw InvalidInput("laplacian: N must be positive");
  LaplacianReport r;
  r.L = l;
  r.eigenvalues = sym_eigenvalues(l).eigenvalues;
  r.lambda2 = r.eigenvalues.size() > 1 ? r.eigenvalues[1] : 0.0;
  r.lambdaN = r.eigenvalues.back();
  // A single agent is trivially connected.
  r.connected = r.eigenvalues.size() == 1 || r.lambda2 > kTolConn;
  return r;
}

LaplacianReport laplacian(const Topology& t) {
  return analyze_laplacian(t.laplacian_matrix());
}

JointConnectivity check_jointly_connected(std::span<const Topology> window) {
  if (window.empty()) {
    throw InvalidInput("check_jointly_connected: empty window");
  }
  const int n = window.front().agent_count();
  Matrix sum = Matrix::Zero(n, n);
  for (const Topology& t : window) {
    if (t.agent_count() != n) {
      throw InvalidInput("check_jointly_connected: topologies disagree on N");
    }
    sum += t.laplacian_matrix();
  }
  JointConnectivity out;
  out.union_report = analyze_laplacian(sum);
  out.connected = out.union_report.connected;
  return out;
}

SpectralBounds spectral_bounds(std::span<const Topology> topologies,
                               TopologyMode mode,
                               std::span<const std::vector<std::size_t>> windows) {
  if (topologies.empty()) {
    throw InvalidInput("spectral_bounds: empty topology set");
  }
  const int n = topologies.front().agent_count();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < topologies.size(); ++i) {
    if (topologies[i].agent_count() != n) {
      throw InvalidInput("spectral_bounds: topologies disagree on N");
    }
    const LaplacianReport r = laplacian(topologies[i]);
    if (mode == TopologyMode::switching_connected && !r.connected) {
      throw ModeViolation("spectral_bounds: topology " + std::to_string(i) +
                          " is disconnected in switching_connected mode");
    }
    collect_nonzero(r, lo, hi);
  }
  if (mode == TopologyMode::jointly_connected) {
    std::vector<std::vector<std::size_t>> all;
    if (windows.empty()) {
      all.emplace_back();
      for (std::size_t i = 0; i < topologies.size(); ++i) all.back().push_back(i);
      windows = all;
    }
    for (const auto& w : windows) {
      std::vector<Topology> members;
      for (std::size_t idx : w) {
        if (idx >= topologies.size()) {
          throw InvalidInput("spectral_bounds: window member out of range");
        }
        members.push_back(topologies[idx]);
      }
      collect_nonzero(check_jointly_connected(members).union_report, lo, hi);
    }
  }
  if (!(hi > 0.0)) {
    throw ModeViolation("spectral_bounds: no nonzero Laplacian eigenvalue");
  }
  return {lo, hi};
}

SwitchingSchedule::SwitchingSchedule(std::vector<ScheduleEntry> entries,
                                     double dwell, double horizon,
                                     TopologyMode mode,
                                     std::vector<double> window_starts)
    : entries_(std::move(entries)),
      dwell_(dwell),
      horizon_(horizon),
      mode_(mode),
      window_starts_(std::move(window_starts)) {
  if (!(dwell_ > 0.0) || !std::isfinite(dwell_)) {
    throw InvalidInput("SwitchingSchedule: dwell must be positive");
  }
  if (!(horizon_ >= dwell_) || !std::isfinite(horizon_)) {
    throw InvalidInput("SwitchingSchedule: horizon must be finite and >= dwell");
  }
  if (entries_.empty() || entries_.front().start != 0.0) {
    throw InvalidInput("SwitchingSchedule: first entry must start at t = 0");
  }
  // Relative slack so that multiples of dwell built by repeated addition pass.
  const double slack = 1e-12 * horizon_;
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    const double gap = entries_[i].start - entries_[i - 1].start;
    if (!(gap >= dwell_ - slack)) {
      throw InvalidInput("SwitchingSchedule: gap before entry " +
                         std::to_string(i) + " is shorter than the dwell time");
    }
  }
  if (entries_.back().start >= horizon_) {
    throw InvalidInput("SwitchingSchedule: entry starts at or after the horizon");
  }
  for (double w : window_starts_) {
    const bool found = std::any_of(entries_.begin(), entries_.end(),
                                   [&](const ScheduleEntry& e) { return e.start == w; });
    if (!found) {
      throw InvalidInput("SwitchingSchedule: window start is not an entry start");
    }
  }
  if (!std::is_sorted(window_starts_.begin(), window_starts_.end())) {
    throw InvalidInput("SwitchingSchedule: window starts must be increasing");
  }
}

std::vector<std::vector<std::size_t>> SwitchingSchedule::window_members() const {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t w = 0; w + 1 < window_starts_.size(); ++w) {
    std::set<std::size_t> ids;
    for (const ScheduleEntry& e : entries_) {
      if (e.start >= window_starts_[w] && e.start < window_starts_[w + 1]) {
        ids.insert(e.topology);
      }
    }
    out.emplace_back(ids.begin(), ids.end());
  }
  return out;
}

SwitchingSchedule build_schedule(const ScheduleSpec& spec,
                                 std::optional<std::uint64_t> seed) {
  if (spec.order.empty()) {
    throw InvalidInput("build_schedule: no topologies named");
  }
  if (!(spec.dwell > 0.0) || !std::isfinite(spec.dwell)) {
    throw InvalidInput("build_schedule: dwell must be positive");
  }
  if (!(spec.horizon >= spec.dwell) || !std::isfinite(spec.horizon)) {
    throw InvalidInput("build_schedule: horizon must be >= dwell");
  }
  std::vector<ScheduleEntry> entries;
  std::vector<double> windows;
  if (spec.kind == ScheduleKind::cyclic) {
    const std::size_t cycle = spec.order.size();
    // Integer step count keeps start times exact multiples of dwell.
    for (std::size_t i = 0;; ++i) {
      const double start = static_cast<double>(i) * spec.dwell;
      if (start >= spec.horizon) break;
      entries.push_back({start, spec.order[i % cycle]});
      if (spec.mode == TopologyMode::jointly_connected && i % cycle == 0) {
        windows.push_back(start);
      }
    }
  } else {
    if (spec.mode == TopologyMode::jointly_connected) {
      throw InvalidInput("build_schedule: jointly_connected mode needs a cyclic schedule");
    }
    if (!seed) throw InvalidInput("build_schedule: random schedule requires a seed");
    const double dwell_max = spec.dwell_max.value_or(3.0 * spec.dwell);
    if (!(dwell_max >= spec.dwell)) {
      throw InvalidInput("build_schedule: dwell_max must be >= dwell");
    }
    std::mt19937_64 rng(*seed);
    const auto pool = static_cast<double>(spec.order.size());
    double start = 0.0;
    while (start < spec.horizon) {
      const auto pick = std::min(static_cast<std::size_t>(unit_draw(rng) * pool),
                                 spec.order.size() - 1);
      entries.push_back({start, spec.order[pick]});
      start += spec.dwell + (dwell_max - spec.dwell) * unit_draw(rng);
    }
  }
  return SwitchingSchedule(std::move(entries), spec.dwell, spec.horizon,
                           spec.mode, std::move(windows));
}

std::size_t topology_at(const SwitchingSchedule& s, double t) {
  if (!(t >= 0.0) || !(t < s.horizon())) {
    throw InvalidInput("topology_at: t = " + std::to_string(t) +
                       " outside [0, horizon)");
  }
  const auto& entries = s.entries();
  const auto it = std::upper_bound(
      entries.begin(), entries.end(), t,
      [](double value, const ScheduleEntry& e) { return value < e.start; });
  return std::prev(it)->topology;
}

}  // namespace lbcon
