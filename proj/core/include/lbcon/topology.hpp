#pragma once

// Undirected weighted communication graphs, their Laplacians and spectra,
// and piecewise-constant switching schedules with a minimum dwell time.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lbcon/numerics.hpp"

namespace lbcon {

inline constexpr double kTolConn = 1e-8;

struct Edge {
  int i = 0;  // 0-based agent indices, i != j
  int j = 0;
  double weight = 1.0;
};

class Topology {
 public:
  // Rejects N = 0, self-loops, out-of-range endpoints, nonpositive weights
  // and repeated pairs.
  Topology(int agent_count, std::vector<Edge> edges);

  int agent_count() const { return agent_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  Matrix laplacian_matrix() const;

 private:
  int agent_count_;
  std::vector<Edge> edges_;
};

struct LaplacianReport {
  Matrix L;
  std::vector<double> eigenvalues;  // ascending
  bool connected = false;
  double lambda2 = 0.0;
  double lambdaN = 0.0;
};

LaplacianReport laplacian(const Topology& t);
// Same report for an arbitrary Laplacian (e.g. a window sum).
LaplacianReport analyze_laplacian(const Matrix& l);

enum class TopologyMode { switching_connected, jointly_connected };

struct SpectralBounds {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

// switching_connected: lambda_min = min lambda_2, lambda_max = max lambda_N,
// every member must be connected (ModeViolation otherwise).
// jointly_connected: bounds range over the nonzero eigenvalues of every member
// Laplacian and of every window-union Laplacian. `windows` lists member
// indices per window; empty means one window holding all members. Joint
// connectivity itself is not enforced here (see check_jointly_connected).
SpectralBounds spectral_bounds(
    std::span<const Topology> topologies, TopologyMode mode,
    std::span<const std::vector<std::size_t>> windows = {});

struct JointConnectivity {
  bool connected = false;
  LaplacianReport union_report;
  explicit operator bool() const { return connected; }
};

// Sums the member Laplacians and tests the union for connectivity.
JointConnectivity check_jointly_connected(std::span<const Topology> window);

enum class ScheduleKind { cyclic, random };

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::cyclic;
  TopologyMode mode = TopologyMode::switching_connected;
  // cyclic: visiting order; random: pool drawn from uniformly.
  std::vector<std::size_t> order;
  double dwell = 0.0;  // T_d [s]
  // random only; defaults to 3 T_d.
  std::optional<double> dwell_max;
  double horizon = 0.0;  // [s]
};

struct ScheduleEntry {
  double start = 0.0;
  std::size_t topology = 0;
};

class SwitchingSchedule {
 public:
  // Validates: first start is 0, starts strictly increasing and below the
  // horizon, consecutive gaps >= dwell, window starts (if any) are entry
  // starts.
  SwitchingSchedule(std::vector<ScheduleEntry> entries, double dwell,
                    double horizon, TopologyMode mode,
                    std::vector<double> window_starts = {});

  const std::vector<ScheduleEntry>& entries() const { return entries_; }
  double dwell() const { return dwell_; }
  double horizon() const { return horizon_; }
  TopologyMode mode() const { return mode_; }
  // Joint-connectivity window boundaries t_m (jointly_connected only).
  const std::vector<double>& window_starts() const { return window_starts_; }

  // Distinct member indices of each complete window.
  std::vector<std::vector<std::size_t>> window_members() const;

 private:
  std::vector<ScheduleEntry> entries_;
  double dwell_;
  double horizon_;
  TopologyMode mode_;
  std::vector<double> window_starts_;
};

// Deterministic for fixed (spec, seed). Random kind requires a seed; the
// jointly_connected mode requires the cyclic kind (one window per cycle).
SwitchingSchedule build_schedule(const ScheduleSpec& spec,
                                 std::optional<std::uint64_t> seed = {});

// Topology of the last entry with start <= t; intervals are right-open.
std::size_t topology_at(const SwitchingSchedule& s, double t);

}  // namespace lbcon
