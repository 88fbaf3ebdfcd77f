#pragma once

// Comparison methods: constraint regime (CWC, MJ, CS, D) crossed with the
// navigation strategy (target-direction tracking or a static A* plan).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mrscwc/common.hpp"
#include "mrscwc/control.hpp"
#include "mrscwc/dynamics.hpp"
#include "mrscwc/terrain.hpp"

namespace mrscwc {

enum class ConstraintType { CWC, MJ, CS, D };
enum class Navigation { TDT, AStar };

struct MethodSpec {
    ConstraintType constraint = ConstraintType::CWC;
    Navigation navigation = Navigation::TDT;
    friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

// Table order.
inline constexpr std::array<MethodSpec, 8> kAllMethods{{
    {ConstraintType::CWC, Navigation::TDT},
    {ConstraintType::CWC, Navigation::AStar},
    {ConstraintType::MJ, Navigation::TDT},
    {ConstraintType::MJ, Navigation::AStar},
    {ConstraintType::CS, Navigation::TDT},
    {ConstraintType::CS, Navigation::AStar},
    {ConstraintType::D, Navigation::TDT},
    {ConstraintType::D, Navigation::AStar},
}};

inline std::string to_string(MethodSpec m) {
    std::string s;
    switch (m.constraint) {
        case ConstraintType::CWC: s = "cwc"; break;
        case ConstraintType::MJ: s = "mj"; break;
        case ConstraintType::CS: s = "cs"; break;
        case ConstraintType::D: s = "d"; break;
    }
    return s + (m.navigation == Navigation::TDT ? "-tdt" : "-astar");
}

inline std::string display_name(MethodSpec m) {
    std::string s;
    switch (m.constraint) {
        case ConstraintType::CWC: s = "MRS-CWC"; break;
        case ConstraintType::MJ: s = "MRS-MJ"; break;
        case ConstraintType::CS: s = "MRS-CS"; break;
        case ConstraintType::D: s = "MRS-D"; break;
    }
    return s + (m.navigation == Navigation::TDT ? " + TDT" : " + A*");
}

inline std::string valid_method_names() {
    std::string s;
    for (const auto& m : kAllMethods) {
        if (!s.empty()) s += ", ";
        s += to_string(m);
    }
    return s;
}

inline MethodSpec parse_method(std::string_view name) {
    for (const auto& m : kAllMethods)
        if (to_string(m) == name) return m;
    throw std::invalid_argument("unknown method '" + std::string(name) + "'; valid methods: " +
                                valid_method_names());
}

inline int method_rank(MethodSpec m) {
    for (int i = 0; i < static_cast<int>(kAllMethods.size()); ++i)
        if (kAllMethods[i] == m) return i;
    return static_cast<int>(kAllMethods.size());
}

// ---------------------------------------------------------------------------
// A* over a slope grid

struct SlopeGrid {
    double x0 = 0.0;
    double y0 = 0.0;
    double resolution = 0.25;
    int nx = 0;
    int ny = 0;
    std::vector<double> slope_deg;  // row-major, index = j * nx + i

    int index(int i, int j) const { return j * nx + i; }
    Vec2 node_position(int idx) const { return {x0 + (idx % nx) * resolution, y0 + (idx / nx) * resolution}; }
    double slope(int idx) const { return slope_deg[static_cast<std::size_t>(idx)]; }
    bool inside(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }

    int nearest_node(Vec2 p) const {
        const int i = std::clamp(static_cast<int>(std::lround((p.x - x0) / resolution)), 0, nx - 1);
        const int j = std::clamp(static_cast<int>(std::lround((p.y - y0) / resolution)), 0, ny - 1);
        return index(i, j);
    }
};

inline SlopeGrid make_slope_grid(const TerrainParams& terrain, const Region& region, double resolution) {
    if (!(resolution > 0.0)) throw std::invalid_argument("planner resolution must be positive");
    SlopeGrid g;
    g.x0 = region.x_min;
    g.y0 = region.y_min;
    g.resolution = resolution;
    g.nx = grid_count(region.x_min, region.x_max, resolution);
    g.ny = grid_count(region.y_min, region.y_max, resolution);
    g.slope_deg.resize(static_cast<std::size_t>(g.nx) * g.ny);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            g.slope_deg[g.index(i, j)] = slope_deg_at(terrain, g.x0 + i * resolution, g.y0 + j * resolution);
    return g;
}

struct PlannerWeights {
    double slope_weight = 1.0;   // w_slope
    double tip_weight = 3.0;     // w_tip
    double blocked_slope_deg = 70.0;
};

inline bool is_blocked(double slope_deg, const PlannerWeights& w) { return slope_deg >= w.blocked_slope_deg; }

// Cost of stepping onto a node of the given slope.
inline double edge_cost(double step_length, double slope_deg, const PlannerWeights& w) {
    return step_length *
           (1.0 + w.slope_weight * slope_deg / 30.0 + w.tip_weight * std::max(0.0, slope_deg - 45.0) / 25.0);
}

inline constexpr std::array<std::array<int, 2>, 8> kNeighborOffsets{
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

struct GridPath {
    std::vector<int> nodes;
    double cost = 0.0;
};

// 8-connected A* with a Euclidean heuristic (admissible: every edge
// multiplier is >= 1). Ties are broken by (f, h, node index).
inline std::optional<GridPath> astar_grid(const SlopeGrid& grid, int start, int goal, const PlannerWeights& w) {
    const int n = grid.nx * grid.ny;
    if (start < 0 || start >= n || goal < 0 || goal >= n) throw std::out_of_range("astar_grid: node index");
    if (is_blocked(grid.slope(goal), w)) return std::nullopt;

    const Vec2 goal_pos = grid.node_position(goal);
    auto heuristic = [&](int idx) { return norm(grid.node_position(idx) - goal_pos); };

    std::vector<double> g(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    std::vector<char> closed(static_cast<std::size_t>(n), 0);
    using Entry = std::tuple<double, double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

    g[start] = 0.0;
    open.emplace(heuristic(start), heuristic(start), start);
    while (!open.empty()) {
        const auto [f, h, cur] = open.top();
        open.pop();
        if (closed[cur]) continue;
        closed[cur] = 1;
        if (cur == goal) break;
        const int ci = cur % grid.nx;
        const int cj = cur / grid.nx;
        for (const auto& off : kNeighborOffsets) {
            const int ni = ci + off[0];
            const int nj = cj + off[1];
            if (!grid.inside(ni, nj)) continue;
            const int nb = grid.index(ni, nj);
            if (closed[nb] || is_blocked(grid.slope(nb), w)) continue;
            const double len = (off[0] != 0 && off[1] != 0) ? grid.resolution * std::numbers::sqrt2 : grid.resolution;
            const double cand = g[cur] + edge_cost(len, grid.slope(nb), w);
            if (cand < g[nb]) {
                g[nb] = cand;
                parent[nb] = cur;
                const double hn = heuristic(nb);
                open.emplace(cand + hn, hn, nb);
            }
        }
    }
    if (!closed[goal]) return std::nullopt;

    GridPath path;
    path.cost = g[goal];
    for (int v = goal; v != -1; v = parent[v]) path.nodes.push_back(v);
    std::reverse(path.nodes.begin(), path.nodes.end());
    return path;
}

struct PlannedPath {
    std::vector<Vec2> waypoints;
    double total_cost = 0.0;
    double grid_resolution = 0.25;
};

inline std::optional<PlannedPath> plan_astar(const TerrainParams& terrain, Vec2 start, Vec2 goal, double resolution,
                                             const PlannerWeights& w = {}, const Region& region = kNavigationRegion) {
    if (!region.contains(start) || !region.contains(goal))
        throw std::invalid_argument("plan_astar: start and goal must lie inside the navigation region");
    const SlopeGrid grid = make_slope_grid(terrain, region, resolution);
    const auto gp = astar_grid(grid, grid.nearest_node(start), grid.nearest_node(goal), w);
    if (!gp) return std::nullopt;
    PlannedPath p;
    p.total_cost = gp->cost;
    p.grid_resolution = resolution;
    p.waypoints.reserve(gp->nodes.size());
    for (int v : gp->nodes) p.waypoints.push_back(grid.node_position(v));
    return p;
}

// Pure-pursuit style leader reference along a static path. Progress only
// moves forward.
class PathTracker {
public:
    PathTracker(PlannedPath path, Vec2 goal, double lookahead)
        : path_(std::move(path)), goal_(goal), lookahead_(lookahead) {
        if (path_.waypoints.empty()) throw std::invalid_argument("PathTracker: empty path");
        if (!(lookahead_ > 0.0)) throw std::invalid_argument("PathTracker: lookahead must be positive");
        window_ = static_cast<std::size_t>(std::ceil(2.0 * lookahead_ / path_.grid_resolution)) + 2;
    }

    std::size_t progress() const { return progress_; }
    const PlannedPath& path() const { return path_; }

    double reference(Vec2 leader) {
        const auto& wp = path_.waypoints;
        const std::size_t last = wp.size() - 1;

        // Closest waypoint within a forward window.
        std::size_t best = progress_;
        double best_d = norm(wp[progress_] - leader);
        const std::size_t end = std::min(last, progress_ + window_);
        for (std::size_t k = progress_ + 1; k <= end; ++k) {
            const double d = norm(wp[k] - leader);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        progress_ = best;

        if (progress_ == last) return bearing(leader, goal_);

        std::size_t aim = progress_;
        for (std::size_t k = progress_; k <= last; ++k) {
            if (norm(wp[k] - leader) <= lookahead_) aim = k;
            else if (k > progress_ + window_) break;
        }
        if (aim == last) return bearing(leader, goal_);
        return bearing(leader, wp[aim]);
    }

private:
    PlannedPath path_;
    Vec2 goal_;
    double lookahead_;
    std::size_t window_ = 0;
    std::size_t progress_ = 0;
};

inline double waypoint_reference(const ChainState& s, PathTracker& tracker) {
    return tracker.reference(s.robots[0].position);
}

// ---------------------------------------------------------------------------
// Delay lines sampled once per control step.

template <typename T>
class DelayLine {
public:
    DelayLine(std::size_t max_delay_steps, T initial) : buf_(max_delay_steps + 1, initial) {}

    void push(const T& v) {
        head_ = (head_ + 1) % buf_.size();
        buf_[head_] = v;
        if (count_ < buf_.size()) ++count_;
    }

    // Value pushed `steps` pushes ago (0 = latest); `fallback(steps_before_start)`
    // supplies values that predate the first push.
    template <typename Fallback>
    T delayed(std::size_t steps, Fallback&& fallback) const {
        if (steps >= buf_.size()) throw std::out_of_range("DelayLine: delay exceeds capacity");
        if (steps >= count_) return fallback(steps - count_ + 1);
        return buf_[(head_ + buf_.size() - steps) % buf_.size()];
    }

private:
    std::vector<T> buf_;
    std::size_t head_ = 0;
    std::size_t count_ = 0;
};

// Follow-the-leader joint setpoints for the motorized-joint chain. The
// leader's commanded yaw rate is integrated into a heading trace theta, and
// robot k should hold the trace value from k spacing-travel-times ago, so
// joint j (robot j to j+1) is commanded to
//   alpha_j = theta(t - j D) - theta(t - (j + 1) D),  D = 2L / v0.
// Using the command rather than the measured heading keeps joint reaction
// torques on the leader from echoing back into the setpoints.
class HeadFollowing {
public:
    HeadFollowing(double spacing_delay, double dt, double initial_heading)
        : dt_(dt),
          delay_steps_(static_cast<std::size_t>(std::lround(spacing_delay / dt))),
          history_(delay_steps_ * kJoints + 1, initial_heading),
          trace_(initial_heading),
          initial_(initial_heading) {}

    std::size_t delay_steps() const { return delay_steps_; }
    double trace() const { return trace_; }

    void record(double commanded_yaw_rate) {
        history_.push(trace_);
        trace_ += commanded_yaw_rate * dt_;
    }

    std::array<double, kJoints> setpoints() const {
        std::array<double, kJoints + 1> psi{};
        for (int k = 0; k <= kJoints; ++k)
            psi[k] = history_.delayed(static_cast<std::size_t>(k) * delay_steps_, [&](std::size_t) { return initial_; });
        std::array<double, kJoints> out{};
        for (int j = 0; j < kJoints; ++j) out[j] = psi[j] - psi[j + 1];
        return out;
    }

private:
    double dt_;
    std::size_t delay_steps_;
    DelayLine<double> history_;
    double trace_;
    double initial_;
};

struct MotorizedJointGains {
    double position_gain = 400.0;  // N m/rad
    double damping = 10.0;         // N m s/rad
};

inline void apply_servo_setpoints(ChainState& s, const std::array<double, kJoints>& setpoints,
                                  const MotorizedJointGains& g) {
    for (int j = 0; j < kJoints; ++j) {
        s.joints[j].yaw_stiffness = g.position_gain;
        s.joints[j].yaw_damping = g.damping;
        s.joints[j].angle_setpoint = setpoints[j];
    }
}

// Follower heading reference consistent with the servoed joint angle.
inline double servo_follower_reference(const ChainState& s, int i, const std::array<double, kJoints>& setpoints) {
    return s.robots[i - 1].heading - setpoints[i - 1];
}

// Virtual links for the discrete system: follower i pursues a point one
// half-link ahead of where robot i-1 was D = 2L/v0 seconds ago.
class VirtualLinks {
public:
    struct Sample {
        Vec2 position;
        double heading = 0.0;
    };

    VirtualLinks(const ChainState& initial, double spacing_delay, double dt, double forward_speed)
        : delay_steps_(static_cast<std::size_t>(std::lround(spacing_delay / dt))), dt_(dt), speed_(forward_speed) {
        for (int i = 0; i < kRobots; ++i) {
            initial_[i] = {initial.robots[i].position, initial.robots[i].heading};
            lines_.emplace_back(delay_steps_, initial_[i]);
        }
    }

    void record(const ChainState& s) {
        for (int i = 0; i < kRobots; ++i) lines_[i].push({s.robots[i].position, s.robots[i].heading});
    }

    Sample delayed(int robot) const {
        return lines_[robot].delayed(delay_steps_, [&](std::size_t before) {
            // Before the trial, robots are taken to have driven straight in.
            const Sample& s0 = initial_[robot];
            const double back = speed_ * dt_ * static_cast<double>(before);
            return Sample{s0.position - back * heading_vector(s0.heading), s0.heading};
        });
    }

    double follower_reference(const ChainState& s, int i, double half_link) const {
        const Sample trail = delayed(i - 1);
        const Vec2 aim = trail.position + half_link * heading_vector(trail.heading);
        return bearing(s.robots[i].position, aim);
    }

private:
    std::size_t delay_steps_;
    double dt_;
    double speed_;
    std::array<Sample, kRobots> initial_{};
    std::vector<DelayLine<Sample>> lines_;
};

}  // namespace mrscwc
