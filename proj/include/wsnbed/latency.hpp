#pragma once

#include "wsnbed/topology.hpp"

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wsnbed {

/// delay = t_base + hops * t_hop + meters * k
struct DelayParams {
    double t_base_ms = 0;
    double t_hop_ms = 0;
    double k_ms_per_m = 0;

    bool valid() const { return t_base_ms >= 0 && t_hop_ms >= 0 && k_ms_per_m >= 0; }
};

inline double delay_for(int hops, double meters, const DelayParams& p) {
    return p.t_base_ms + hops * p.t_hop_ms + meters * p.k_ms_per_m;
}

inline double path_length(const Topology& topo, std::span<const NodeId> path) {
    double meters = 0;
    for (std::size_t i = 1; i < path.size(); ++i) meters += topo.link_length(path[i - 1], path[i]);
    return meters;
}

/// End-to-end delay of a node sequence; a single-node path has not left its source and costs 0.
inline double path_delay(const Topology& topo, std::span<const NodeId> path, const DelayParams& p) {
    if (path.size() < 2) return 0;
    return delay_for(static_cast<int>(path.size() - 1), path_length(topo, path), p);
}

struct CalibrationRow {
    int hops = 0;
    double path_m = 0;
    double delay_ms = 0;
};

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Solves the 3x3 system t_base + hops*t_hop + m*k = delay so each row is reproduced.
inline DelayParams calibrate_delay_params(std::span<const CalibrationRow> rows) {
    if (rows.size() != 3) throw CalibrationError("calibration needs exactly 3 rows");
    std::array<std::array<double, 4>, 3> a{};
    double scale = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        a[i] = {1.0, static_cast<double>(rows[i].hops), rows[i].path_m, rows[i].delay_ms};
        for (int j = 0; j < 3; ++j) scale = std::max(scale, std::abs(a[i][j]));
    }
    // Gaussian elimination with partial pivoting.
    for (std::size_t col = 0; col < 3; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < 3; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) <= 1e-12 * scale) {
            throw CalibrationError("calibration rows are not affinely independent");
        }
        std::swap(a[col], a[pivot]);
        for (std::size_t r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
        }
    }
    DelayParams p{a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]};
    if (!p.valid()) {
        throw CalibrationError("calibration produced a negative delay parameter");
    }
    return p;
}

/// Delay measurements from a 6-node reference deployment: (hops, meters, ms).
inline std::vector<CalibrationRow> reference_delay_rows() {
    return {{1, 5, 170}, {2, 11, 312}, {2, 17, 380}};
}

}  // namespace wsnbed
