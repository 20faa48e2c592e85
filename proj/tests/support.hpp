#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include "evacsim/scenario.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace evacsim::testing {

inline std::string blueprint(const std::vector<std::string>& rows, const std::string& meta = R"({"cell_size": 0.5})") {
    std::string text;
    for (const auto& r : rows) text += r + "\n";
    return text + "---\n" + meta + "\n";
}

inline GridMap make_map(const std::vector<std::string>& rows, const std::string& meta = R"({"cell_size": 0.5})") {
    return parse_blueprint(blueprint(rows, meta));
}

inline std::string scenario_path(const std::string& name) { return std::string(EVACSIM_SCENARIO_DIR) + "/" + name; }
inline std::string fixture_path(const std::string& name) { return std::string(EVACSIM_FIXTURE_DIR) + "/" + name; }

/// Shortest-path distances by repeated edge relaxation (Bellman-Ford) over an
/// explicitly enumerated edge list. Shares no code with the library search.
inline std::vector<double> oracle_distances(const std::vector<std::string>& rows, double cs,
                                            const std::vector<std::pair<int, int>>& goals) {
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows[0].size());
    // text row r is y = h - 1 - r
    auto open = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= w || y >= h) return false;
        return rows[h - 1 - y][x] != '#';
    };
    struct Edge {
        int a, b;
        double cost;
    };
    std::vector<Edge> edges;
    const double diag = cs * std::sqrt(2.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!open(x, y)) continue;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (!open(x + dx, y + dy)) continue;
                    if (dx != 0 && dy != 0 && !(open(x + dx, y) && open(x, y + dy))) continue;
                    edges.push_back({y * w + x, (y + dy) * w + (x + dx), (dx != 0 && dy != 0) ? diag : cs});
                }
            }
        }
    }
    std::vector<double> dist(static_cast<std::size_t>(w * h), std::numeric_limits<double>::infinity());
    for (auto [x, y] : goals) dist[y * w + x] = 0.0;
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& e : edges) {
            if (dist[e.a] + e.cost < dist[e.b]) {
                dist[e.b] = dist[e.a] + e.cost;
                changed = true;
            }
        }
    }
    return dist;
}

/// Random 20x20 map: boundary walls, random interior walls, an exit on the
/// boundary and a spawn cell. Returns the rows.
inline std::vector<std::string> random_rows(std::mt19937& gen, int w = 20, int h = 20, double wall_p = 0.3) {
    std::bernoulli_distribution wall(wall_p);
    std::vector<std::string> rows(static_cast<std::size_t>(h), std::string(static_cast<std::size_t>(w), '#'));
    for (int r = 1; r < h - 1; ++r)
        for (int c = 1; c < w - 1; ++c) rows[r][c] = wall(gen) ? '#' : '.';
    std::uniform_int_distribution<int> col(1, w - 2), row(1, h - 2);
    rows[0][col(gen)] = 'E';
    rows[h - 1][col(gen)] = 'E';
    rows[row(gen)][col(gen)] = 'P';
    return rows;
}

}  // namespace evacsim::testing
