#pragma once

#include "evacsim/types.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evacsim {

enum class CellKind : std::uint8_t { Wall, Floor, Door, Exit };

constexpr bool is_walkable(CellKind k) { return k != CellKind::Wall; }

struct SignDef {
    Cell cell;
    Compass pointed = Compass::N;
    double visibility_range = 10.0;  // meters

    Vec2 direction() const { return compass_vector(pointed); }
    friend bool operator==(const SignDef&, const SignDef&) = default;
};

struct ExitDef {
    int id = 0;
    std::vector<Cell> cells;
    friend bool operator==(const ExitDef&, const ExitDef&) = default;
};

/// Named inclusive cell rectangle.
struct Room {
    std::string name;
    Cell lo;
    Cell hi;
    bool start = false;  // the player's predefined start room

    bool contains(const Cell& c) const { return c.x >= lo.x && c.x <= hi.x && c.y >= lo.y && c.y <= hi.y; }
    friend bool operator==(const Room&, const Room&) = default;
};

class ScenarioError : public std::runtime_error {
public:
    enum class Kind { Syntax, NoExit, NoSpawn, BadMetadata, OutOfBounds, Io };

    ScenarioError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline constexpr double kDefaultCellSize = 0.5;

/// Discretized single-floor building. Immutable once constructed; the
/// constructor validates every structural invariant and throws ScenarioError.
class GridMap {
public:
    struct Parts {
        int width = 0;
        int height = 0;
        double cell_size = kDefaultCellSize;
        std::vector<CellKind> cells;  // row-major, index y * width + x
        std::vector<ExitDef> exits;
        std::vector<SignDef> signs;
        std::vector<Room> rooms;
        std::vector<Cell> spawn_cells;
        std::map<std::string, std::string> defaults;  // embedded config overrides
    };

    explicit GridMap(Parts parts);

    int width() const { return p_.width; }
    int height() const { return p_.height; }
    double cell_size() const { return p_.cell_size; }
    const std::vector<CellKind>& cells() const { return p_.cells; }
    const std::vector<ExitDef>& exits() const { return p_.exits; }
    const std::vector<SignDef>& signs() const { return p_.signs; }
    const std::vector<Room>& rooms() const { return p_.rooms; }
    const std::vector<Cell>& spawn_cells() const { return p_.spawn_cells; }
    const std::map<std::string, std::string>& defaults() const { return p_.defaults; }

    bool in_bounds(const Cell& c) const { return c.x >= 0 && c.y >= 0 && c.x < p_.width && c.y < p_.height; }
    std::size_t index(const Cell& c) const { return static_cast<std::size_t>(c.y) * p_.width + c.x; }
    CellKind kind(const Cell& c) const { return p_.cells[index(c)]; }
    bool walkable(const Cell& c) const { return in_bounds(c) && is_walkable(kind(c)); }

    /// Exit id owning the cell, if it is an exit cell.
    std::optional<int> exit_at(const Cell& c) const;
    const ExitDef* find_exit(int id) const;

    const Room* start_room() const;
    const Room* find_room(std::string_view name) const;

    Vec2 center(const Cell& c) const { return {(c.x + 0.5) * p_.cell_size, (c.y + 0.5) * p_.cell_size}; }
    Cell cell_of(const Vec2& p) const;

    /// Whether a one-cell move along `offset` is allowed. Diagonals require both
    /// orthogonal neighbours walkable. `blocked` marks extra impassable cells.
    bool can_step(const Cell& from, const Cell& offset, const MaskLayer* blocked = nullptr) const;

    const Parts& parts() const { return p_; }
    friend bool operator==(const GridMap& a, const GridMap& b);

private:
    Parts p_;
    std::vector<int> exit_index_;  // per cell: exit id or 0
};

GridMap parse_blueprint(std::string_view text);
GridMap load_blueprint(const std::string& path);
std::string serialize_blueprint(const GridMap& map);

/// Optical depth along the supercover ray between cell centres, or nullopt
/// if the ray touches a wall. `smoke` may be null for clear air.
std::optional<double> optical_depth(const GridMap& map, const Cell& from, const Cell& to,
                                    const ScalarLayer* smoke, double opacity_coeff);

/// Clear line of sight: no wall touched and optical depth < 1.
bool line_of_sight(const GridMap& map, const Cell& from, const Cell& to, const ScalarLayer* smoke,
                   double opacity_coeff);

inline bool line_of_sight(const GridMap& map, const Cell& from, const Cell& to) {
    return line_of_sight(map, from, to, nullptr, 0.0);
}

/// One touched cell of a supercover traversal and the ray length inside it (cell units).
struct RaySegment {
    Cell cell;
    double length = 0.0;
};

/// Every cell touched by the segment between two cell centres. Corner
/// crossings contribute both side cells with zero length.
std::vector<RaySegment> supercover(const Cell& from, const Cell& to);

}  // namespace evacsim
