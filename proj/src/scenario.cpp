#include "evacsim/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace evacsim {

using json = nlohmann::json;

std::string_view compass_name(Compass c) {
    static constexpr std::array<std::string_view, 8> names = {"N", "NE", "E", "SE", "S", "SW", "W", "NW"};
    return names[static_cast<std::size_t>(c)];
}

std::optional<Compass> parse_compass(std::string_view s) {
    for (Compass c : kAllCompass) {
        if (compass_name(c) == s) return c;
    }
    return std::nullopt;
}

namespace {

[[noreturn]] void fail(ScenarioError::Kind kind, const std::string& msg) { throw ScenarioError(kind, msg); }

std::string cell_str(const Cell& c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

bool connected(const std::vector<Cell>& cells) {
    if (cells.empty()) return false;
    std::set<Cell> remaining(cells.begin(), cells.end());
    std::vector<Cell> stack{cells.front()};
    remaining.erase(cells.front());
    while (!stack.empty()) {
        const Cell c = stack.back();
        stack.pop_back();
        for (const Cell& o : kOrthogonalOffsets) {
            if (auto it = remaining.find(c + o); it != remaining.end()) {
                stack.push_back(*it);
                remaining.erase(it);
            }
        }
    }
    return remaining.empty();
}

}  // namespace

GridMap::GridMap(Parts parts) : p_(std::move(parts)) {
    using K = ScenarioError::Kind;
    if (p_.width <= 0 || p_.height <= 0) fail(K::Syntax, "empty grid");
    if (p_.cells.size() != static_cast<std::size_t>(p_.width) * p_.height)
        fail(K::Syntax, "cell array does not match width*height");
    if (!(p_.cell_size > 0.0) || !std::isfinite(p_.cell_size)) fail(K::BadMetadata, "cell_size must be positive");

    // exits
    std::size_t exit_cells = 0;
    for (CellKind k : p_.cells) exit_cells += (k == CellKind::Exit);
    if (exit_cells == 0 || p_.exits.empty()) fail(K::NoExit, "map has no exit cells");
    if (p_.spawn_cells.empty()) fail(K::NoSpawn, "map has no spawn cells");

    exit_index_.assign(p_.cells.size(), 0);
    std::set<int> ids;
    for (auto& e : p_.exits) {
        if (e.id <= 0) fail(K::BadMetadata, "exit ids must be positive");
        if (!ids.insert(e.id).second) fail(K::BadMetadata, "duplicate exit id " + std::to_string(e.id));
        if (e.cells.empty()) fail(K::BadMetadata, "exit " + std::to_string(e.id) + " has no cells");
        std::sort(e.cells.begin(), e.cells.end());
        for (const Cell& c : e.cells) {
            if (!in_bounds(c) || kind(c) != CellKind::Exit)
                fail(K::BadMetadata, "exit " + std::to_string(e.id) + " lists non-exit cell " + cell_str(c));
            if (exit_index_[index(c)] != 0) fail(K::BadMetadata, "exit cell " + cell_str(c) + " grouped twice");
            exit_index_[index(c)] = e.id;
            const bool boundary = c.x == 0 || c.y == 0 || c.x == p_.width - 1 || c.y == p_.height - 1;
            bool wall_gap = false;
            for (const Cell& o : kOrthogonalOffsets) {
                const Cell n = c + o;
                wall_gap = wall_gap || (in_bounds(n) && kind(n) == CellKind::Wall);
            }
            if (!boundary && !wall_gap)
                fail(K::BadMetadata, "exit cell " + cell_str(c) + " is neither on the boundary nor in a wall gap");
        }
        if (!connected(e.cells)) fail(K::BadMetadata, "exit " + std::to_string(e.id) + " cells are not contiguous");
    }
    std::sort(p_.exits.begin(), p_.exits.end(), [](const ExitDef& a, const ExitDef& b) { return a.id < b.id; });
    if (static_cast<std::size_t>(std::count_if(exit_index_.begin(), exit_index_.end(), [](int v) { return v != 0; })) !=
        exit_cells)
        fail(K::BadMetadata, "some exit cells belong to no exit");

    std::sort(p_.spawn_cells.begin(), p_.spawn_cells.end());
    if (std::adjacent_find(p_.spawn_cells.begin(), p_.spawn_cells.end()) != p_.spawn_cells.end())
        fail(K::BadMetadata, "duplicate spawn cell");
    for (const Cell& c : p_.spawn_cells)
        if (!walkable(c)) fail(K::BadMetadata, "spawn cell " + cell_str(c) + " is not walkable");

    std::sort(p_.signs.begin(), p_.signs.end(), [](const SignDef& a, const SignDef& b) { return a.cell < b.cell; });
    for (std::size_t i = 0; i < p_.signs.size(); ++i) {
        const SignDef& s = p_.signs[i];
        if (!walkable(s.cell)) fail(K::BadMetadata, "sign cell " + cell_str(s.cell) + " is not walkable");
        if (!(s.visibility_range > 0.0)) fail(K::BadMetadata, "sign visibility_range must be positive");
        if (i > 0 && p_.signs[i - 1].cell == s.cell) fail(K::BadMetadata, "two signs share " + cell_str(s.cell));
        if (std::binary_search(p_.spawn_cells.begin(), p_.spawn_cells.end(), s.cell))
            fail(K::BadMetadata, "sign cell " + cell_str(s.cell) + " is also a spawn cell");
    }

    std::set<std::string> names;
    int starts = 0;
    for (const Room& r : p_.rooms) {
        if (r.name.empty() || !names.insert(r.name).second) fail(K::BadMetadata, "room names must be unique");
        if (!in_bounds(r.lo) || !in_bounds(r.hi) || r.lo.x > r.hi.x || r.lo.y > r.hi.y)
            fail(K::BadMetadata, "room " + r.name + " rectangle out of bounds");
        starts += r.start;
    }
    if (starts > 1) fail(K::BadMetadata, "at most one start room");
}

std::optional<int> GridMap::exit_at(const Cell& c) const {
    if (!in_bounds(c)) return std::nullopt;
    const int id = exit_index_[index(c)];
    if (id == 0) return std::nullopt;
    return id;
}

const ExitDef* GridMap::find_exit(int id) const {
    for (const auto& e : p_.exits)
        if (e.id == id) return &e;
    return nullptr;
}

const Room* GridMap::start_room() const {
    for (const auto& r : p_.rooms)
        if (r.start) return &r;
    return nullptr;
}

const Room* GridMap::find_room(std::string_view name) const {
    for (const auto& r : p_.rooms)
        if (r.name == name) return &r;
    return nullptr;
}

Cell GridMap::cell_of(const Vec2& p) const {
    return {static_cast<int>(std::floor(p.x() / p_.cell_size)), static_cast<int>(std::floor(p.y() / p_.cell_size))};
}

bool GridMap::can_step(const Cell& from, const Cell& offset, const MaskLayer* blocked) const {
    auto open = [&](const Cell& c) { return walkable(c) && !(blocked && (*blocked)(c.x, c.y)); };
    if (!open(from + offset)) return false;
    if (!is_diagonal(offset)) return true;
    return open(from + Cell{offset.x, 0}) && open(from + Cell{0, offset.y});
}

bool operator==(const GridMap& a, const GridMap& b) {
    const auto& p = a.p_;
    const auto& q = b.p_;
    return p.width == q.width && p.height == q.height && p.cell_size == q.cell_size && p.cells == q.cells &&
           p.exits == q.exits && p.signs == q.signs && p.rooms == q.rooms && p.spawn_cells == q.spawn_cells &&
           p.defaults == q.defaults;
}

// ---------------------------------------------------------------------------
// Blueprint text format

GridMap parse_blueprint(std::string_view text) {
    using K = ScenarioError::Kind;
    std::vector<std::string_view> rows;
    std::string_view meta;
    bool have_meta = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (line == "---") {
            have_meta = true;
            meta = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
            break;
        }
        rows.push_back(line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    while (!rows.empty() && rows.back().empty()) rows.pop_back();
    if (rows.empty()) fail(K::Syntax, "blueprint has no grid rows");

    GridMap::Parts parts;
    parts.width = static_cast<int>(rows.front().size());
    parts.height = static_cast<int>(rows.size());
    if (parts.width == 0) fail(K::Syntax, "blueprint has an empty grid row");
    parts.cells.resize(static_cast<std::size_t>(parts.width) * parts.height);

    std::map<int, std::vector<Cell>> sign_cells;
    std::vector<Cell> exit_cells;
    for (int line = 0; line < parts.height; ++line) {
        const auto row = rows[line];
        if (static_cast<int>(row.size()) != parts.width)
            fail(K::Syntax, "ragged row at line " + std::to_string(line + 1));
        const int y = parts.height - 1 - line;
        for (int x = 0; x < parts.width; ++x) {
            const char ch = row[x];
            CellKind k = CellKind::Floor;
            switch (ch) {
                case '#': k = CellKind::Wall; break;
                case '.': break;
                case 'D': k = CellKind::Door; break;
                case 'E': k = CellKind::Exit; exit_cells.push_back({x, y}); break;
                case 'P': parts.spawn_cells.push_back({x, y}); break;
                default:
                    if (ch >= '0' && ch <= '9') {
                        sign_cells[ch - '0'].push_back({x, y});
                    } else {
                        fail(K::Syntax, "unknown symbol '" + std::string(1, ch) + "' at line " +
                                            std::to_string(line + 1) + " column " + std::to_string(x + 1));
                    }
            }
            parts.cells[static_cast<std::size_t>(y) * parts.width + x] = k;
        }
    }

    json doc = json::object();
    if (have_meta) {
        const auto first = meta.find_first_not_of(" \t\r\n");
        if (first != std::string_view::npos) {
            try {
                doc = json::parse(meta);
            } catch (const json::parse_error& e) {
                fail(K::BadMetadata, std::string("metadata is not valid JSON: ") + e.what());
            }
        }
    }
    if (!doc.is_object()) fail(K::BadMetadata, "metadata must be an object");

    if (exit_cells.empty()) fail(K::NoExit, "map has no exit cells");
    if (parts.spawn_cells.empty()) fail(K::NoSpawn, "map has no spawn cells");

    try {
        if (doc.contains("cell_size")) parts.cell_size = doc.at("cell_size").get<double>();

        for (const auto& r : doc.value("rooms", json::array())) {
            Room room;
            room.name = r.at("name").get<std::string>();
            room.lo = {r.at("x0").get<int>(), r.at("y0").get<int>()};
            room.hi = {r.at("x1").get<int>(), r.at("y1").get<int>()};
            room.start = r.value("start", false);
            parts.rooms.push_back(std::move(room));
        }

        const json signs = doc.value("signs", json::object());
        for (const auto& [digit, cells] : sign_cells) {
            const auto key = std::to_string(digit);
            if (!signs.contains(key)) fail(K::BadMetadata, "sign digit " + key + " has no metadata");
            const auto& s = signs.at(key);
            const auto dir = parse_compass(s.at("direction").get<std::string>());
            if (!dir) fail(K::BadMetadata, "sign digit " + key + " has an invalid direction");
            const double range = s.at("visibility_range").get<double>();
            for (const Cell& c : cells) parts.signs.push_back({c, *dir, range});
        }

        if (doc.contains("exits")) {
            for (const auto& e : doc.at("exits")) {
                ExitDef def;
                def.id = e.at("id").get<int>();
                for (const auto& c : e.at("cells")) def.cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
                parts.exits.push_back(std::move(def));
            }
        } else {
            // group exit cells into 4-connected components, ids in cell order
            std::sort(exit_cells.begin(), exit_cells.end());
            std::set<Cell> remaining(exit_cells.begin(), exit_cells.end());
            int next_id = 1;
            for (const Cell& seed : exit_cells) {
                if (!remaining.count(seed)) continue;
                ExitDef def{next_id++, {}};
                std::queue<Cell> q;
                q.push(seed);
                remaining.erase(seed);
                while (!q.empty()) {
                    const Cell c = q.front();
                    q.pop();
                    def.cells.push_back(c);
                    for (const Cell& o : kOrthogonalOffsets) {
                        if (auto it = remaining.find(c + o); it != remaining.end()) {
                            q.push(*it);
                            remaining.erase(it);
                        }
                    }
                }
                parts.exits.push_back(std::move(def));
            }
        }

        const json defaults = doc.value("defaults", json::object());
        for (const auto& [key, value] : defaults.items())
            parts.defaults[key] = value.is_string() ? value.get<std::string>() : value.dump();
    } catch (const json::exception& e) {
        fail(K::BadMetadata, std::string("malformed metadata: ") + e.what());
    }

    return GridMap(std::move(parts));
}

GridMap load_blueprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError(ScenarioError::Kind::Io, "cannot open scenario file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_blueprint(ss.str());
}

std::string serialize_blueprint(const GridMap& map) {
    const auto& p = map.parts();
    std::vector<std::string> lines(p.height, std::string(p.width, '.'));
    auto put = [&](const Cell& c, char ch) { lines[p.height - 1 - c.y][c.x] = ch; };
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            switch (map.kind({x, y})) {
                case CellKind::Wall: put({x, y}, '#'); break;
                case CellKind::Door: put({x, y}, 'D'); break;
                case CellKind::Exit: put({x, y}, 'E'); break;
                case CellKind::Floor: break;
            }
        }
    }
    for (const Cell& c : p.spawn_cells) put(c, 'P');

    json signs = json::object();
    std::vector<std::pair<Compass, double>> kinds;
    for (const auto& s : p.signs) {
        auto it = std::find(kinds.begin(), kinds.end(), std::make_pair(s.pointed, s.visibility_range));
        if (it == kinds.end()) {
            if (kinds.size() == 10)
                throw ScenarioError(ScenarioError::Kind::BadMetadata, "more than 10 distinct sign kinds");
            kinds.emplace_back(s.pointed, s.visibility_range);
            it = kinds.end() - 1;
        }
        const int digit = static_cast<int>(it - kinds.begin());
        put(s.cell, static_cast<char>('0' + digit));
        signs[std::to_string(digit)] = {{"direction", std::string(compass_name(s.pointed))},
                                        {"visibility_range", s.visibility_range}};
    }

    json doc;
    doc["cell_size"] = p.cell_size;
    doc["rooms"] = json::array();
    for (const auto& r : p.rooms) {
        json jr = {{"name", r.name}, {"x0", r.lo.x}, {"y0", r.lo.y}, {"x1", r.hi.x}, {"y1", r.hi.y}};
        if (r.start) jr["start"] = true;
        doc["rooms"].push_back(std::move(jr));
    }
    doc["signs"] = std::move(signs);
    doc["exits"] = json::array();
    for (const auto& e : p.exits) {
        json cells = json::array();
        for (const Cell& c : e.cells) cells.push_back({c.x, c.y});
        doc["exits"].push_back({{"id", e.id}, {"cells", std::move(cells)}});
    }
    if (!p.defaults.empty()) doc["defaults"] = p.defaults;

    std::string out;
    for (const auto& l : lines) out += l + "\n";
    out += "---\n" + doc.dump(2) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Line of sight

std::vector<RaySegment> supercover(const Cell& from, const Cell& to) {
    std::vector<RaySegment> out;
    const int dx = to.x - from.x;
    const int dy = to.y - from.y;
    const int ax = std::abs(dx);
    const int ay = std::abs(dy);
    const int sx = dx > 0 ? 1 : -1;
    const int sy = dy > 0 ? 1 : -1;
    Cell cur = from;
    if (ax == 0 && ay == 0) {
        out.push_back({cur, 0.0});
        return out;
    }
    const double len = std::hypot(static_cast<double>(dx), static_cast<double>(dy));
    // Boundary crossings happen at t = (2k+1)/(2a); compare numerators exactly
    // in integers: next x crossing (2kx+1)*ay against next y crossing (2ky+1)*ax.
    long kx = 0;
    long ky = 0;
    double t = 0.0;
    while (cur != to) {
        const long cross_x = ax == 0 ? -1 : (2 * kx + 1) * ay;
        const long cross_y = ay == 0 ? -1 : (2 * ky + 1) * ax;
        double t_next = 0.0;
        enum { StepX, StepY, StepBoth } step{};
        if (ax == 0) {
            step = StepY;
        } else if (ay == 0) {
            step = StepX;
        } else if (cross_x < cross_y) {
            step = StepX;
        } else if (cross_y < cross_x) {
            step = StepY;
        } else {
            step = StepBoth;
        }
        if (step == StepY) {
            t_next = (2.0 * ky + 1.0) / (2.0 * ay);
        } else {
            t_next = (2.0 * kx + 1.0) / (2.0 * ax);
        }
        out.push_back({cur, (t_next - t) * len});
        t = t_next;
        if (step == StepX) {
            cur.x += sx;
            ++kx;
        } else if (step == StepY) {
            cur.y += sy;
            ++ky;
        } else {
            out.push_back({{cur.x + sx, cur.y}, 0.0});
            out.push_back({{cur.x, cur.y + sy}, 0.0});
            cur.x += sx;
            cur.y += sy;
            ++kx;
            ++ky;
        }
    }
    out.push_back({cur, (1.0 - t) * len});
    return out;
}

std::optional<double> optical_depth(const GridMap& map, const Cell& from, const Cell& to, const ScalarLayer* smoke,
                                    double opacity_coeff) {
    if (!map.in_bounds(from) || !map.in_bounds(to))
        throw ScenarioError(ScenarioError::Kind::OutOfBounds, "line of sight endpoint out of bounds");
    // canonical direction makes the result exactly symmetric
    const bool swap = to < from;
    const auto segments = swap ? supercover(to, from) : supercover(from, to);
    double depth = 0.0;
    for (const auto& seg : segments) {
        if (!map.walkable(seg.cell)) return std::nullopt;
        if (smoke) depth += (*smoke)(seg.cell.x, seg.cell.y) * seg.length * map.cell_size() * opacity_coeff;
    }
    return depth;
}

bool line_of_sight(const GridMap& map, const Cell& from, const Cell& to, const ScalarLayer* smoke,
                   double opacity_coeff) {
    const auto depth = optical_depth(map, from, to, smoke, opacity_coeff);
    return depth && *depth < 1.0;
}

}  // namespace evacsim
