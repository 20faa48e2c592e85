#pragma once

#include <Eigen/Core>

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace evacsim {

using Vec2 = Eigen::Vector2d;

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

/// Per-cell scalar layer indexed as (x, y).
template <typename Scalar>
using Layer = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using ScalarLayer = Layer<double>;
using MaskLayer = Layer<bool>;

/// Integer grid coordinate. y grows northward (first blueprint line is the top row).
struct Cell {
    int x = 0;
    int y = 0;

    friend constexpr bool operator==(const Cell&, const Cell&) = default;
    friend constexpr auto operator<=>(const Cell& a, const Cell& b) {
        if (auto c = a.y <=> b.y; c != 0) return c;
        return a.x <=> b.x;
    }
    constexpr Cell operator+(const Cell& o) const { return {x + o.x, y + o.y}; }
    constexpr Cell operator-(const Cell& o) const { return {x - o.x, y - o.y}; }
};

enum class Compass : std::uint8_t { N, NE, E, SE, S, SW, W, NW };

inline constexpr std::array<Compass, 8> kAllCompass = {Compass::N, Compass::NE, Compass::E, Compass::SE,
                                                       Compass::S, Compass::SW, Compass::W, Compass::NW};

constexpr Cell compass_offset(Compass c) {
    switch (c) {
        case Compass::N: return {0, 1};
        case Compass::NE: return {1, 1};
        case Compass::E: return {1, 0};
        case Compass::SE: return {1, -1};
        case Compass::S: return {0, -1};
        case Compass::SW: return {-1, -1};
        case Compass::W: return {-1, 0};
        case Compass::NW: return {-1, 1};
    }
    return {0, 0};
}

inline Vec2 compass_vector(Compass c) {
    const Cell o = compass_offset(c);
    return Vec2(o.x, o.y).normalized();
}

std::string_view compass_name(Compass c);
std::optional<Compass> parse_compass(std::string_view s);

/// The 8-neighbourhood offsets, orthogonal first.
inline constexpr std::array<Cell, 8> kNeighbourOffsets = {
    Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}, Cell{1, 1}, Cell{-1, 1}, Cell{1, -1}, Cell{-1, -1}};

inline constexpr std::array<Cell, 4> kOrthogonalOffsets = {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}};

inline constexpr bool is_diagonal(const Cell& offset) { return offset.x != 0 && offset.y != 0; }

}  // namespace evacsim
