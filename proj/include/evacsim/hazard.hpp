#pragma once

#include "evacsim/rng.hpp"
#include "evacsim/scenario.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace evacsim {

struct AgentState;

struct HazardParams {
    double p_spread = 0.05;       // per-second ignition probability per orthogonal neighbour
    double smoke_emission = 0.1;  // density/second on burning cells
    double smoke_diffusion = 0.2; // per-step mixing coefficient
    double harm_threshold = 0.6;  // smoke density above which health decays
    double harm_rate = 5.0;       // health/second in dense smoke
    double fire_harm_rate = 50.0; // health/second on a burning cell

    void validate() const;
    friend bool operator==(const HazardParams&, const HazardParams&) = default;
};

/// Fire and smoke state. A value: stepping returns a new field.
struct HazardField {
    MaskLayer burning;
    ScalarLayer smoke;
    std::string ignition_room;
    long ignition_tick = -1;

    HazardField() = default;
    explicit HazardField(const GridMap& map);

    bool is_burning(const Cell& c) const { return burning(c.x, c.y); }
    double smoke_at(const Cell& c) const { return smoke(c.x, c.y); }
    long burning_count() const { return burning.count(); }
    std::vector<Cell> burning_cells() const;
    double total_smoke() const { return smoke.sum(); }
};

class NoRoomsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-step probability for a per-second rate, invariant under dt refinement.
double per_step_probability(double per_second, double dt);

/// Chooses one non-start room uniformly and sets one of its walkable cells alight.
HazardField ignite_random_room(const GridMap& map, RngStream& rng, long tick = 0);

HazardField step_fire(const HazardField& field, const GridMap& map, const HazardParams& params, double dt,
                      RngStream& rng);

HazardField step_smoke(const HazardField& field, const GridMap& map, const HazardParams& params, double dt);

AgentState apply_harm(const HazardField& field, const GridMap& map, const AgentState& agent,
                      const HazardParams& params, double dt);

}  // namespace evacsim
