#pragma once

#include "evacsim/record.hpp"
#include "evacsim/scenario.hpp"
#include "evacsim/session.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

// JSON text messages exchanged with the browser client, one per WebSocket frame.
namespace evacsim::protocol {

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Hello {
    Questionnaire questionnaire;
    std::string player;  // optional returning-player key
};
struct Start {};
struct Input {
    InputMessage input;
};
struct Bye {};
using ClientMessage = std::variant<Hello, Start, Input, Bye>;

ClientMessage parse_client(const std::string& text);
std::string encode_client(const ClientMessage& msg);

/// Run-length encoding of cell kinds in row-major order (y = 0 first, x
/// fastest): a list of [symbol, count] pairs with symbols # . D E.
std::vector<std::pair<char, int>> rle_encode(const GridMap& map);
std::vector<CellKind> rle_decode(const std::vector<std::pair<char, int>>& runs);

std::string encode_welcome(const std::string& session_id, GroupLabel group, const GridMap& map, double dt);
std::string encode_state(const StateMessage& m);
std::string encode_end(Outcome outcome, std::optional<double> egress_time);
std::string encode_error(const std::string& message);

struct Welcome {
    std::string session_id;
    GroupLabel group = GroupLabel::A;
    int width = 0;
    int height = 0;
    double cell_size = 0.0;
    double dt = 0.0;
    std::vector<std::pair<char, int>> cells;
};
struct End {
    Outcome outcome = Outcome::Aborted;
    std::optional<double> egress_time;
};
struct Error {
    std::string message;
};
using ServerMessage = std::variant<Welcome, StateMessage, End, Error>;

ServerMessage parse_server(const std::string& text);

}  // namespace evacsim::protocol
