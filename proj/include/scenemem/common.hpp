#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scenemem {

using NodeId = std::uint64_t;

// Kinematic relation kinds. Declaration order is the canonical order used
// for tie-breaking and one-hot encodings.
enum class Relation : std::uint8_t { In = 0, Contains = 1, OnTop = 2, Under = 3 };

inline constexpr std::array<Relation, 4> kRelations = {Relation::In, Relation::Contains,
                                                       Relation::OnTop, Relation::Under};

std::string_view to_string(Relation r);
Relation relation_from_string(std::string_view s);

// Declaration order matches the node-type one-hot.
enum class NodeType : std::uint8_t { House = 0, Floor = 1, Room = 2, Furniture = 3, Object = 4 };

std::string_view to_string(NodeType t);
NodeType node_type_from_string(std::string_view s);

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace scenemem
