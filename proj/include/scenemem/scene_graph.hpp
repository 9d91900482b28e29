#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scenemem/common.hpp"
#include "scenemem/rng.hpp"

namespace scenemem {

struct SceneNode {
    NodeId id = 0;
    NodeType type = NodeType::Object;
    std::string label;
    std::vector<std::string> adjectives;

    // Adjectives followed by the class label, e.g. "large red mug".
    std::string description() const;

    bool operator==(const SceneNode&) const = default;
};

struct SceneEdge {
    NodeId parent = 0;
    NodeId child = 0;
    Relation relation = Relation::Contains;

    bool operator==(const SceneEdge&) const = default;
};

/// Hierarchical house -> floor -> room -> furniture -> object tree. Every
/// non-root node has exactly one parent edge.
class SceneGraph {
public:
    void add_node(SceneNode node);
    // Attaches `edge.child` below `edge.parent`. The child must not have a parent yet.
    void add_edge(const SceneEdge& edge);
    // Re-parents an object under another furniture node.
    void move_object(NodeId object, NodeId furniture, Relation relation);
    void remove_object(NodeId object);

    bool contains(NodeId id) const { return nodes_.contains(id); }
    const SceneNode& node(NodeId id) const;
    const SceneEdge& parent_edge(NodeId child) const;
    std::optional<NodeId> parent(NodeId child) const;
    const std::set<NodeId>& children(NodeId id) const;

    const std::map<NodeId, SceneNode>& nodes() const { return nodes_; }
    const std::map<NodeId, SceneEdge>& edges() const { return parent_edge_; }
    std::vector<NodeId> ids_of_type(NodeType type) const;
    std::size_t count(NodeType type) const;

    // Throws Error describing the first violated tree/hierarchy invariant.
    void check_invariants() const;

    bool operator==(const SceneGraph& o) const { return nodes_ == o.nodes_ && parent_edge_ == o.parent_edge_; }

private:
    std::map<NodeId, SceneNode> nodes_;
    std::map<NodeId, SceneEdge> parent_edge_;
    std::map<NodeId, std::set<NodeId>> children_;
};

struct ObservedFurniture {
    SceneNode furniture;
    SceneNode room;
    SceneEdge room_edge;
};

struct VisibleObject {
    SceneNode node;
    SceneEdge edge;
};

struct Observation {
    int t = 0;
    std::vector<NodeId> observed_furniture;
    // Room context for each observed furniture node, same order.
    std::vector<ObservedFurniture> furniture;
    std::vector<VisibleObject> visible;
};

struct ObserveOptions {
    double dropout = 0.25;
    // Objects with this description are always detected (direct inspection).
    std::optional<std::string> always_detect;
};

Observation observe(const SceneGraph& sg, const std::vector<NodeId>& furniture_ids, int t,
                    const ObserveOptions& options, Seed seed);

// Furniture ids holding an object whose description equals `description`.
std::set<NodeId> true_locations(const SceneGraph& sg, std::string_view description);

nlohmann::json to_json(const SceneGraph& sg);
SceneGraph scene_graph_from_json(const nlohmann::json& j);

}  // namespace scenemem
