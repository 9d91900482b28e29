#include "scenemem/scene_graph.hpp"

#include <algorithm>

namespace scenemem {

using nlohmann::json;

std::string SceneNode::description() const {
    std::string out;
    for (const auto& a : adjectives) {
        out += a;
        out += ' ';
    }
    return out + label;
}

void SceneGraph::add_node(SceneNode node) {
    const NodeId id = node.id;
    if (!nodes_.emplace(id, std::move(node)).second) {
        throw Error("duplicate scene node id " + std::to_string(id));
    }
}

void SceneGraph::add_edge(const SceneEdge& edge) {
    if (!nodes_.contains(edge.parent) || !nodes_.contains(edge.child)) {
        throw Error("scene edge references unknown node");
    }
    if (!parent_edge_.emplace(edge.child, edge).second) {
        throw Error("node " + std::to_string(edge.child) + " already has a parent");
    }
    children_[edge.parent].insert(edge.child);
}

void SceneGraph::move_object(NodeId object, NodeId furniture, Relation relation) {
    auto it = parent_edge_.find(object);
    if (it == parent_edge_.end()) throw Error("object " + std::to_string(object) + " has no parent");
    if (node(furniture).type != NodeType::Furniture) throw Error("move target is not furniture");
    children_[it->second.parent].erase(object);
    it->second.parent = furniture;
    it->second.relation = relation;
    children_[furniture].insert(object);
}

void SceneGraph::remove_object(NodeId object) {
    if (node(object).type != NodeType::Object) throw Error("only object nodes can be removed");
    if (auto it = parent_edge_.find(object); it != parent_edge_.end()) {
        children_[it->second.parent].erase(object);
        parent_edge_.erase(it);
    }
    nodes_.erase(object);
}

const SceneNode& SceneGraph::node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error("unknown scene node " + std::to_string(id));
    return it->second;
}

const SceneEdge& SceneGraph::parent_edge(NodeId child) const {
    auto it = parent_edge_.find(child);
    if (it == parent_edge_.end()) throw Error("node " + std::to_string(child) + " has no parent");
    return it->second;
}

std::optional<NodeId> SceneGraph::parent(NodeId child) const {
    auto it = parent_edge_.find(child);
    if (it == parent_edge_.end()) return std::nullopt;
    return it->second.parent;
}

const std::set<NodeId>& SceneGraph::children(NodeId id) const {
    static const std::set<NodeId> kEmpty;
    auto it = children_.find(id);
    return it == children_.end() ? kEmpty : it->second;
}

std::vector<NodeId> SceneGraph::ids_of_type(NodeType type) const {
    std::vector<NodeId> out;
    for (const auto& [id, n] : nodes_) {
        if (n.type == type) out.push_back(id);
    }
    return out;
}

std::size_t SceneGraph::count(NodeType type) const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [&](const auto& e) { return e.second.type == type; }));
}

void SceneGraph::check_invariants() const {
    std::size_t roots = 0;
    for (const auto& [id, n] : nodes_) {
        if (n.label.empty()) throw Error("node " + std::to_string(id) + " has an empty label");
        auto it = parent_edge_.find(id);
        if (n.type == NodeType::House) {
            ++roots;
            if (it != parent_edge_.end()) throw Error("house node has a parent");
            continue;
        }
        if (it == parent_edge_.end()) throw Error("node " + std::to_string(id) + " has no parent");
        const SceneNode& p = node(it->second.parent);
        if (static_cast<int>(p.type) + 1 != static_cast<int>(n.type)) {
            throw Error("edge " + std::to_string(p.id) + "->" + std::to_string(id) + " skips a hierarchy level");
        }
    }
    if (!nodes_.empty() && roots != 1) throw Error("scene graph must have exactly one house node");
}

Observation observe(const SceneGraph& sg, const std::vector<NodeId>& furniture_ids, int t,
                    const ObserveOptions& options, Seed seed) {
    Observation o;
    o.t = t;
    Rng rng(seed);
    for (NodeId f : furniture_ids) {
        if (!sg.contains(f) || sg.node(f).type != NodeType::Furniture) {
            throw Error("observe: unknown furniture id " + std::to_string(f));
        }
        if (std::find(o.observed_furniture.begin(), o.observed_furniture.end(), f) != o.observed_furniture.end()) {
            continue;
        }
        o.observed_furniture.push_back(f);
        const SceneEdge& room_edge = sg.parent_edge(f);
        o.furniture.push_back({sg.node(f), sg.node(room_edge.parent), room_edge});
        for (NodeId c : sg.children(f)) {
            const SceneNode& obj = sg.node(c);
            // one draw per attached object keeps the stream aligned regardless of options
            const bool dropped = rng.bernoulli(options.dropout);
            const bool forced = options.always_detect && obj.description() == *options.always_detect;
            if (dropped && !forced) continue;
            o.visible.push_back({obj, sg.parent_edge(c)});
        }
    }
    return o;
}

std::set<NodeId> true_locations(const SceneGraph& sg, std::string_view description) {
    std::set<NodeId> out;
    for (const auto& [id, n] : sg.nodes()) {
        if (n.type == NodeType::Object && n.description() == description) {
            if (auto p = sg.parent(id)) out.insert(*p);
        }
    }
    return out;
}

json to_json(const SceneGraph& sg) {
    json nodes = json::array();
    for (const auto& [id, n] : sg.nodes()) {
        nodes.push_back({{"id", id}, {"type", to_string(n.type)}, {"label", n.label}, {"adjectives", n.adjectives}});
    }
    json edges = json::array();
    for (const auto& [child, e] : sg.edges()) {
        edges.push_back({{"parent", e.parent}, {"child", e.child}, {"relation", to_string(e.relation)}});
    }
    return {{"nodes", nodes}, {"edges", edges}};
}

SceneGraph scene_graph_from_json(const json& j) {
    SceneGraph sg;
    for (const json& n : j.at("nodes")) {
        sg.add_node({n.at("id").get<NodeId>(), node_type_from_string(n.at("type").get<std::string>()),
                     n.at("label").get<std::string>(), n.at("adjectives").get<std::vector<std::string>>()});
    }
    for (const json& e : j.at("edges")) {
        sg.add_edge({e.at("parent").get<NodeId>(), e.at("child").get<NodeId>(),
                     relation_from_string(e.at("relation").get<std::string>())});
    }
    return sg;
}

}  // namespace scenemem
