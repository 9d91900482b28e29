#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scenemem/embedding.hpp"
#include "scenemem/priors.hpp"
#include "scenemem/scene_graph.hpp"

namespace scenemem {

// Object nodes in memory are keyed by description and numbered from here so
// they never collide with scene ids of rooms and furniture.
inline constexpr NodeId kObjectIdBase = NodeId{1} << 32;

inline constexpr int kNodeFeatureDim = 105;
inline constexpr int kEdgeFeatureDim = 13;
inline constexpr double kNodeTemporalScale = 200.0 / (100.0 * 10.0);
inline constexpr double kEdgeTemporalScale = 500.0 / (100.0 * 10.0);

enum class EdgeState : std::uint8_t { False = 0, True = 1, Unknown = 2 };

struct EdgeKey {
    NodeId parent = 0;
    NodeId child = 0;
    Relation relation = Relation::In;

    auto operator<=>(const EdgeKey&) const = default;
};

struct SGMNode {
    NodeId id = 0;
    NodeType type = NodeType::Object;
    std::string label;
    std::string description;
    // Room of a furniture node, 0 otherwise.
    NodeId room = 0;
    bool is_query = false;
    std::optional<int> last_observed_t;
    int times_observed = 0;
    std::optional<int> last_moved_t;
    int times_moved = 0;
    // Furniture holding this object at its most recent sighting.
    std::set<NodeId> last_locations;
    std::vector<double> embedding;

    double observed_move_frequency() const {
        return static_cast<double>(times_moved) / std::max(1, times_observed - 1);
    }

    bool operator==(const SGMNode&) const = default;
};

struct SGMEdge {
    EdgeKey key;
    bool is_hypothetical = false;
    int times_observed = 0;
    int times_true = 0;
    int times_changed = 0;
    std::optional<int> last_observed_t;
    std::optional<int> last_state_change_t;
    std::optional<int> last_true_t;
    EdgeState last_state = EdgeState::Unknown;
    double prior_prob = 0.0;

    double true_frequency() const {
        return times_observed == 0 ? 0.0 : static_cast<double>(times_true) / times_observed;
    }

    bool operator==(const SGMEdge&) const = default;
};

// Feature groups that can be switched off for ablations.
struct FeatureMask {
    bool semantic = true;
    bool temporal = true;
    bool prior = true;
};

struct QueryOptions {
    double threshold = 0.05;
    int min_k = 5;
    // Ablation: ignore priors and attach `random_count` random hypothetical edges.
    bool random_edges = false;
    int random_count = 10;
    // Give every known furniture at least one candidate edge (zero prior if
    // none is plausible), so the whole house is searchable.
    bool cover_all_furniture = false;
    Seed seed = 0;
};

/// Accumulated observations plus hypothetical query edges. Nodes and edges are
/// never removed.
class SceneGraphMemory {
public:
    SceneGraphMemory() = default;
    SceneGraphMemory(const PriorsGraph* priors, const EmbeddingProvider* embeddings);

    // Registers rooms and furniture of a known layout, without counting them observed.
    void add_structure(const SceneGraph& scene);
    void advance_to(int t);
    void integrate_observation(const Observation& o);
    NodeId add_query(const std::string& description, const QueryOptions& options = {});

    std::vector<EdgeKey> candidate_edges(NodeId query) const;
    std::optional<NodeId> object_id(const std::string& description) const;

    bool contains(NodeId id) const { return nodes_.contains(id); }
    bool contains(const EdgeKey& key) const { return edges_.contains(key); }
    const SGMNode& node(NodeId id) const;
    const SGMEdge& edge(const EdgeKey& key) const;
    const std::map<NodeId, SGMNode>& nodes() const { return nodes_; }
    const std::map<EdgeKey, SGMEdge>& edges() const { return edges_; }
    const std::set<NodeId>& query_ids() const { return query_ids_; }
    int t() const { return t_; }

    std::vector<double> featurize_node(NodeId id, const FeatureMask& mask = {}) const;
    std::vector<double> featurize_edge(const EdgeKey& key, const FeatureMask& mask = {}) const;

    // Copy holding only the given queries, their candidate edges and endpoints.
    SceneGraphMemory restricted_to(const std::vector<NodeId>& queries) const;

    static SceneGraphMemory from_parts(int t, std::vector<SGMNode> nodes, std::vector<SGMEdge> edges,
                                       const std::set<NodeId>& query_ids);

    bool operator==(const SceneGraphMemory& o) const {
        return t_ == o.t_ && nodes_ == o.nodes_ && edges_ == o.edges_ && query_ids_ == o.query_ids_;
    }

private:
    SGMNode& ensure_structure_node(const SceneNode& n, NodeId room);
    SGMNode& ensure_object_node(const std::string& label, const std::string& description);
    SGMEdge& ensure_edge(const EdgeKey& key, bool hypothetical);
    double lookup_prior(const EdgeKey& key) const;
    void observe_edge(SGMEdge& e, EdgeState state);
    void rebuild_indices();

    const PriorsGraph* priors_ = nullptr;
    const EmbeddingProvider* embeddings_ = nullptr;
    int t_ = 0;
    std::map<NodeId, SGMNode> nodes_;
    std::map<EdgeKey, SGMEdge> edges_;
    std::set<NodeId> query_ids_;
    std::map<std::string, NodeId> object_ids_;
    NodeId next_object_id_ = kObjectIdBase;
    std::map<NodeId, std::set<EdgeKey>> by_parent_;
    std::map<NodeId, std::set<EdgeKey>> by_child_;
};

std::vector<double> featurize_node(const SGMNode& n, int t, const FeatureMask& mask = {});
std::vector<double> featurize_edge(const SGMEdge& e, const SGMNode& parent, const SGMNode& child, int t,
                                   const FeatureMask& mask = {});

}  // namespace scenemem
