#include "scenemem/memory.hpp"

#include <algorithm>
#include <tuple>

namespace scenemem {

SceneGraphMemory::SceneGraphMemory(const PriorsGraph* priors, const EmbeddingProvider* embeddings)
    : priors_(priors), embeddings_(embeddings) {}

const SGMNode& SceneGraphMemory::node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error("memory has no node " + std::to_string(id));
    return it->second;
}

const SGMEdge& SceneGraphMemory::edge(const EdgeKey& key) const {
    auto it = edges_.find(key);
    if (it == edges_.end()) {
        throw Error("memory has no edge " + std::to_string(key.parent) + "->" + std::to_string(key.child));
    }
    return it->second;
}

std::optional<NodeId> SceneGraphMemory::object_id(const std::string& description) const {
    auto it = object_ids_.find(description);
    if (it == object_ids_.end()) return std::nullopt;
    return it->second;
}

SGMNode& SceneGraphMemory::ensure_structure_node(const SceneNode& n, NodeId room) {
    auto it = nodes_.find(n.id);
    if (it != nodes_.end()) return it->second;
    SGMNode m;
    m.id = n.id;
    m.type = n.type;
    m.label = n.label;
    m.description = n.description();
    m.room = room;
    if (embeddings_) m.embedding = embeddings_->embed(m.description);
    return nodes_.emplace(n.id, std::move(m)).first->second;
}

SGMNode& SceneGraphMemory::ensure_object_node(const std::string& label, const std::string& description) {
    if (auto it = object_ids_.find(description); it != object_ids_.end()) return nodes_.at(it->second);
    SGMNode m;
    m.id = next_object_id_++;
    m.type = NodeType::Object;
    m.label = label;
    m.description = description;
    if (embeddings_) m.embedding = embeddings_->embed(description);
    object_ids_[description] = m.id;
    return nodes_.emplace(m.id, std::move(m)).first->second;
}

double SceneGraphMemory::lookup_prior(const EdgeKey& key) const {
    if (!priors_) return 0.0;
    const SGMNode& parent = node(key.parent);
    const SGMNode& child = node(key.child);
    if (parent.type != NodeType::Furniture || child.type != NodeType::Object) return 0.0;
    return priors_->probs.placement_prob({node(parent.room).label, parent.label, child.label, key.relation});
}

SGMEdge& SceneGraphMemory::ensure_edge(const EdgeKey& key, bool hypothetical) {
    auto it = edges_.find(key);
    if (it != edges_.end()) return it->second;
    SGMEdge e;
    e.key = key;
    e.is_hypothetical = hypothetical;
    e.prior_prob = lookup_prior(key);
    by_parent_[key.parent].insert(key);
    by_child_[key.child].insert(key);
    return edges_.emplace(key, e).first->second;
}

void SceneGraphMemory::observe_edge(SGMEdge& e, EdgeState state) {
    if (e.last_observed_t == t_) return;
    if (e.last_state != EdgeState::Unknown && e.last_state != state) {
        ++e.times_changed;
        e.last_state_change_t = t_;
    }
    ++e.times_observed;
    if (state == EdgeState::True) {
        ++e.times_true;
        e.last_true_t = t_;
    }
    e.last_state = state;
    e.last_observed_t = t_;
    e.is_hypothetical = false;
}

void SceneGraphMemory::add_structure(const SceneGraph& scene) {
    for (NodeId r : scene.ids_of_type(NodeType::Room)) ensure_structure_node(scene.node(r), 0);
    for (NodeId f : scene.ids_of_type(NodeType::Furniture)) {
        const SceneEdge& e = scene.parent_edge(f);
        ensure_structure_node(scene.node(f), e.parent);
        ensure_edge({e.parent, f, e.relation}, false);
    }
}

void SceneGraphMemory::advance_to(int t) {
    if (t < t_) throw Error("memory cannot move back in time");
    t_ = t;
}

void SceneGraphMemory::integrate_observation(const Observation& o) {
    if (o.t != t_) {
        throw Error("observation at t=" + std::to_string(o.t) + " does not match memory t=" + std::to_string(t_));
    }
    auto mark_seen = [&](SGMNode& n) {
        if (n.last_observed_t == t_) return;
        ++n.times_observed;
        n.last_observed_t = t_;
    };
    for (const auto& f : o.furniture) {
        mark_seen(ensure_structure_node(f.room, 0));
        mark_seen(ensure_structure_node(f.furniture, f.room.id));
        observe_edge(ensure_edge({f.room_edge.parent, f.room_edge.child, f.room_edge.relation}, false),
                     EdgeState::True);
    }

    std::set<EdgeKey> seen_true;
    std::map<NodeId, std::set<NodeId>> sightings;
    for (const auto& v : o.visible) {
        const NodeId id = ensure_object_node(v.node.label, v.node.description()).id;
        const EdgeKey key{v.edge.parent, id, v.edge.relation};
        observe_edge(ensure_edge(key, false), EdgeState::True);
        seen_true.insert(key);
        sightings[id].insert(v.edge.parent);
    }
    for (const auto& [id, locs] : sightings) {
        SGMNode& n = nodes_.at(id);
        if (n.last_observed_t == t_) {
            n.last_locations.insert(locs.begin(), locs.end());
            continue;
        }
        const bool moved = !n.last_locations.empty() &&
                           std::any_of(locs.begin(), locs.end(), [&](NodeId f) { return !n.last_locations.contains(f); });
        if (moved) {
            ++n.times_moved;
            n.last_moved_t = t_;
        }
        n.last_locations = locs;
        mark_seen(n);
    }

    for (NodeId f : o.observed_furniture) {
        auto it = by_parent_.find(f);
        if (it == by_parent_.end()) continue;
        for (const EdgeKey& key : it->second) {
            if (!seen_true.contains(key)) observe_edge(edges_.at(key), EdgeState::False);
        }
    }
}

NodeId SceneGraphMemory::add_query(const std::string& description, const QueryOptions& options) {
    if (!priors_) throw Error("add_query needs a priors graph");
    const auto [adjectives, label] = split_description(*priors_, description);
    SGMNode& q = ensure_object_node(label, description);
    q.is_query = true;
    const NodeId id = q.id;
    query_ids_.insert(id);

    std::vector<NodeId> furniture;
    for (const auto& [fid, n] : nodes_) {
        if (n.type == NodeType::Furniture) furniture.push_back(fid);
    }

    if (options.random_edges) {
        std::vector<EdgeKey> pool;
        for (NodeId f : furniture) {
            for (Relation r : kRelations) pool.push_back({f, id, r});
        }
        Rng rng(derive_seed(options.seed, "random_edges", description));
        const std::size_t k = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(options.random_count));
        for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
        for (std::size_t i = 0; i < k; ++i) ensure_edge(pool[i], true);
        return id;
    }

    struct Candidate {
        double p;
        EdgeKey key;
    };
    std::vector<Candidate> all;
    for (NodeId f : furniture) {
        const SGMNode& fn = nodes_.at(f);
        const std::string& room = nodes_.at(fn.room).label;
        for (Relation r : kRelations) {
            const double p = priors_->probs.placement_prob({room, fn.label, label, r});
            if (p > 0.0) all.push_back({p, {f, id, r}});
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) { return a.p > b.p; });

    auto existing = by_child_.find(id);
    int count = existing == by_child_.end() ? 0 : static_cast<int>(existing->second.size());
    for (const auto& c : all) {
        if (c.p >= options.threshold && !edges_.contains(c.key)) {
            ensure_edge(c.key, true);
            ++count;
        }
    }
    for (const auto& c : all) {
        if (count >= options.min_k) break;
        if (!edges_.contains(c.key)) {
            ensure_edge(c.key, true);
            ++count;
        }
    }
    if (options.cover_all_furniture) {
        std::set<NodeId> covered;
        for (const EdgeKey& k : by_child_[id]) covered.insert(k.parent);
        for (NodeId f : furniture) {
            if (covered.contains(f)) continue;
            // the relation this furniture class most often holds objects with
            const SGMNode& fn = nodes_.at(f);
            const std::string& room = nodes_.at(fn.room).label;
            Relation best = Relation::OnTop;
            double best_mass = 0.0;
            for (Relation r : kRelations) {
                double mass = 0.0;
                for (const auto& o : priors_->objects) mass += priors_->probs.placement_prob({room, fn.label, o, r});
                if (mass > best_mass) {
                    best_mass = mass;
                    best = r;
                }
            }
            ensure_edge({f, id, best}, true);
        }
    }
    return id;
}

std::vector<EdgeKey> SceneGraphMemory::candidate_edges(NodeId query) const {
    if (!query_ids_.contains(query)) throw Error("node " + std::to_string(query) + " is not a query");
    auto it = by_child_.find(query);
    if (it == by_child_.end()) return {};
    std::vector<EdgeKey> out(it->second.begin(), it->second.end());
    std::sort(out.begin(), out.end(), [](const EdgeKey& a, const EdgeKey& b) {
        return std::tie(a.parent, a.relation) < std::tie(b.parent, b.relation);
    });
    return out;
}

std::vector<double> featurize_node(const SGMNode& n, int t, const FeatureMask& mask) {
    std::vector<double> v(kNodeFeatureDim, 0.0);
    if (mask.semantic) std::copy_n(n.embedding.begin(), std::min<std::size_t>(n.embedding.size(), kEmbeddingDim), v.begin());
    if (mask.temporal) {
        const int never = t + 1;
        v[96] = kNodeTemporalScale * (n.last_observed_t ? t - *n.last_observed_t : never);
        v[97] = kNodeTemporalScale * n.times_observed;
        v[98] = kNodeTemporalScale * (n.last_moved_t ? t - *n.last_moved_t : never);
        v[99] = n.observed_move_frequency();
    }
    v[100 + static_cast<int>(n.type)] = 1.0;
    return v;
}

std::vector<double> featurize_edge(const SGMEdge& e, const SGMNode& parent, const SGMNode& child, int t,
                                   const FeatureMask& mask) {
    std::vector<double> v(kEdgeFeatureDim, 0.0);
    if (mask.semantic) v[0] = cosine_similarity(parent.embedding, child.embedding);
    if (mask.temporal) {
        const int never = t + 1;
        v[1] = kEdgeTemporalScale * (e.last_observed_t ? t - *e.last_observed_t : never);
        v[2] = kEdgeTemporalScale * (e.last_state_change_t ? t - *e.last_state_change_t : never);
        v[3] = kEdgeTemporalScale * e.times_observed;
        v[4] = kEdgeTemporalScale * e.times_true;
        v[5] = e.true_frequency();
        v[6] = kEdgeTemporalScale * e.times_changed;
        v[7] = e.last_state == EdgeState::True ? 1.0 : e.last_state == EdgeState::False ? 0.0 : 0.5;
    }
    if (mask.prior) v[8] = e.prior_prob;
    v[9 + static_cast<int>(e.key.relation)] = 1.0;
    return v;
}

std::vector<double> SceneGraphMemory::featurize_node(NodeId id, const FeatureMask& mask) const {
    return scenemem::featurize_node(node(id), t_, mask);
}

std::vector<double> SceneGraphMemory::featurize_edge(const EdgeKey& key, const FeatureMask& mask) const {
    return scenemem::featurize_edge(edge(key), node(key.parent), node(key.child), t_, mask);
}

SceneGraphMemory SceneGraphMemory::restricted_to(const std::vector<NodeId>& queries) const {
    SceneGraphMemory out(priors_, embeddings_);
    out.t_ = t_;
    for (NodeId q : queries) {
        out.nodes_.emplace(q, node(q));
        out.query_ids_.insert(q);
        for (const EdgeKey& k : candidate_edges(q)) {
            out.edges_.emplace(k, edges_.at(k));
            out.nodes_.emplace(k.parent, node(k.parent));
        }
    }
    out.rebuild_indices();
    return out;
}

SceneGraphMemory SceneGraphMemory::from_parts(int t, std::vector<SGMNode> nodes, std::vector<SGMEdge> edges,
                                              const std::set<NodeId>& query_ids) {
    SceneGraphMemory out;
    out.t_ = t;
    for (auto& n : nodes) {
        const NodeId id = n.id;
        if (!out.nodes_.emplace(id, std::move(n)).second) throw Error("duplicate memory node " + std::to_string(id));
    }
    for (auto& e : edges) {
        if (!out.nodes_.contains(e.key.parent) || !out.nodes_.contains(e.key.child)) {
            throw Error("memory edge references an unknown node");
        }
        out.edges_.emplace(e.key, e);
    }
    for (NodeId q : query_ids) {
        if (!out.nodes_.contains(q)) throw Error("query id " + std::to_string(q) + " is not a memory node");
    }
    out.query_ids_ = query_ids;
    out.rebuild_indices();
    return out;
}

void SceneGraphMemory::rebuild_indices() {
    object_ids_.clear();
    by_parent_.clear();
    by_child_.clear();
    next_object_id_ = kObjectIdBase;
    for (const auto& [id, n] : nodes_) {
        if (n.type != NodeType::Object) continue;
        object_ids_[n.description] = id;
        next_object_id_ = std::max(next_object_id_, id + 1);
    }
    for (const auto& [k, e] : edges_) {
        by_parent_[k.parent].insert(k);
        by_child_[k.child].insert(k);
    }
}

}  // namespace scenemem
