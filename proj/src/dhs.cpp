#include "scenemem/dhs.hpp"

#include <algorithm>
#include <numeric>

namespace scenemem {

using nlohmann::json;

const std::vector<InstanceLocation>& Dynamics::locations(const std::string& description) const {
    auto it = by_description.find(description);
    if (it == by_description.end()) throw Error("no dynamics for '" + description + "'");
    return it->second;
}

double Dynamics::probability(const std::string& description, NodeId furniture, Relation relation) const {
    auto it = by_description.find(description);
    if (it == by_description.end()) return 0.0;
    for (const auto& l : it->second) {
        if (l.furniture == furniture && l.relation == relation) return l.probability;
    }
    return 0.0;
}

namespace {

std::string placement_key_string(const PlacementKey& k) {
    return k.room + "|" + k.furniture + "|" + k.object + "|" + std::string(to_string(k.relation));
}

// Multiplicative noise factor for one edge: 0 with probability zero_prob,
// otherwise uniform in [1 - scale_limit, 1 + scale_limit].
double noise_factor(const NoiseSpec& spec, Seed seed) {
    Rng rng(seed);
    if (rng.uniform() < spec.zero_prob) return 0.0;
    return rng.uniform(1.0 - spec.scale_limit, 1.0 + spec.scale_limit);
}

std::vector<std::string> sample_adjectives(const PriorsGraph& p, const LabelMetadata& m, Rng& rng) {
    const std::size_t n = m.adjective_categories.size();
    if (n == 0) return {};
    const std::size_t k = 1 + rng.index(n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
    std::sort(idx.begin(), idx.begin() + static_cast<long>(k));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& cat = p.adjective_category(m.adjective_categories[idx[i]]);
        out.push_back(cat.adjectives[rng.index(cat.adjectives.size())]);
    }
    return out;
}

// Class-level mass of `object_class` spread over the furniture instances of the
// scene: each (furniture instance, relation) receives the class probability
// divided by the number of same-class instances in its room.
std::vector<InstanceLocation> class_level_candidates(const EnvProbs& ep, const SceneGraph& scene,
                                                     const std::string& object_class) {
    std::map<std::pair<NodeId, std::string>, int> instances;
    const auto furniture = scene.ids_of_type(NodeType::Furniture);
    for (NodeId f : furniture) ++instances[{scene.parent_edge(f).parent, scene.node(f).label}];
    std::vector<InstanceLocation> out;
    for (NodeId f : furniture) {
        const NodeId room = scene.parent_edge(f).parent;
        const std::string& cls = scene.node(f).label;
        const int n = instances[{room, cls}];
        for (Relation r : kRelations) {
            const double p = ep.placement_prob({scene.node(room).label, cls, object_class, r});
            if (p > 0.0) out.push_back({f, r, p / n});
        }
    }
    return out;
}

std::vector<InstanceLocation> instance_distribution(const EnvProbs& ep, const SceneGraph& scene,
                                                    const NoiseSpec& spec, Seed seed,
                                                    const std::string& description,
                                                    const std::string& object_class,
                                                    const InstanceLocation& current) {
    std::vector<InstanceLocation> base = class_level_candidates(ep, scene, object_class);
    if (base.empty()) return {{current.furniture, current.relation, 1.0}};
    std::vector<InstanceLocation> noisy = base;
    double total = 0.0;
    for (auto& c : noisy) {
        const std::string key =
            description + "|" + std::to_string(c.furniture) + "|" + std::string(to_string(c.relation));
        c.probability *= noise_factor(spec, derive_seed(seed, "instance", key));
        total += c.probability;
    }
    std::vector<InstanceLocation> out;
    if (!(total > 0.0)) {
        auto best = std::max_element(base.begin(), base.end(), [](const auto& a, const auto& b) {
            return a.probability < b.probability;
        });
        out.push_back({best->furniture, best->relation, 1.0});
        return out;
    }
    for (const auto& c : noisy) {
        if (c.probability > 0.0) out.push_back({c.furniture, c.relation, c.probability / total});
    }
    return out;
}

}  // namespace

EnvProbs apply_class_noise(const PriorsGraph& p, const NoiseSpec& spec, Seed seed) {
    EnvProbs out;
    out.room_furniture = p.probs.room_furniture;
    std::map<std::pair<std::string, std::string>, std::vector<PlacementKey>> groups;
    for (const auto& [key, prob] : p.probs.furniture_object) {
        out.furniture_object[key] = prob * noise_factor(spec, derive_seed(seed, "class", placement_key_string(key)));
        groups[{key.room, key.object}].push_back(key);
    }
    for (const auto& [g, keys] : groups) {
        double total = 0.0;
        for (const auto& k : keys) total += out.furniture_object[k];
        if (total > 0.0) {
            for (const auto& k : keys) out.furniture_object[k] /= total;
            continue;
        }
        const PlacementKey* best = &keys.front();
        for (const auto& k : keys) {
            if (p.probs.placement_prob(k) > p.probs.placement_prob(*best)) best = &k;
        }
        out.furniture_object[*best] = 1.0;
    }
    std::erase_if(out.furniture_object, [](const auto& e) { return e.second == 0.0; });
    return out;
}

SceneGraph sample_scene(const PriorsGraph& p, const EnvProbs& ep, const SceneDims& dims, Seed seed) {
    SceneGraph sg;
    NodeId next = 0;
    const NodeId house = next++;
    const NodeId floor = next++;
    sg.add_node({house, NodeType::House, "house", {}});
    sg.add_node({floor, NodeType::Floor, "floor", {}});
    sg.add_edge({house, floor, Relation::Contains});

    std::vector<NodeId> rooms;
    for (const auto& room : dims.rooms) {
        if (!p.has_label(room, LabelCategory::Room)) throw SamplingError("unknown room '" + room + "'");
        const NodeId id = next++;
        sg.add_node({id, NodeType::Room, room, {}});
        sg.add_edge({floor, id, Relation::Contains});
        rooms.push_back(id);
    }

    std::map<std::string, int> furniture_count;
    for (NodeId room_id : rooms) {
        const std::string& room = sg.node(room_id).label;
        Rng rng(derive_seed(seed, "furniture", room));
        std::vector<std::string> classes;
        if (auto it = dims.fixed_furniture.find(room); it != dims.fixed_furniture.end()) {
            classes = it->second;
            for (const auto& c : classes) {
                if (!p.has_label(c, LabelCategory::Furniture)) {
                    throw SamplingError("room '" + room + "': unknown furniture '" + c + "'");
                }
            }
        } else {
            for (int i = 0; i < dims.furniture_per_room; ++i) {
                std::vector<double> w;
                for (const auto& f : p.furniture) {
                    const auto& m = p.metadata(f);
                    const bool full = furniture_count[f] >= m.max_count;
                    w.push_back(full ? 0.0 : ep.room_furniture_prob(room, f) * m.sample_prob);
                }
                const std::size_t k = rng.weighted_index(w);
                if (k == w.size()) {
                    throw SamplingError("room '" + room + "': fewer eligible furniture labels than the " +
                                        std::to_string(dims.furniture_per_room) + " requested");
                }
                classes.push_back(p.furniture[k]);
                ++furniture_count[p.furniture[k]];
            }
        }
        for (const auto& c : classes) {
            const NodeId id = next++;
            sg.add_node({id, NodeType::Furniture, c, sample_adjectives(p, p.metadata(c), rng)});
            sg.add_edge({room_id, id, Relation::Contains});
        }
    }

    // (room, furniture) -> object -> per-relation probabilities
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::array<double, 4>>> index;
    for (const auto& [k, prob] : ep.furniture_object) {
        index[{k.room, k.furniture}][k.object][static_cast<std::size_t>(k.relation)] += prob;
    }
    std::map<std::string, int> object_count;
    for (NodeId f : sg.ids_of_type(NodeType::Furniture)) {
        const NodeId room_id = sg.parent_edge(f).parent;
        const std::string& room = sg.node(room_id).label;
        const std::string& cls = sg.node(f).label;
        const auto& options = index[{room, cls}];
        Rng rng(derive_seed(seed, "objects", f));
        for (int i = 0; i < dims.objects_per_furniture; ++i) {
            std::vector<const std::string*> labels;
            std::vector<double> w;
            for (const auto& o : p.objects) {
                auto it = options.find(o);
                if (it == options.end()) continue;
                const auto& m = p.metadata(o);
                const double mass = it->second[0] + it->second[1] + it->second[2] + it->second[3];
                labels.push_back(&o);
                w.push_back(object_count[o] >= m.max_count ? 0.0 : mass * m.sample_prob);
            }
            const std::size_t k = rng.weighted_index(w);
            if (k == w.size()) {
                throw SamplingError("room '" + room + "': furniture '" + cls + "' has no eligible objects left");
            }
            const std::string& label = *labels[k];
            ++object_count[label];
            const auto& rel_probs = options.at(label);
            const std::size_t r = rng.weighted_index(rel_probs);
            const NodeId id = next++;
            sg.add_node({id, NodeType::Object, label, sample_adjectives(p, p.metadata(label), rng)});
            sg.add_edge({f, id, kRelations[r]});
        }
    }
    return sg;
}

Dynamics apply_instance_noise(const EnvProbs& ep, const SceneGraph& scene, const NoiseSpec& spec, Seed seed) {
    Dynamics d;
    for (NodeId id : scene.ids_of_type(NodeType::Object)) {
        const SceneNode& n = scene.node(id);
        const std::string desc = n.description();
        if (d.by_description.contains(desc)) continue;
        const SceneEdge& e = scene.parent_edge(id);
        d.by_description[desc] = instance_distribution(ep, scene, spec, seed, desc, n.label, {e.parent, e.relation, 1.0});
    }
    return d;
}

EvolveStats evolve(EnvInstance& env, const PriorsGraph& p, Seed seed) {
    EvolveStats stats;
    Rng rng(seed);
    SceneGraph& sg = env.scene;

    if (env.dynamic_nodes) {
        int count = env.object_count();
        const int floor = env.min_object_count();
        for (NodeId id : sg.ids_of_type(NodeType::Object)) {
            const bool draw = rng.bernoulli(*p.metadata(sg.node(id).label).remove_prob);
            if (draw && count - 1 >= floor) {
                sg.remove_object(id);
                --count;
                ++stats.removed;
            }
        }
    }

    {
        const auto ids = sg.ids_of_type(NodeType::Object);
        const int n = static_cast<int>(ids.size());
        const int m = std::max(1, (5 * n + 50) / 100);
        std::vector<double> w;
        for (NodeId id : ids) w.push_back(*p.metadata(sg.node(id).label).move_frequency);
        std::vector<NodeId> chosen;
        for (int k = 0; k < m; ++k) {
            const std::size_t i = rng.weighted_index(w);
            if (i == w.size()) break;
            w[i] = 0.0;
            chosen.push_back(ids[i]);
        }
        for (NodeId id : chosen) {
            const auto& locs = env.dynamics.locations(sg.node(id).description());
            std::vector<double> probs;
            for (const auto& l : locs) probs.push_back(l.probability);
            const std::size_t i = rng.weighted_index(probs);
            ++stats.sampled_to_move;
            if (i == probs.size()) continue;
            const SceneEdge& cur = sg.parent_edge(id);
            if (cur.parent != locs[i].furniture || cur.relation != locs[i].relation) {
                sg.move_object(id, locs[i].furniture, locs[i].relation);
                stats.relocated.insert(id);
            }
        }
    }

    if (env.dynamic_nodes) {
        int count = env.object_count();
        const int cap = env.max_object_count();
        std::map<std::string, int> per_label;
        for (NodeId id : sg.ids_of_type(NodeType::Object)) ++per_label[sg.node(id).label];
        std::vector<std::string> labels = p.objects;
        std::sort(labels.begin(), labels.end());
        for (const auto& label : labels) {
            if (count >= cap) break;
            const auto& m = p.metadata(label);
            if (!rng.bernoulli(*m.add_prob)) continue;
            if (per_label[label] >= m.max_count) continue;
            const auto base = class_level_candidates(env.env_probs, sg, label);
            if (base.empty()) continue;
            std::vector<double> probs;
            for (const auto& l : base) probs.push_back(l.probability);
            const std::size_t i = rng.weighted_index(probs);
            const NodeId id = env.next_id++;
            sg.add_node({id, NodeType::Object, label, sample_adjectives(p, m, rng)});
            sg.add_edge({base[i].furniture, id, base[i].relation});
            const std::string desc = sg.node(id).description();
            if (!env.dynamics.by_description.contains(desc)) {
                env.dynamics.by_description[desc] = instance_distribution(
                    env.env_probs, sg, env.noise, env.instance_seed, desc, label, {base[i].furniture, base[i].relation, 1.0});
            }
            ++per_label[label];
            ++count;
            ++stats.added;
        }
    }
    ++env.t;
    return stats;
}

EvolveStats evolve(EnvInstance& env, const PriorsGraph& p) {
    return evolve(env, p, derive_seed(env.seed, "evolve", static_cast<std::uint64_t>(env.t)));
}

EnvInstance make_env(const PriorsGraph& p, const NoiseSpec& spec, const SceneDims& dims, Seed seed,
                     bool dynamic_nodes) {
    EnvInstance env;
    env.seed = seed;
    env.noise = spec;
    env.dynamic_nodes = dynamic_nodes;
    env.env_probs = apply_class_noise(p, spec, derive_seed(seed, "class_noise"));
    env.scene = sample_scene(p, env.env_probs, dims, derive_seed(seed, "scene"));
    env.instance_seed = derive_seed(seed, "instance_noise");
    env.dynamics = apply_instance_noise(env.env_probs, env.scene, spec, env.instance_seed);
    env.initial_object_count = env.object_count();
    env.next_id = env.scene.nodes().empty() ? 0 : env.scene.nodes().rbegin()->first + 1;
    return env;
}

json to_json(const EnvInstance& env) {
    json rf = json::array();
    for (const auto& [k, prob] : env.env_probs.room_furniture) {
        rf.push_back({{"room", k.first}, {"furniture", k.second}, {"prob", prob}});
    }
    json fo = json::array();
    for (const auto& [k, prob] : env.env_probs.furniture_object) {
        fo.push_back({{"room", k.room}, {"furniture", k.furniture}, {"object", k.object},
                      {"relation", to_string(k.relation)}, {"prob", prob}});
    }
    json dyn = json::object();
    for (const auto& [desc, locs] : env.dynamics.by_description) {
        json l = json::array();
        for (const auto& x : locs) l.push_back({x.furniture, to_string(x.relation), x.probability});
        dyn[desc] = l;
    }
    return {{"snapshot_format", 1},
            {"t", env.t},
            {"seed", env.seed},
            {"instance_seed", env.instance_seed},
            {"initial_object_count", env.initial_object_count},
            {"next_id", env.next_id},
            {"dynamic_nodes", env.dynamic_nodes},
            {"noise", {{"zero_prob", env.noise.zero_prob}, {"scale_limit", env.noise.scale_limit}}},
            {"env_probs", {{"room_furniture", rf}, {"furniture_object", fo}}},
            {"dynamics", dyn},
            {"scene", to_json(env.scene)}};
}

EnvInstance env_from_json(const json& j) {
    if (j.value("snapshot_format", 0) != 1) throw Error("unsupported environment snapshot format");
    EnvInstance env;
    env.t = j.at("t").get<int>();
    env.seed = j.at("seed").get<Seed>();
    env.instance_seed = j.at("instance_seed").get<Seed>();
    env.initial_object_count = j.at("initial_object_count").get<int>();
    env.next_id = j.at("next_id").get<NodeId>();
    env.dynamic_nodes = j.at("dynamic_nodes").get<bool>();
    env.noise.zero_prob = j.at("noise").at("zero_prob").get<double>();
    env.noise.scale_limit = j.at("noise").at("scale_limit").get<double>();
    for (const json& e : j.at("env_probs").at("room_furniture")) {
        env.env_probs.room_furniture[{e.at("room").get<std::string>(), e.at("furniture").get<std::string>()}] =
            e.at("prob").get<double>();
    }
    for (const json& e : j.at("env_probs").at("furniture_object")) {
        env.env_probs.furniture_object[{e.at("room").get<std::string>(), e.at("furniture").get<std::string>(),
                                        e.at("object").get<std::string>(),
                                        relation_from_string(e.at("relation").get<std::string>())}] =
            e.at("prob").get<double>();
    }
    for (const auto& [desc, locs] : j.at("dynamics").items()) {
        auto& v = env.dynamics.by_description[desc];
        for (const json& x : locs) {
            v.push_back({x.at(0).get<NodeId>(), relation_from_string(x.at(1).get<std::string>()), x.at(2).get<double>()});
        }
    }
    env.scene = scene_graph_from_json(j.at("scene"));
    return env;
}

}  // namespace scenemem
