#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "scenemem/priors.hpp"
#include "scenemem/rng.hpp"
#include "scenemem/scene_graph.hpp"

namespace scenemem {

struct NoiseSpec {
    double zero_prob = 0.25;
    double scale_limit = 0.25;

    bool operator==(const NoiseSpec&) const = default;
};

// Environment-specific class-level probabilities.
using EnvProbs = RelationProbs;

struct InstanceLocation {
    NodeId furniture = 0;
    Relation relation = Relation::In;
    double probability = 0.0;

    bool operator==(const InstanceLocation&) const = default;
};

/// Per object description: where it goes when it moves. Entries are sorted by
/// (furniture, relation) and sum to one.
struct Dynamics {
    std::map<std::string, std::vector<InstanceLocation>> by_description;

    const std::vector<InstanceLocation>& locations(const std::string& description) const;
    double probability(const std::string& description, NodeId furniture, Relation relation) const;

    bool operator==(const Dynamics&) const = default;
};

inline const std::vector<std::string> kDefaultRooms = {"kitchen", "living room", "bedroom", "bathroom"};

struct SceneDims {
    std::vector<std::string> rooms = kDefaultRooms;
    int furniture_per_room = 8;
    int objects_per_furniture = 6;
    // When a room has an entry here its furniture classes are taken verbatim
    // instead of being sampled.
    std::map<std::string, std::vector<std::string>> fixed_furniture;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

struct EnvInstance {
    EnvProbs env_probs;
    Dynamics dynamics;
    SceneGraph scene;
    int t = 0;
    int initial_object_count = 0;
    Seed seed = 0;
    // Seed of the instance-level noise; new objects reuse it.
    Seed instance_seed = 0;
    NodeId next_id = 0;
    bool dynamic_nodes = true;
    NoiseSpec noise;

    int object_count() const { return static_cast<int>(scene.count(NodeType::Object)); }
    int min_object_count() const { return (95 * initial_object_count + 99) / 100; }
    int max_object_count() const { return (105 * initial_object_count) / 100; }

    bool operator==(const EnvInstance&) const = default;
};

struct EvolveStats {
    int removed = 0;
    // Objects drawn to move this step (a draw may land on the current location).
    int sampled_to_move = 0;
    int added = 0;
    // Objects whose location changed this step.
    std::set<NodeId> relocated;
};

EnvProbs apply_class_noise(const PriorsGraph& p, const NoiseSpec& spec, Seed seed);

SceneGraph sample_scene(const PriorsGraph& p, const EnvProbs& ep, const SceneDims& dims, Seed seed);

Dynamics apply_instance_noise(const EnvProbs& ep, const SceneGraph& scene, const NoiseSpec& spec, Seed seed);

// Advances `env` one step with the given seed.
EvolveStats evolve(EnvInstance& env, const PriorsGraph& p, Seed seed);
// Advances `env` one step with a seed derived from the environment seed and t.
EvolveStats evolve(EnvInstance& env, const PriorsGraph& p);

EnvInstance make_env(const PriorsGraph& p, const NoiseSpec& spec, const SceneDims& dims, Seed seed,
                     bool dynamic_nodes = true);

nlohmann::json to_json(const EnvInstance& env);
EnvInstance env_from_json(const nlohmann::json& j);

}  // namespace scenemem
