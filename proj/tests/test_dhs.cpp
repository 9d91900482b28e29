#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "scenemem/dhs.hpp"

using namespace scenemem;

namespace {

double sum_locations(const std::vector<InstanceLocation>& v) {
    double s = 0;
    for (const auto& l : v) s += l.probability;
    return s;
}

SceneDims kitchen_dims(int furniture, int objects) {
    SceneDims d;
    d.rooms = {"kitchen"};
    d.furniture_per_room = furniture;
    d.objects_per_furniture = objects;
    return d;
}

}  // namespace

TEST(ClassNoise, IdentitySpecKeepsPriors) {
    const PriorsGraph& p = fixtures::bundled();
    const EnvProbs ep = apply_class_noise(p, {0.0, 0.0}, 5);
    EXPECT_EQ(ep.room_furniture, p.probs.room_furniture);
    ASSERT_EQ(ep.furniture_object.size(), p.probs.furniture_object.size());
    for (const auto& [k, v] : p.probs.furniture_object) EXPECT_NEAR(ep.placement_prob(k), v, 1e-12);
}

TEST(ClassNoise, GroupsStayNormalized) {
    const PriorsGraph& p = fixtures::bundled();
    const EnvProbs ep = apply_class_noise(p, {}, 17);
    std::map<std::pair<std::string, std::string>, double> sums;
    for (const auto& [k, v] : ep.furniture_object) {
        EXPECT_GT(v, 0.0);
        sums[{k.room, k.object}] += v;
    }
    for (const auto& [g, s] : sums) EXPECT_NEAR(s, 1.0, 1e-9);
    EXPECT_NE(ep, p.probs);
}

TEST(ClassNoise, SingleSurvivorGetsAllMass) {
    const PriorsGraph p = fixtures::toy_priors();
    int seen = 0;
    for (Seed s = 0; s < 200 && seen < 5; ++s) {
        const EnvProbs ep = apply_class_noise(p, {0.5, 0.25}, s);
        const auto g = ep.group("kitchen", "mug");
        if (g.size() != 1) continue;
        ++seen;
        EXPECT_DOUBLE_EQ(g[0].second, 1.0);
    }
    EXPECT_GT(seen, 0);
}

TEST(ClassNoise, FullyZeroedGroupRestoresBestPrior) {
    const PriorsGraph p = fixtures::toy_priors();
    const EnvProbs ep = apply_class_noise(p, {1.0, 0.0}, 3);
    const auto mug = ep.group("kitchen", "mug");
    ASSERT_EQ(mug.size(), 1u);
    EXPECT_EQ(mug[0].first.furniture, "shelf");
    EXPECT_DOUBLE_EQ(mug[0].second, 1.0);
    const auto plate = ep.group("kitchen", "plate");
    ASSERT_EQ(plate.size(), 1u);
    EXPECT_EQ(plate[0].first.furniture, "cabinet");
}

TEST(SampleScene, DefaultCompositionEverySeed) {
    const PriorsGraph& p = fixtures::bundled();
    for (Seed s = 0; s < 25; ++s) {
        const EnvInstance env = make_env(p, {}, {}, s);
        EXPECT_EQ(env.scene.count(NodeType::Room), 4u);
        EXPECT_EQ(env.scene.count(NodeType::Furniture), 32u);
        EXPECT_EQ(env.scene.count(NodeType::Object), 192u);
        EXPECT_NO_THROW(env.scene.check_invariants());
    }
}

TEST(SampleScene, MinimalChain) {
    const PriorsGraph& p = fixtures::bundled();
    const SceneGraph g = sample_scene(p, p.probs, kitchen_dims(1, 1), 4);
    EXPECT_EQ(g.nodes().size(), 5u);
    EXPECT_EQ(g.count(NodeType::House), 1u);
    EXPECT_EQ(g.count(NodeType::Floor), 1u);
    EXPECT_NO_THROW(g.check_invariants());
}

TEST(SampleScene, RespectsMaxCountAndAdjectiveRules) {
    const PriorsGraph& p = fixtures::bundled();
    for (Seed s = 0; s < 10; ++s) {
        const EnvInstance env = make_env(p, {}, {}, s);
        std::map<std::string, int> counts;
        for (const auto& [id, n] : env.scene.nodes()) {
            if (n.type != NodeType::Furniture && n.type != NodeType::Object) continue;
            ++counts[n.label];
            const auto& meta = p.metadata(n.label);
            EXPECT_GE(n.adjectives.size(), meta.adjective_categories.empty() ? 0u : 1u);
            EXPECT_LE(n.adjectives.size(), meta.adjective_categories.size());
        }
        for (const auto& [label, c] : counts) EXPECT_LE(c, p.metadata(label).max_count) << label;
    }
}

TEST(SampleScene, TooManyFurnitureIsAnError) {
    const PriorsGraph p = fixtures::toy_priors();
    // shelf allows 3 and cabinet 2
    EXPECT_NO_THROW(sample_scene(p, p.probs, kitchen_dims(5, 1), 1));
    try {
        sample_scene(p, p.probs, kitchen_dims(6, 1), 1);
        FAIL();
    } catch (const SamplingError& e) {
        EXPECT_NE(std::string(e.what()).find("kitchen"), std::string::npos);
    }
}

TEST(SampleScene, SameSeedSameScene) {
    const PriorsGraph& p = fixtures::bundled();
    EXPECT_EQ(make_env(p, {}, {}, 9), make_env(p, {}, {}, 9));
}

TEST(SampleScene, DistinctSeedsDistinctEnvironments) {
    const PriorsGraph& p = fixtures::bundled();
    std::vector<EnvProbs> seen;
    for (Seed s = 0; s < 100; ++s) {
        const EnvProbs ep = apply_class_noise(p, {}, derive_seed(s, "class_noise"));
        for (const auto& o : seen) ASSERT_NE(o, ep);
        seen.push_back(ep);
    }
}

TEST(InstanceNoise, EqualSplitAcrossInstances) {
    PriorsGraph p = fixtures::toy_priors();
    p.probs.furniture_object = {{{"kitchen", "shelf", "mug", Relation::OnTop}, 0.8},
                                {{"kitchen", "cabinet", "mug", Relation::In}, 0.2}};
    SceneGraph g;
    g.add_node({0, NodeType::House, "house", {}});
    g.add_node({1, NodeType::Floor, "floor", {}});
    g.add_edge({0, 1, Relation::Contains});
    g.add_node({2, NodeType::Room, "kitchen", {}});
    g.add_edge({1, 2, Relation::Contains});
    for (NodeId f : {3, 4}) {
        g.add_node({f, NodeType::Furniture, "shelf", {}});
        g.add_edge({2, f, Relation::Contains});
    }
    g.add_node({5, NodeType::Furniture, "cabinet", {}});
    g.add_edge({2, 5, Relation::Contains});
    g.add_node({6, NodeType::Object, "mug", {"red"}});
    g.add_edge({3, 6, Relation::OnTop});

    const Dynamics d = apply_instance_noise(p.probs, g, {0.0, 0.0}, 1);
    const auto& locs = d.locations("red mug");
    ASSERT_EQ(locs.size(), 3u);
    EXPECT_NEAR(d.probability("red mug", 3, Relation::OnTop), 0.4, 1e-12);
    EXPECT_NEAR(d.probability("red mug", 4, Relation::OnTop), 0.4, 1e-12);
    EXPECT_NEAR(d.probability("red mug", 5, Relation::In), 0.2, 1e-12);

    // brute force: class mass divided by same-class instance count, renormalized
    std::map<std::pair<NodeId, Relation>, double> brute;
    double total = 0;
    for (NodeId f : {3, 4, 5}) {
        const std::string cls = g.node(f).label;
        for (Relation r : kRelations) {
            const double cm = p.probs.placement_prob({"kitchen", cls, "mug", r});
            if (cm == 0) continue;
            const double w = cm / (cls == "shelf" ? 2.0 : 1.0);
            brute[{f, r}] = w;
            total += w;
        }
    }
    for (const auto& l : locs) EXPECT_NEAR(l.probability, (brute[{l.furniture, l.relation}] / total), 1e-12);
}

TEST(InstanceNoise, DistributionsSumToOneAndAreDeterministic) {
    const PriorsGraph& p = fixtures::bundled();
    const EnvInstance env = make_env(p, {}, {}, 21);
    for (const auto& [desc, locs] : env.dynamics.by_description) {
        EXPECT_NEAR(sum_locations(locs), 1.0, 1e-9) << desc;
        for (const auto& l : locs) EXPECT_EQ(env.scene.node(l.furniture).type, NodeType::Furniture);
    }
    EXPECT_EQ(apply_instance_noise(env.env_probs, env.scene, {}, env.instance_seed), env.dynamics);
}

TEST(Evolve, CountStaysWithinBounds) {
    const PriorsGraph& p = fixtures::bundled();
    EnvInstance env = make_env(p, {}, {}, 2);
    ASSERT_EQ(env.initial_object_count, 192);
    EXPECT_EQ(env.min_object_count(), 183);
    EXPECT_EQ(env.max_object_count(), 201);
    const auto rooms = env.scene.ids_of_type(NodeType::Room);
    const auto furniture = env.scene.ids_of_type(NodeType::Furniture);
    for (int k = 0; k < 300; ++k) {
        evolve(env, p);
        ASSERT_GE(env.object_count(), 183);
        ASSERT_LE(env.object_count(), 201);
    }
    EXPECT_EQ(env.t, 300);
    EXPECT_EQ(env.scene.ids_of_type(NodeType::Room), rooms);
    EXPECT_EQ(env.scene.ids_of_type(NodeType::Furniture), furniture);
    EXPECT_NO_THROW(env.scene.check_invariants());
    for (const auto& [desc, locs] : env.dynamics.by_description) EXPECT_NEAR(sum_locations(locs), 1.0, 1e-9);
}

TEST(Evolve, StaticNodesKeepTheNodeSet) {
    const PriorsGraph& p = fixtures::bundled();
    EnvInstance env = make_env(p, {}, {}, 8, false);
    std::set<NodeId> ids;
    for (const auto& [id, n] : env.scene.nodes()) ids.insert(id);
    for (int k = 0; k < 100; ++k) {
        const EvolveStats s = evolve(env, p);
        EXPECT_EQ(s.added, 0);
        EXPECT_EQ(s.removed, 0);
    }
    std::set<NodeId> after;
    for (const auto& [id, n] : env.scene.nodes()) after.insert(id);
    EXPECT_EQ(ids, after);
}

TEST(Evolve, OnlyTheMobileObjectMoves) {
    nlohmann::json d = fixtures::toy_priors_json();
    d["objects"][0]["max_count"] = 1;        // one mug
    d["objects"][1]["move_frequency"] = 0.0;  // plates never move
    const PriorsGraph p = parse_priors(d.dump());
    EnvInstance env;
    NodeId mug = 0;
    for (Seed s = 0; mug == 0 && s < 50; ++s) {
        env = make_env(p, {0.0, 0.0}, kitchen_dims(2, 3), s);
        for (NodeId o : env.scene.ids_of_type(NodeType::Object))
            if (env.scene.node(o).label == "mug") mug = o;
    }
    ASSERT_NE(mug, 0u);
    std::map<NodeId, NodeId> start;
    for (NodeId o : env.scene.ids_of_type(NodeType::Object)) start[o] = env.scene.parent_edge(o).parent;
    int mug_moves = 0;
    for (int k = 0; k < 60; ++k) {
        const EvolveStats s = evolve(env, p);
        for (NodeId o : s.relocated) EXPECT_EQ(o, mug);
        mug_moves += static_cast<int>(s.relocated.size());
    }
    for (const auto& [o, f] : start)
        if (o != mug) EXPECT_EQ(env.scene.parent_edge(o).parent, f);
    EXPECT_GT(mug_moves, 0);
}

TEST(Evolve, MovedFractionWithUniformFrequency) {
    PriorsGraph p = fixtures::bundled();
    for (auto& [label, m] : p.labels)
        if (m.move_frequency) m.move_frequency = 0.5;
    EnvInstance env = make_env(p, {}, {}, 12);
    double frac = 0;
    const int steps = 2000;
    for (int k = 0; k < steps; ++k) {
        const int n = env.object_count();
        const EvolveStats s = evolve(env, p);
        frac += static_cast<double>(s.sampled_to_move) / n;
    }
    EXPECT_NEAR(frac / steps, 0.05, 0.005);
}

TEST(Evolve, SeededStepIsDeterministic) {
    const PriorsGraph& p = fixtures::bundled();
    EnvInstance a = make_env(p, {}, {}, 30);
    EnvInstance b = a;
    for (int k = 0; k < 20; ++k) {
        evolve(a, p);
        evolve(b, p);
    }
    EXPECT_EQ(a, b);
}

TEST(Snapshot, JsonRoundTripIsExact) {
    const PriorsGraph& p = fixtures::bundled();
    EnvInstance env = make_env(p, {}, {}, 14);
    for (int k = 0; k < 7; ++k) evolve(env, p);
    EnvInstance back = env_from_json(nlohmann::json::parse(to_json(env).dump()));
    EXPECT_EQ(back, env);
    evolve(env, p);
    evolve(back, p);
    EXPECT_EQ(back, env);
}
