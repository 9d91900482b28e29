#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "scenemem/eval.hpp"

using namespace scenemem;

namespace {

// kitchen 2 with `shelves` shelves and `cabinets` cabinets; one red mug on the given furniture
EnvInstance one_mug_env(int shelves, int cabinets, NodeId mug_on) {
    EnvInstance env;
    SceneGraph& g = env.scene;
    g.add_node({0, NodeType::House, "house", {}});
    g.add_node({1, NodeType::Floor, "floor", {}});
    g.add_edge({0, 1, Relation::Contains});
    g.add_node({2, NodeType::Room, "kitchen", {}});
    g.add_edge({1, 2, Relation::Contains});
    NodeId id = 3;
    for (int i = 0; i < shelves + cabinets; ++i, ++id) {
        g.add_node({id, NodeType::Furniture, i < shelves ? "shelf" : "cabinet", {}});
        g.add_edge({2, id, Relation::Contains});
    }
    g.add_node({id, NodeType::Object, "mug", {"red"}});
    g.add_edge({mug_on, id, g.node(mug_on).label == "shelf" ? Relation::OnTop : Relation::In});
    return env;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Aggregate, WorkedExample) {
    const auto s = aggregate({{1, 2}, {3, 4}});
    EXPECT_EQ(s.step_mean, (std::vector<double>{2, 3}));
    EXPECT_EQ(s.step_std, (std::vector<double>{1, 1}));
    EXPECT_EQ(s.env_mean, (std::vector<double>{1.5, 3.5}));
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_DOUBLE_EQ(s.std, 1.0);
    const auto one = aggregate({{0.25, 0.75}});
    EXPECT_EQ(one.std, 0.0);
    EXPECT_THROW(aggregate({}), Error);
    EXPECT_THROW(aggregate({{1}, {1, 2}}), Error);
}

TEST(Aggregate, Smoothing) {
    EXPECT_EQ(smooth({1, 2, 3, 4}, 2), (std::vector<double>{1, 1.5, 2.5, 3.5}));
    EXPECT_EQ(smooth({}, 3), std::vector<double>{});
}

TEST(Ndcg, WorkedExamples) {
    EXPECT_DOUBLE_EQ(ndcg({0.9, 0.1}, {1, 0}), 1.0);
    EXPECT_NEAR(ndcg({0.1, 0.9}, {1, 0}), 1.0 / std::log2(3.0), 1e-12);
    EXPECT_EQ(ndcg({0.3, 0.2}, {0, 0}), 0.0);
    // tie keeps candidate order
    EXPECT_DOUBLE_EQ(ndcg({0.5, 0.5}, {1, 0}), 1.0);
    EXPECT_NEAR(ndcg({0.5, 0.5}, {0, 1}), 1.0 / std::log2(3.0), 1e-12);
    // two relevant at ranks 1 and 3
    EXPECT_NEAR(ndcg({3, 2, 1}, {1, 0, 1}), (1 + 0.5) / (1 + 1 / std::log2(3.0)), 1e-12);
    EXPECT_THROW(ndcg({1}, {1, 0}), Error);
}

TEST(Ndcg, BoundedAndPerfectForMatchingScores) {
    Rng rng(6);
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = 1 + rng.index(8);
        std::vector<double> s(n);
        std::vector<int> rel(n);
        for (std::size_t j = 0; j < n; ++j) {
            s[j] = rng.uniform();
            rel[j] = rng.bernoulli(0.3) ? 1 : 0;
        }
        const double v = ndcg(s, rel);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0 + 1e-12);
        std::vector<double> perfect(rel.begin(), rel.end());
        if (std::count(rel.begin(), rel.end(), 1) > 0) EXPECT_NEAR(ndcg(perfect, rel), 1.0, 1e-12);
    }
}

TEST(SampleQuery, BranchesAndFallback) {
    const PriorsGraph& p = fixtures::bundled();
    const EnvInstance env = make_env(p, {}, {}, 1);
    const NodeId moved = env.scene.ids_of_type(NodeType::Object)[5];
    for (Seed s = 0; s < 20; ++s) {
        EXPECT_EQ(sample_query(env, p, {moved}, s, 1.0), env.scene.node(moved).description());
        const std::string d = sample_query(env, p, {}, s, 1.0);
        EXPECT_FALSE(true_locations(env.scene, d).empty());
    }
    EXPECT_EQ(sample_query(env, p, {}, 3), sample_query(env, p, {}, 3));
}

TEST(Names, TaskRoundTrip) {
    for (Task t : {Task::PredictLocation, Task::RelativeLikelihood, Task::FindObject}) {
        EXPECT_EQ(task_from_string(to_string(t)), t);
    }
    EXPECT_THROW(task_from_string("navigate"), Error);
}

TEST(EnvSeed, OffsetShiftsIndices) {
    TaskConfig a, b;
    b.env_offset = 3;
    EXPECT_EQ(env_seed(a, 3), env_seed(b, 0));
    EXPECT_NE(env_seed(a, 0), env_seed(a, 1));
}

TEST(Search, FindsEveryObjectWithinFurnitureCount) {
    const PriorsGraph& p = fixtures::bundled();
    const HashEmbeddingProvider emb;
    const EnvInstance env = make_env(p, {}, {}, 2);
    const auto policy = make_policy(PolicyKind::Priors);
    const int furniture = static_cast<int>(env.scene.count(NodeType::Furniture));
    int k = 0;
    for (NodeId o : env.scene.ids_of_type(NodeType::Object)) {
        if (k++ % 8) continue;
        SceneGraphMemory m(&p, &emb);
        m.add_structure(env.scene);
        const auto r = search_object(env, m, p, *policy, env.scene.node(o).description(), {}, std::nullopt, 0.25, k);
        EXPECT_TRUE(r.success);
        EXPECT_GE(r.actions, 1);
        EXPECT_LE(r.actions, furniture);
        EXPECT_EQ(static_cast<int>(r.visited.size()), r.actions);
        EXPECT_EQ(std::set<NodeId>(r.visited.begin(), r.visited.end()).size(), r.visited.size());
    }
}

TEST(Search, RandomOrderNeedsHalfTheFurnitureOnAverage) {
    const PriorsGraph p = fixtures::toy_priors();
    const HashEmbeddingProvider emb;
    const auto policy = make_policy(PolicyKind::Random);
    QueryOptions q;
    q.cover_all_furniture = true;
    q.threshold = 0.0;
    const int c = 5;
    const int trials = 4000;
    double sum = 0;
    for (int i = 0; i < trials; ++i) {
        const EnvInstance env = one_mug_env(3, 2, 3 + static_cast<NodeId>(i % c));
        SceneGraphMemory m(&p, &emb);
        m.add_structure(env.scene);
        sum += search_object(env, m, p, *policy, "red mug", q, std::nullopt, 0.25, 1000 + i).actions;
    }
    EXPECT_NEAR(sum / trials, (c + 1) / 2.0, 0.1);
}

TEST(Search, CheatingOracleNeedsOneAction) {
    const PriorsGraph& p = fixtures::bundled();
    const HashEmbeddingProvider emb;
    const EnvInstance env = make_env(p, {}, {}, 4);
    PolicyOptions opts;
    opts.oracle_cheat = true;
    const auto oracle = make_policy(PolicyKind::Oracle, opts);
    QueryOptions q;
    q.cover_all_furniture = true;
    int k = 0;
    for (NodeId o : env.scene.ids_of_type(NodeType::Object)) {
        if (k++ % 10) continue;
        SceneGraphMemory m(&p, &emb);
        m.add_structure(env.scene);
        EXPECT_EQ(search_object(env, m, p, *oracle, env.scene.node(o).description(), q, std::nullopt, 0.25, k).actions, 1);
    }
}

TEST(Search, BudgetExhaustion) {
    const PriorsGraph p = fixtures::toy_priors();
    const HashEmbeddingProvider emb;
    // mug on a cabinet; priors rank the shelf's onTop first
    const EnvInstance env = one_mug_env(1, 1, 4);
    SceneGraphMemory m(&p, &emb);
    m.add_structure(env.scene);
    const auto r = search_object(env, m, p, *make_policy(PolicyKind::Priors), "red mug", {}, 1, 0.25, 0);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.actions, 2);
    EXPECT_THROW(search_object(env, m, p, *make_policy(PolicyKind::Priors), "blue plate", {}, 1, 0.25, 0), Error);
}

TEST(Tasks, DeterministicAcrossRunsAndWorkers) {
    const PriorsGraph& p = fixtures::bundled();
    const HashEmbeddingProvider emb;
    const auto policy = make_policy(PolicyKind::Bayesian);
    for (Task t : {Task::PredictLocation, Task::RelativeLikelihood, Task::FindObject}) {
        TaskConfig c;
        c.task = t;
        c.n_envs = 3;
        c.steps = 8;
        c.seed = 17;
        const auto a = run_traces(c, p, *policy, emb);
        c.workers = 3;
        const auto b = run_traces(c, p, *policy, emb);
        EXPECT_EQ(a, b) << to_string(t);
        for (const auto& trace : a) {
            ASSERT_EQ(trace.size(), 8u);
            for (double v : trace) {
                if (t == Task::FindObject) {
                    EXPECT_GE(v, 1.0);
                } else {
                    EXPECT_GE(v, 0.0);
                    EXPECT_LE(v, 1.0);
                }
            }
        }
    }
}

TEST(Tasks, HookSeesEveryQuery) {
    const PriorsGraph& p = fixtures::bundled();
    const HashEmbeddingProvider emb;
    TaskConfig c;
    c.n_envs = 2;
    c.steps = 3;
    c.queries_per_step = 4;
    int calls = 0;
    const StepHook hook = [&](const StepInfo& s) {
        ++calls;
        EXPECT_EQ(s.scores.size(), s.candidates.size());
        EXPECT_LT(s.chosen, s.candidates.size());
        EXPECT_EQ(s.true_locations, true_locations(s.env.scene, s.description));
    };
    // one query per step when predicting a location, several when ranking
    run_task(c, p, *make_policy(PolicyKind::Priors), emb, hook);
    EXPECT_EQ(calls, 2 * 3);
    calls = 0;
    c.task = Task::RelativeLikelihood;
    run_task(c, p, *make_policy(PolicyKind::Priors), emb, hook);
    EXPECT_EQ(calls, 2 * 3 * 4);
}

TEST(Tasks, MetricsFiles) {
    const auto dir = std::filesystem::temp_directory_path() / "scenemem_metrics_test";
    std::filesystem::remove_all(dir);
    write_metrics(dir, aggregate({{1, 0}, {0, 0}}));
    const std::string m = slurp(dir / "metrics.csv");
    EXPECT_EQ(m.rfind("step,mean,std,smoothed_mean\n1,0.5,0.5,0.5\n2,0,0,0.25\n", 0), 0u);
    EXPECT_NE(m.find("overall,0.25,0.25"), std::string::npos);
    EXPECT_EQ(slurp(dir / "env_means.csv").rfind("env,mean\n", 0), 0u);
    std::filesystem::remove_all(dir);
}
