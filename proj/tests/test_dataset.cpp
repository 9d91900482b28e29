#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "scenemem/dataset.hpp"
#include "scenemem/eval.hpp"

using namespace scenemem;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("scenemem_test_" + name);
}

TaskConfig small_config(int envs, int steps) {
    TaskConfig c;
    c.n_envs = envs;
    c.steps = steps;
    c.queries_per_step = 1;
    c.seed = 5;
    return c;
}

}  // namespace

TEST(Dataset, OneRecordPerQuery) {
    const HashEmbeddingProvider emb;
    const auto policy = make_policy(PolicyKind::Priors);
    const auto recs = collect_records(small_config(2, 5), fixtures::bundled(), *policy, emb);
    ASSERT_EQ(recs.size(), 10u);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(recs[i].env_index, static_cast<int>(i / 5));
        EXPECT_EQ(recs[i].query_ids.size(), 1u);
        const auto cands = recs[i].memory.candidate_edges(recs[i].query_ids[0]);
        ASSERT_EQ(recs[i].labels.size(), cands.size());
        for (const auto& k : cands) EXPECT_TRUE(recs[i].labels.contains(k));
    }
}

TEST(Dataset, LabelsMatchTheScene) {
    const PriorsGraph& p = fixtures::bundled();
    EnvInstance env = make_env(p, {}, {}, 3);
    const HashEmbeddingProvider emb;
    SceneGraphMemory m(&p, &emb);
    m.add_structure(env.scene);
    const NodeId obj = env.scene.ids_of_type(NodeType::Object)[7];
    const std::string desc = env.scene.node(obj).description();
    const NodeId q = m.add_query(desc, {0.0, 0});
    const auto cands = m.candidate_edges(q);
    const auto labels = label_candidates(env.scene, desc, cands);
    int positives = 0;
    for (const auto& k : cands) {
        bool truth = false;
        for (NodeId c : env.scene.children(k.parent)) {
            truth |= env.scene.node(c).description() == desc && env.scene.parent_edge(c).relation == k.relation;
        }
        EXPECT_EQ(labels.at(k), truth);
        positives += truth;
    }
    EXPECT_GE(positives, 1);
}

TEST(Dataset, RoundTripIsExact) {
    const HashEmbeddingProvider emb;
    const auto policy = make_policy(PolicyKind::Bayesian);
    const auto recs = collect_records(small_config(2, 4), fixtures::bundled(), *policy, emb);
    const auto path = temp_path("roundtrip.sgmd");
    write_dataset(path, recs);
    const auto back = read_dataset(path, emb);
    EXPECT_EQ(back, recs);
    std::filesystem::remove(path);
}

TEST(Dataset, EmptyDataset) {
    const auto path = temp_path("empty.sgmd");
    write_dataset(path, {});
    EXPECT_TRUE(read_dataset(path, HashEmbeddingProvider{}).empty());
    std::filesystem::remove(path);
}

TEST(Dataset, RejectsForeignAndTruncatedFiles) {
    const HashEmbeddingProvider emb;
    const auto bad = temp_path("bad.sgmd");
    {
        std::ofstream out(bad, std::ios::binary);
        out << "NOPE and more bytes";
    }
    EXPECT_THROW(read_dataset(bad, emb), Error);
    EXPECT_THROW(read_dataset(temp_path("missing.sgmd"), emb), Error);

    const auto policy = make_policy(PolicyKind::Priors);
    const auto recs = collect_records(small_config(1, 2), fixtures::bundled(), *policy, emb);
    write_dataset(bad, recs);
    const auto size = std::filesystem::file_size(bad);
    std::filesystem::resize_file(bad, size / 2);
    EXPECT_THROW(read_dataset(bad, emb), Error);
    std::filesystem::remove(bad);
}
