#include "selftest.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "scenemem/dataset.hpp"
#include "scenemem/dhs.hpp"
#include "scenemem/embedding.hpp"
#include "scenemem/eval.hpp"
#include "scenemem/igridson.hpp"
#include "scenemem/nep.hpp"
#include "scenemem/policies.hpp"
#include "scenemem/priors.hpp"

using namespace scenemem;

namespace {

struct Check {
    std::string name;
    std::function<std::string()> body;  // empty string on success
};

std::string composition(const PriorsGraph& p) {
    for (Seed s = 1; s <= 5; ++s) {
        const EnvInstance env = make_env(p, {}, {}, s);
        if (env.scene.count(NodeType::Room) != 4 || env.scene.count(NodeType::Furniture) != 32 ||
            env.scene.count(NodeType::Object) != 192)
            return "wrong counts for seed " + std::to_string(s);
    }
    return {};
}

std::string evolution(const PriorsGraph& p) {
    EnvInstance env = make_env(p, {}, {}, 11);
    for (int k = 0; k < 200; ++k) {
        evolve(env, p);
        if (env.object_count() < env.min_object_count() || env.object_count() > env.max_object_count())
            return "object count " + std::to_string(env.object_count()) + " at t=" + std::to_string(env.t);
    }
    return {};
}

std::string beta() {
    const BetaBelief b = beta_from_prior(0.5, 0.05);
    if (std::abs(b.alpha - 2.0) > 1e-12 || std::abs(b.beta - 2.0) > 1e-12) return "beta_from_prior(0.5, 0.05)";
    if (std::abs(posterior_predictive(b, 3, 3) - 5.0 / 7.0) > 1e-12) return "posterior_predictive";
    return {};
}

std::string ranking() {
    if (std::abs(ndcg({0.9, 0.1}, {0, 1}) - 1.0 / std::log2(3.0)) > 1e-12) return "second of two";
    if (ndcg({0.1, 0.5, 0.2}, {0, 1, 0}) != 1.0) return "ranked first";
    return {};
}

std::string layout() {
    const GridLayout g = load_layout(bundled_layout_path());
    if (g.slots.size() != 21) return "expected 21 slots";
    for (int s = 0; s < static_cast<int>(g.slots.size()); ++s) shortest_path_len(g, g.start, s);
    return {};
}

std::string round_trip(const PriorsGraph& p) {
    HashEmbeddingProvider emb;
    TaskConfig cfg;
    cfg.n_envs = 1;
    cfg.steps = 3;
    cfg.seed = 5;
    const auto policy = make_policy(PolicyKind::Bayesian);
    const auto records = collect_records(cfg, p, *policy, emb);
    const auto path = std::filesystem::temp_directory_path() / "scenemem-selftest.sgmd";
    write_dataset(path, records);
    const auto back = read_dataset(path, emb);
    std::filesystem::remove(path);
    if (back != records) return "records differ after reload";

    const NepParams params = NepParams::init({}, 3);
    const auto feats = featurize_records(records, {});
    std::vector<const QueryFeatures*> all;
    for (const auto& r : feats)
        for (const auto& q : r) all.push_back(&q);
    const auto joint = nep_predict(params, all);
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto single = nep_predict(params, {all[i]});
        for (std::size_t j = 0; j < single[0].size(); ++j)
            if (std::abs(single[0][j] - joint[i][j]) > 1e-9) return "batched and single forward differ";
    }
    return {};
}

}  // namespace

bool run_selftest(std::ostream& out) {
    bool ok = true;
    PriorsGraph p;
    try {
        p = load_priors(bundled_priors_path());
        out << "ok   priors load\n";
    } catch (const std::exception& e) {
        out << "FAIL priors load: " << e.what() << "\n";
        return false;
    }
    const std::vector<Check> checks = {
        {"scene composition", [&] { return composition(p); }},
        {"evolution bounds", [&] { return evolution(p); }},
        {"beta closed forms", beta},
        {"ndcg", ranking},
        {"layout reachability", layout},
        {"dataset round trip and batching", [&] { return round_trip(p); }},
    };
    for (const auto& c : checks) {
        std::string msg;
        try {
            msg = c.body();
        } catch (const std::exception& e) {
            msg = e.what();
        }
        out << (msg.empty() ? "ok   " : "FAIL ") << c.name << (msg.empty() ? "" : ": " + msg) << "\n";
        ok = ok && msg.empty();
    }
    return ok;
}
