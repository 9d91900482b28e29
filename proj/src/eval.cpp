#include "scenemem/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <thread>

namespace scenemem {

namespace {

constexpr std::array<std::pair<Task, std::string_view>, 3> kTaskNames = {{
    {Task::PredictLocation, "predict-location"},
    {Task::RelativeLikelihood, "relative-likelihood"},
    {Task::FindObject, "find-object"},
}};

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct EnvRun {
    const TaskConfig& cfg;
    const PriorsGraph& p;
    const Policy& policy;
    const StepHook& hook;
    int index;
    EnvInstance env;
    SceneGraphMemory memory;

    EnvRun(const TaskConfig& c, const PriorsGraph& pr, const Policy& pol, const EmbeddingProvider& emb,
           const StepHook& h, int i)
        : cfg(c), p(pr), policy(pol), hook(h), index(i),
          env(make_env(pr, c.noise, c.dims, env_seed(c, i), c.dynamic_nodes)), memory(&pr, &emb) {
        memory.add_structure(env.scene);
    }

    Seed seed(std::string_view stream, int k = 0) const {
        return derive_seed(env.seed, stream, static_cast<std::uint64_t>(env.t) * 1000 + static_cast<std::uint64_t>(k));
    }

    QueryOptions query_options() const {
        QueryOptions q = cfg.query;
        q.seed = seed("hypothetical");
        return q;
    }

    std::set<NodeId> step_env() {
        EvolveStats stats = evolve(env, p);
        memory.advance_to(env.t);
        return stats.relocated;
    }

    double predict_location(int step) {
        const auto moved = step_env();
        const std::string desc = sample_query(env, p, moved, seed("query"), cfg.moved_branch_prob);
        const NodeId q = memory.add_query(desc, query_options());
        const auto cands = memory.candidate_edges(q);
        const auto truth = true_locations(env.scene, desc);
        if (cands.empty()) return 0.0;
        const auto scores = policy.score({memory, p, &env, q, cands, seed("policy")});
        const std::size_t c = choose(scores);
        const double value = truth.contains(cands[c].parent) ? 1.0 : 0.0;
        if (hook) hook({index, step, env, memory, q, desc, cands, scores, c, truth, value});
        memory.integrate_observation(observe(env.scene, {cands[c].parent}, env.t, {cfg.dropout, {}}, seed("observe")));
        return value;
    }

    double relative_likelihood(int step) {
        const auto moved = step_env();
        std::vector<NodeId> top;
        double total = 0.0;
        for (int k = 0; k < cfg.queries_per_step; ++k) {
            const std::string desc = sample_query(env, p, moved, seed("query", k), cfg.moved_branch_prob);
            const NodeId q = memory.add_query(desc, query_options());
            const auto cands = memory.candidate_edges(q);
            if (cands.empty()) continue;
            const auto truth = true_locations(env.scene, desc);
            const auto scores = policy.score({memory, p, &env, q, cands, seed("policy", k)});
            std::vector<int> rel;
            for (const auto& e : cands) rel.push_back(truth.contains(e.parent) ? 1 : 0);
            const double value = ndcg(scores, rel);
            const std::size_t c = choose(scores);
            if (hook) hook({index, step, env, memory, q, desc, cands, scores, c, truth, value});
            total += value;
            if (std::find(top.begin(), top.end(), cands[c].parent) == top.end()) top.push_back(cands[c].parent);
        }
        if (!top.empty()) {
            memory.integrate_observation(observe(env.scene, top, env.t, {cfg.dropout, {}}, seed("observe")));
        }
        return cfg.queries_per_step > 0 ? total / cfg.queries_per_step : 0.0;
    }

    double find_object() {
        const auto moved = step_env();
        const std::string desc = sample_query(env, p, moved, seed("query"), cfg.moved_branch_prob);
        const auto result = search_object(env, memory, p, policy, desc, query_options(), cfg.max_actions, cfg.dropout,
                                          seed("search"));
        return static_cast<double>(result.actions);
    }
};

}  // namespace

std::string_view to_string(Task t) {
    for (const auto& [task, name] : kTaskNames) {
        if (task == t) return name;
    }
    throw Error("unknown task");
}

Task task_from_string(std::string_view s) {
    for (const auto& [task, name] : kTaskNames) {
        if (name == s) return task;
    }
    throw Error("unknown task '" + std::string(s) + "'");
}

MetricsSummary aggregate(const std::vector<std::vector<double>>& traces) {
    if (traces.empty()) throw Error("cannot aggregate zero runs");
    const std::size_t steps = traces.front().size();
    for (const auto& t : traces) {
        if (t.size() != steps) throw Error("runs have different lengths");
    }
    const double n = static_cast<double>(traces.size());
    MetricsSummary s;
    for (std::size_t i = 0; i < steps; ++i) {
        double sum = 0.0;
        for (const auto& t : traces) sum += t[i];
        const double mean = sum / n;
        double var = 0.0;
        for (const auto& t : traces) var += (t[i] - mean) * (t[i] - mean);
        s.step_mean.push_back(mean);
        s.step_std.push_back(std::sqrt(var / n));
    }
    for (const auto& t : traces) {
        s.env_mean.push_back(t.empty() ? 0.0 : std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size()));
    }
    s.mean = std::accumulate(s.env_mean.begin(), s.env_mean.end(), 0.0) / n;
    double var = 0.0;
    for (double m : s.env_mean) var += (m - s.mean) * (m - s.mean);
    s.std = std::sqrt(var / n);
    return s;
}

std::vector<double> smooth(const std::vector<double>& values, int window) {
    std::vector<double> out;
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum += values[i];
        if (i >= static_cast<std::size_t>(window)) sum -= values[i - static_cast<std::size_t>(window)];
        out.push_back(sum / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window))));
    }
    return out;
}

std::string sample_query(const EnvInstance& env, const PriorsGraph& p, const std::set<NodeId>& moved, Seed seed,
                         double moved_branch_prob) {
    Rng rng(seed);
    const bool from_moved = rng.uniform() < moved_branch_prob;
    if (from_moved && !moved.empty()) {
        auto it = moved.begin();
        std::advance(it, static_cast<long>(rng.index(moved.size())));
        return env.scene.node(*it).description();
    }
    const auto ids = env.scene.ids_of_type(NodeType::Object);
    if (ids.empty()) throw Error("cannot sample a query from a scene without objects");
    std::vector<double> w;
    for (NodeId id : ids) w.push_back(*p.metadata(env.scene.node(id).label).move_frequency);
    std::size_t i = rng.weighted_index(w);
    if (i == w.size()) i = rng.index(ids.size());
    return env.scene.node(ids[i]).description();
}

double ndcg(const std::vector<double>& scores, const std::vector<int>& relevance) {
    if (scores.size() != relevance.size()) throw Error("ndcg: length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double dcg = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) dcg += relevance[order[r]] / std::log2(static_cast<double>(r) + 2.0);
    const int relevant = static_cast<int>(std::count_if(relevance.begin(), relevance.end(), [](int x) { return x > 0; }));
    double ideal = 0.0;
    for (int r = 0; r < relevant; ++r) ideal += 1.0 / std::log2(r + 2.0);
    return ideal > 0.0 ? dcg / ideal : 0.0;
}

Seed env_seed(const TaskConfig& cfg, int env_index) {
    return derive_seed(cfg.seed, "env", static_cast<std::uint64_t>(cfg.env_offset + env_index));
}

SearchResult search_object(const EnvInstance& env, SceneGraphMemory& m, const PriorsGraph& p, const Policy& policy,
                           const std::string& description, const QueryOptions& query, std::optional<int> max_actions,
                           double dropout, Seed seed, const std::function<void(NodeId)>& visit) {
    const auto truth = true_locations(env.scene, description);
    if (truth.empty()) throw Error("search target '" + description + "' is not in the scene");
    const NodeId q = m.add_query(description, query);
    std::set<NodeId> tried;
    bool widened = false;
    SearchResult result;
    while (true) {
        if (max_actions && result.actions >= *max_actions) {
            result.actions = *max_actions + 1;
            return result;
        }
        std::vector<EdgeKey> cands;
        for (const auto& k : m.candidate_edges(q)) {
            if (!tried.contains(k.parent)) cands.push_back(k);
        }
        if (cands.empty() && !widened) {
            QueryOptions wide = query;
            wide.random_edges = false;
            wide.threshold = 0.0;
            m.add_query(description, wide);
            widened = true;
            continue;
        }
        NodeId f = 0;
        if (cands.empty()) {
            const auto furniture = env.scene.ids_of_type(NodeType::Furniture);
            auto it = std::find_if(furniture.begin(), furniture.end(), [&](NodeId x) { return !tried.contains(x); });
            if (it == furniture.end()) throw Error("search exhausted every furniture without finding the target");
            f = *it;
        } else {
            const auto scores = policy.score({m, p, &env, q, cands, derive_seed(seed, "policy", result.actions)});
            f = cands[choose(scores)].parent;
        }
        ++result.actions;
        tried.insert(f);
        result.visited.push_back(f);
        if (visit) visit(f);
        ObserveOptions opts{dropout, description};
        m.integrate_observation(observe(env.scene, {f}, env.t, opts, derive_seed(seed, "observe", result.actions)));
        if (truth.contains(f)) {
            result.success = true;
            return result;
        }
    }
}

std::map<EdgeKey, bool> label_candidates(const SceneGraph& scene, const std::string& description,
                                         const std::vector<EdgeKey>& candidates) {
    std::map<EdgeKey, bool> out;
    for (const auto& k : candidates) {
        bool present = false;
        if (scene.contains(k.parent)) {
            for (NodeId c : scene.children(k.parent)) {
                if (scene.parent_edge(c).relation == k.relation && scene.node(c).description() == description) {
                    present = true;
                    break;
                }
            }
        }
        out[k] = present;
    }
    return out;
}

std::vector<std::vector<double>> run_traces(const TaskConfig& cfg, const PriorsGraph& p, const Policy& policy,
                                            const EmbeddingProvider& embeddings, const StepHook& hook) {
    if (cfg.n_envs <= 0 || cfg.steps < 0) throw Error("task needs a positive environment count");
    std::vector<std::vector<double>> traces(static_cast<std::size_t>(cfg.n_envs));
    parallel_for(cfg.n_envs, cfg.workers, [&](int i) {
        EnvRun run(cfg, p, policy, embeddings, hook, i);
        auto& trace = traces[static_cast<std::size_t>(i)];
        for (int s = 0; s < cfg.steps; ++s) {
            switch (cfg.task) {
                case Task::PredictLocation: trace.push_back(run.predict_location(s)); break;
                case Task::RelativeLikelihood: trace.push_back(run.relative_likelihood(s)); break;
                case Task::FindObject: trace.push_back(run.find_object()); break;
            }
        }
    });
    return traces;
}

MetricsSummary run_task(const TaskConfig& cfg, const PriorsGraph& p, const Policy& policy,
                        const EmbeddingProvider& embeddings, const StepHook& hook) {
    return aggregate(run_traces(cfg, p, policy, embeddings, hook));
}

std::vector<SGMRecord> collect_records(const TaskConfig& cfg, const PriorsGraph& p, const Policy& policy,
                                       const EmbeddingProvider& embeddings) {
    TaskConfig c = cfg;
    c.task = Task::PredictLocation;
    std::vector<std::vector<SGMRecord>> per_env(static_cast<std::size_t>(c.n_envs));
    StepHook hook = [&](const StepInfo& s) {
        SGMRecord r;
        r.env_index = s.env_index;
        r.step = s.step;
        r.memory = s.memory.restricted_to({s.query});
        r.query_ids = {s.query};
        r.labels = label_candidates(s.env.scene, s.description, s.candidates);
        per_env[static_cast<std::size_t>(s.env_index)].push_back(std::move(r));
    };
    run_traces(c, p, policy, embeddings, hook);
    std::vector<SGMRecord> out;
    for (auto& v : per_env) {
        for (auto& r : v) out.push_back(std::move(r));
    }
    return out;
}

void write_metrics(const std::filesystem::path& dir, const MetricsSummary& s) {
    std::filesystem::create_directories(dir);
    auto fmt = [](double x) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    {
        std::ofstream out(dir / "metrics.csv");
        out << "step,mean,std,smoothed_mean\n";
        const auto sm = smooth(s.step_mean);
        for (std::size_t i = 0; i < s.step_mean.size(); ++i) {
            out << i + 1 << ',' << fmt(s.step_mean[i]) << ',' << fmt(s.step_std[i]) << ',' << fmt(sm[i]) << '\n';
        }
        out << "\nsummary,mean,std\noverall," << fmt(s.mean) << ',' << fmt(s.std) << '\n';
        if (!out) throw Error("cannot write metrics to '" + dir.string() + "'");
    }
    std::ofstream out(dir / "env_means.csv");
    out << "env,mean\n";
    for (std::size_t i = 0; i < s.env_mean.size(); ++i) out << i << ',' << fmt(s.env_mean[i]) << '\n';
    if (!out) throw Error("cannot write metrics to '" + dir.string() + "'");
}

}  // namespace scenemem
