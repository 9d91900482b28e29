#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scenemem/dataset.hpp"
#include "scenemem/dhs.hpp"
#include "scenemem/memory.hpp"
#include "scenemem/policies.hpp"

namespace scenemem {

enum class Task { PredictLocation, RelativeLikelihood, FindObject };

std::string_view to_string(Task t);
Task task_from_string(std::string_view s);

struct TaskConfig {
    Task task = Task::PredictLocation;
    int n_envs = 100;
    int steps = 100;
    bool dynamic_nodes = true;
    double dropout = 0.25;
    int queries_per_step = 10;
    // Chance that a query is drawn from the objects moved in the last step.
    double moved_branch_prob = 0.5;
    Seed seed = 0;
    int workers = 1;
    // Environment i uses the seed derived for index env_offset + i.
    int env_offset = 0;
    // Find-object action budget; failures count as cap + 1 actions.
    std::optional<int> max_actions;
    NoiseSpec noise;
    SceneDims dims;
    QueryOptions query;
};

struct MetricsSummary {
    std::vector<double> step_mean;
    std::vector<double> step_std;
    std::vector<double> env_mean;
    double mean = 0.0;
    double std = 0.0;
};

// Mean and population standard deviation across environments, per step and
// of the per-environment means.
MetricsSummary aggregate(const std::vector<std::vector<double>>& traces);

// Trailing moving average for plotting.
std::vector<double> smooth(const std::vector<double>& values, int window = 10);

std::string sample_query(const EnvInstance& env, const PriorsGraph& p, const std::set<NodeId>& moved, Seed seed,
                         double moved_branch_prob = 0.5);

double ndcg(const std::vector<double>& scores, const std::vector<int>& relevance);

struct StepInfo {
    int env_index;
    int step;
    const EnvInstance& env;
    const SceneGraphMemory& memory;
    NodeId query;
    const std::string& description;
    const std::vector<EdgeKey>& candidates;
    const std::vector<double>& scores;
    std::size_t chosen;
    const std::set<NodeId>& true_locations;
    double value;
};

// Called once per scored query, before the agent observes. With several
// workers it is called concurrently for different environments.
using StepHook = std::function<void(const StepInfo&)>;

Seed env_seed(const TaskConfig& cfg, int env_index);

// Per-environment traces: accuracy, mean NDCG or action count per step.
std::vector<std::vector<double>> run_traces(const TaskConfig& cfg, const PriorsGraph& p, const Policy& policy,
                                            const EmbeddingProvider& embeddings, const StepHook& hook = {});

MetricsSummary run_task(const TaskConfig& cfg, const PriorsGraph& p, const Policy& policy,
                        const EmbeddingProvider& embeddings, const StepHook& hook = {});

struct SearchResult {
    bool success = false;
    int actions = 0;
    std::vector<NodeId> visited;
};

// Sequential search for `description` in a frozen environment. Tried furniture
// is excluded; when the memory has no untried candidates the query is widened
// to every nonzero prior, then remaining furniture is visited in id order.
// `visit` is called for each visited furniture before it is observed.
SearchResult search_object(const EnvInstance& env, SceneGraphMemory& m, const PriorsGraph& p, const Policy& policy,
                           const std::string& description, const QueryOptions& query, std::optional<int> max_actions,
                           double dropout, Seed seed, const std::function<void(NodeId)>& visit = {});

// Ground-truth label per candidate: the furniture holds an object with the
// description under that relation.
std::map<EdgeKey, bool> label_candidates(const SceneGraph& scene, const std::string& description,
                                         const std::vector<EdgeKey>& candidates);

std::vector<SGMRecord> collect_records(const TaskConfig& cfg, const PriorsGraph& p, const Policy& policy,
                                       const EmbeddingProvider& embeddings);

void write_metrics(const std::filesystem::path& dir, const MetricsSummary& s);

}  // namespace scenemem
