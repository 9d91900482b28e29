#pragma once

#include <memory>
#include <string>
#include <vector>

#include "scenemem/dhs.hpp"
#include "scenemem/memory.hpp"
#include "scenemem/priors.hpp"

namespace scenemem {

enum class PolicyKind { Random, Priors, Frequentist, Myopic, Bayesian, Oracle };

std::string_view to_string(PolicyKind k);
PolicyKind policy_kind_from_string(std::string_view s);

struct BetaBelief {
    double alpha = 1.0;
    double beta = 1.0;
};

BetaBelief beta_from_prior(double mu, double v);
double posterior_predictive(const BetaBelief& b, int successes, int trials);

struct ScoringContext {
    const SceneGraphMemory& memory;
    const PriorsGraph& priors;
    // Ground truth; only the oracle reads it.
    const EnvInstance* env = nullptr;
    NodeId query = 0;
    const std::vector<EdgeKey>& candidates;
    Seed seed = 0;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    // One score per candidate, same order.
    virtual std::vector<double> score(const ScoringContext& ctx) const = 0;
};

struct PolicyOptions {
    // Prior variance of the beta-binomial model.
    double bayes_variance = 0.05;
    // Oracle scores the currently-true edges 1 (perfect current-state knowledge).
    bool oracle_cheat = false;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyOptions& options = {});

std::vector<double> score_candidates(PolicyKind kind, const ScoringContext& ctx, const PolicyOptions& options = {});

// Index of the highest score; ties go to the earliest candidate, which is the
// lowest (parent, relation) for candidates in canonical order.
std::size_t choose(const std::vector<double>& scores);

}  // namespace scenemem
