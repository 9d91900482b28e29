#include "scenemem/policies.hpp"

#include <algorithm>
#include <cmath>

namespace scenemem {

namespace {

constexpr std::array<std::pair<PolicyKind, std::string_view>, 6> kPolicyNames = {{
    {PolicyKind::Random, "random"},
    {PolicyKind::Priors, "priors"},
    {PolicyKind::Frequentist, "frequentist"},
    {PolicyKind::Myopic, "myopic"},
    {PolicyKind::Bayesian, "bayesian"},
    {PolicyKind::Oracle, "oracle"},
}};

std::vector<double> random_scores(const ScoringContext& ctx) {
    Rng rng(derive_seed(ctx.seed, "random_scores", ctx.query));
    std::vector<double> s(ctx.candidates.size());
    for (double& x : s) x = rng.uniform();
    return s;
}

std::vector<double> oracle_scores(const ScoringContext& ctx, bool cheat) {
    if (!ctx.env) throw Error("the oracle policy needs the ground-truth environment");
    const EnvInstance& env = *ctx.env;
    const SGMNode& q = ctx.memory.node(ctx.query);
    std::vector<double> s(ctx.candidates.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const EdgeKey& k = ctx.candidates[i];
        s[i] = env.dynamics.probability(q.description, k.parent, k.relation);
    }
    if (cheat) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            const EdgeKey& k = ctx.candidates[i];
            for (NodeId c : env.scene.children(k.parent)) {
                const SceneEdge& e = env.scene.parent_edge(c);
                if (e.relation == k.relation && env.scene.node(c).description() == q.description) s[i] = 1.0;
            }
        }
        return s;
    }
    // Blend the dynamics with the last sighting, weighted by the chance that
    // the object has not been drawn to move since then.
    std::optional<int> seen;
    std::size_t seen_idx = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& t = ctx.memory.edge(ctx.candidates[i]).last_true_t;
        if (t && (!seen || *t > *seen)) {
            seen = t;
            seen_idx = i;
        }
    }
    if (!seen) return s;
    double total_mf = 0.0;
    for (NodeId id : env.scene.ids_of_type(NodeType::Object)) {
        total_mf += *ctx.priors.metadata(env.scene.node(id).label).move_frequency;
    }
    const int n = env.object_count();
    const int m = std::max(1, (5 * n + 50) / 100);
    const double mf = *ctx.priors.metadata(q.label).move_frequency;
    const double q_move = total_mf > 0.0 ? std::min(1.0, m * mf / total_mf) : 0.0;
    const double stay = std::pow(1.0 - q_move, ctx.memory.t() - *seen);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (1.0 - stay) * s[i] + (i == seen_idx ? stay : 0.0);
    return s;
}

}  // namespace

std::string_view to_string(PolicyKind k) {
    for (const auto& [kind, name] : kPolicyNames) {
        if (kind == k) return name;
    }
    throw Error("unknown policy kind");
}

PolicyKind policy_kind_from_string(std::string_view s) {
    for (const auto& [kind, name] : kPolicyNames) {
        if (name == s) return kind;
    }
    throw Error("unknown policy '" + std::string(s) + "'");
}

BetaBelief beta_from_prior(double mu, double v) {
    mu = std::clamp(mu, 1e-4, 1.0 - 1e-4);
    if (!(v > 0.0)) throw Error("beta prior variance must be positive");
    if (v >= mu * (1.0 - mu)) v = mu * (1.0 - mu) / 2.0;
    const double alpha = mu * mu * ((1.0 - mu) / v - 1.0 / mu);
    return {alpha, alpha * (1.0 / mu - 1.0)};
}

double posterior_predictive(const BetaBelief& b, int successes, int trials) {
    const double an = b.alpha + successes;
    const double bn = b.beta + (trials - successes);
    return an / (an + bn);
}

std::vector<double> score_candidates(PolicyKind kind, const ScoringContext& ctx, const PolicyOptions& options) {
    if (ctx.candidates.empty()) throw Error("no candidates to score");
    const SceneGraphMemory& m = ctx.memory;
    std::vector<double> s(ctx.candidates.size(), 0.0);
    switch (kind) {
        case PolicyKind::Random:
            return random_scores(ctx);
        case PolicyKind::Priors:
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = m.edge(ctx.candidates[i]).prior_prob;
            return s;
        case PolicyKind::Frequentist: {
            bool any = false;
            for (std::size_t i = 0; i < s.size(); ++i) {
                const SGMEdge& e = m.edge(ctx.candidates[i]);
                if (e.times_observed > 0) any = true;
                s[i] = e.true_frequency();
            }
            return any ? s : random_scores(ctx);
        }
        case PolicyKind::Myopic: {
            std::optional<int> last;
            for (const auto& k : ctx.candidates) {
                const auto& t = m.edge(k).last_true_t;
                if (t && (!last || *t > *last)) last = t;
            }
            if (!last) return random_scores(ctx);
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = m.edge(ctx.candidates[i]).last_true_t == last ? 1.0 : 0.0;
            return s;
        }
        case PolicyKind::Bayesian:
            for (std::size_t i = 0; i < s.size(); ++i) {
                const SGMEdge& e = m.edge(ctx.candidates[i]);
                s[i] = posterior_predictive(beta_from_prior(e.prior_prob, options.bayes_variance), e.times_true,
                                            e.times_observed);
            }
            return s;
        case PolicyKind::Oracle:
            return oracle_scores(ctx, options.oracle_cheat);
    }
    throw Error("unknown policy kind");
}

namespace {

class BaselinePolicy : public Policy {
public:
    BaselinePolicy(PolicyKind kind, PolicyOptions options) : kind_(kind), options_(options) {}
    std::string name() const override { return std::string(to_string(kind_)); }
    std::vector<double> score(const ScoringContext& ctx) const override {
        return score_candidates(kind_, ctx, options_);
    }

private:
    PolicyKind kind_;
    PolicyOptions options_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyOptions& options) {
    return std::make_unique<BaselinePolicy>(kind, options);
}

std::size_t choose(const std::vector<double>& scores) {
    if (scores.empty()) throw Error("cannot choose from an empty score list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

}  // namespace scenemem
