// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <queue>
#include <sstream>

#include "gradcheck.hpp"
#include "scenemem/dhs.hpp"
#include "scenemem/eval.hpp"
#include "scenemem/igridson.hpp"
#include "scenemem/nep.hpp"
#include "scenemem/policies.hpp"
#include "scenemem/priors.hpp"

using namespace scenemem;
namespace fs = std::filesystem;

namespace {

// Tolerances and scales.
constexpr int kCompositionSeeds = 20;
constexpr double kCompositionSeconds = 1.0;
constexpr int kEvolveSeeds = 10;
constexpr int kEvolveSteps = 1000;
constexpr double kMovedFraction = 0.05;
constexpr double kMovedFractionTol = 0.005;
constexpr double kClosedFormTol = 1e-12;
constexpr double kGradStep = 1e-5;
constexpr double kGradTol = 1e-4;
constexpr std::size_t kGradSampledPerTensor = 150;
constexpr int kBatchTrials = 100;
constexpr double kBatchTol = 1e-9;
constexpr int kTableEnvs = 20;
constexpr int kTableSteps = 50;
constexpr double kTableSigma = 2.0;
constexpr double kBayesSlack = 0.02;
constexpr double kMyopicRatio = 0.2;
constexpr int kNepEpochs = 10;
constexpr double kNepLr = 1e-4;
constexpr int kNepBatch = 100;
constexpr int kHeldOutEnvs = 5;
constexpr double kNepSigma = 2.0;
constexpr double kLossRatio = 0.7;
constexpr double kAblationSigma = 1.0;
constexpr int kGridEnvs = 10;
constexpr int kGridEpisodes = 100;
constexpr int kGridActions = 10;
constexpr double kGridGap = 0.15;
constexpr int kPathPairs = 20;
constexpr int kRandomEnvs = 100;
constexpr int kRandomSteps = 100;
constexpr double kRandomSigma = 3.0;
constexpr Seed kSeed = 1;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string sci(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

// Paired per-environment difference a - b: mean and standard error.
struct Gap {
    double mean = 0;
    double se = 0;
};

Gap paired(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) d.push_back(a[i] - b[i]);
    Gap g;
    g.mean = mean(d);
    double ss = 0;
    for (double x : d) ss += (x - g.mean) * (x - g.mean);
    g.se = d.size() > 1 ? std::sqrt(ss / (d.size() - 1)) / std::sqrt(static_cast<double>(d.size())) : 0.0;
    return g;
}

bool confirmed(const Gap& g, double sigmas, double slack = 0.0) { return g.mean + slack > sigmas * g.se; }

std::string gap_text(const std::string& name, const Gap& g) {
    return name + " " + fmt(g.mean) + "+-" + fmt(g.se);
}

const PriorsGraph& priors() {
    static const PriorsGraph p = load_priors(bundled_priors_path());
    return p;
}

const HashEmbeddingProvider kEmb;

TaskConfig task(Task t, int envs, int steps, int offset = 0) {
    TaskConfig c;
    c.task = t;
    c.n_envs = envs;
    c.steps = steps;
    c.env_offset = offset;
    c.seed = kSeed;
    return c;
}

std::vector<double> env_means(const TaskConfig& c, const Policy& policy) {
    return aggregate(run_traces(c, priors(), policy, kEmb)).env_mean;
}

Outcome composition() {
    double slowest = 0;
    for (Seed s = 0; s < kCompositionSeeds; ++s) {
        const auto t0 = std::chrono::steady_clock::now();
        const EnvInstance env = make_env(priors(), {}, {}, derive_seed(s, "acceptance"));
        slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        const auto& g = env.scene;
        if (g.count(NodeType::Room) != 4 || g.count(NodeType::Furniture) != 32 || g.count(NodeType::Object) != 192) {
            return {false, "seed " + std::to_string(s) + " gave " + std::to_string(g.count(NodeType::Room)) + "/" +
                               std::to_string(g.count(NodeType::Furniture)) + "/" +
                               std::to_string(g.count(NodeType::Object))};
        }
    }
    return {slowest < kCompositionSeconds,
            "4/32/192 on " + std::to_string(kCompositionSeeds) + " seeds, slowest " + fmt(slowest, 3) + " s"};
}

Outcome evolution() {
    int lo = 1 << 30, hi = 0;
    double frac = 0;
    bool in_bounds = true;
    for (Seed s = 0; s < kEvolveSeeds; ++s) {
        EnvInstance env = make_env(priors(), {}, {}, derive_seed(s, "acceptance"));
        for (int k = 0; k < kEvolveSteps; ++k) {
            const int n = env.object_count();
            frac += static_cast<double>(evolve(env, priors()).sampled_to_move) / n;
            lo = std::min(lo, env.object_count());
            hi = std::max(hi, env.object_count());
            in_bounds &= env.object_count() >= 183 && env.object_count() <= 201;
        }
    }
    frac /= kEvolveSeeds * kEvolveSteps;
    const bool ok = in_bounds && std::abs(frac - kMovedFraction) <= kMovedFractionTol;
    return {ok, "count range [" + std::to_string(lo) + ", " + std::to_string(hi) + "], moved fraction " + fmt(frac)};
}

Outcome closed_forms() {
    const BetaBelief b = beta_from_prior(0.5, 0.05);
    const double pp = posterior_predictive({2, 2}, 3, 3);
    const bool ok = std::abs(b.alpha - 2) < kClosedFormTol && std::abs(b.beta - 2) < kClosedFormTol &&
                    std::abs(pp - 5.0 / 7.0) < kClosedFormTol;
    return {ok, "alpha " + fmt(b.alpha, 12) + " beta " + fmt(b.beta, 12) + " predictive " + fmt(pp, 12)};
}

Outcome gradients() {
    Rng rng(kSeed);
    const auto a = gradcheck::random_query(rng, 4, 1, 0);
    const auto b = gradcheck::random_query(rng, 3, 2, 1);
    const auto c = gradcheck::random_query(rng, 1, 1, 2);
    NepConfig small;
    small.hidden = 8;
    small.feedforward = 8;
    NepParams ps = NepParams::init(small, kSeed);
    const auto full = gradcheck::check_nep(ps, {&a, &b, &c}, std::size_t{1} << 40, kSeed, kGradStep);
    NepParams pd = NepParams::init({}, kSeed);
    const auto sampled = gradcheck::check_nep(pd, {&a, &b, &c}, kGradSampledPerTensor, kSeed, kGradStep);
    const bool ok = full.checked == ps.parameter_count() && full.max_rel_error < kGradTol &&
                    sampled.max_rel_error < kGradTol;
    return {ok, "width-8 model all " + std::to_string(full.checked) + " entries max rel err " +
                    sci(full.max_rel_error) + "; default width " + std::to_string(sampled.checked) +
                    " sampled entries max rel err " + sci(sampled.max_rel_error)};
}

Outcome batching() {
    Rng rng(kSeed);
    const NepParams p = NepParams::init({}, kSeed);
    double worst = 0;
    for (int t = 0; t < kBatchTrials; ++t) {
        std::vector<QueryFeatures> qs;
        const int n = 2 + static_cast<int>(rng.index(5));
        for (int i = 0; i < n; ++i) qs.push_back(gradcheck::random_query(rng, 1 + static_cast<int>(rng.index(12)), 1, i));
        std::vector<const QueryFeatures*> batch;
        for (const auto& q : qs) batch.push_back(&q);
        const auto together = nep_predict(p, batch);
        for (int i = 0; i < n; ++i) {
            const auto alone = nep_predict(p, {&qs[i]}).front();
            for (std::size_t j = 0; j < alone.size(); ++j) worst = std::max(worst, std::abs(alone[j] - together[i][j]));
        }
    }
    return {worst < kBatchTol, std::to_string(kBatchTrials) + " trials, max abs diff " + sci(worst)};
}

Outcome table_ordering() {
    const TaskConfig c = task(Task::PredictLocation, kTableEnvs, kTableSteps);
    std::map<PolicyKind, std::vector<double>> m;
    for (PolicyKind k : {PolicyKind::Oracle, PolicyKind::Bayesian, PolicyKind::Frequentist, PolicyKind::Priors,
                         PolicyKind::Random}) {
        m[k] = env_means(c, *make_policy(k));
    }
    const Gap ob = paired(m[PolicyKind::Oracle], m[PolicyKind::Bayesian]);
    const Gap bf = paired(m[PolicyKind::Bayesian], m[PolicyKind::Frequentist]);
    const Gap fp = paired(m[PolicyKind::Frequentist], m[PolicyKind::Priors]);
    const Gap pr = paired(m[PolicyKind::Priors], m[PolicyKind::Random]);
    const bool ok = confirmed(ob, kTableSigma) && confirmed(bf, kTableSigma, kBayesSlack) &&
                    confirmed(fp, kTableSigma) && confirmed(pr, kTableSigma);
    std::string means;
    for (PolicyKind k : {PolicyKind::Oracle, PolicyKind::Bayesian, PolicyKind::Frequentist, PolicyKind::Priors,
                         PolicyKind::Random}) {
        means += std::string(to_string(k)) + " " + fmt(mean(m[k])) + " ";
    }
    return {ok, means + "| gaps " + gap_text("o-b", ob) + ", " + gap_text("b-f", bf) + ", " + gap_text("f-p", fp) +
                    ", " + gap_text("p-r", pr)};
}

Outcome myopic_collapse() {
    const TaskConfig c = task(Task::RelativeLikelihood, kTableEnvs, kTableSteps);
    const double myopic = mean(env_means(c, *make_policy(PolicyKind::Myopic)));
    const double pri = mean(env_means(c, *make_policy(PolicyKind::Priors)));
    return {myopic < kMyopicRatio * pri, "myopic " + fmt(myopic) + " vs priors " + fmt(pri) + " (ratio " +
                                             fmt(myopic / pri, 3) + ")"};
}

struct NepRun {
    TrainResult trained;
    std::vector<double> held_out;
};

NepRun train_and_hold_out(bool no_priors) {
    TaskConfig collect = task(Task::PredictLocation, kTableEnvs, kTableSteps);
    collect.query.random_edges = no_priors;
    const auto records = collect_records(collect, priors(), *make_policy(PolicyKind::Bayesian), kEmb);
    NepConfig model;
    model.features.prior = !no_priors;
    TrainConfig tc;
    tc.learning_rate = kNepLr;
    tc.epochs = kNepEpochs;
    tc.batch_size = kNepBatch;
    tc.seed = kSeed;
    NepRun r{train_nep(records, model, tc), {}};
    TaskConfig eval = task(Task::PredictLocation, kHeldOutEnvs, kTableSteps, kTableEnvs);
    eval.query.random_edges = no_priors;
    r.held_out = env_means(eval, NepPolicy(r.trained.params));
    return r;
}

const NepRun& full_nep() {
    static const NepRun r = train_and_hold_out(false);
    return r;
}

Outcome nep_learns() {
    const NepRun& r = full_nep();
    const TaskConfig eval = task(Task::PredictLocation, kHeldOutEnvs, kTableSteps, kTableEnvs);
    const auto rnd = env_means(eval, *make_policy(PolicyKind::Random));
    const auto pri = env_means(eval, *make_policy(PolicyKind::Priors));
    const Gap vr = paired(r.held_out, rnd);
    const Gap vp = paired(r.held_out, pri);
    const double first = r.trained.epoch_loss.front();
    const double last = r.trained.epoch_loss.back();
    const bool ok = confirmed(vr, kNepSigma) && confirmed(vp, kNepSigma) && last < kLossRatio * first;
    return {ok, "held-out nep " + fmt(mean(r.held_out)) + " random " + fmt(mean(rnd)) + " priors " + fmt(mean(pri)) +
                    " | " + gap_text("nep-random", vr) + ", " + gap_text("nep-priors", vp) + " | loss " + fmt(first) +
                    " -> " + fmt(last) + " (ratio " + fmt(last / first, 3) + ")"};
}

Outcome ablation() {
    const NepRun& full = full_nep();
    const NepRun none = train_and_hold_out(true);
    const Gap g = paired(full.held_out, none.held_out);
    return {confirmed(g, kAblationSigma), "full " + fmt(mean(full.held_out)) + " no-priors " +
                                              fmt(mean(none.held_out)) + " | " + gap_text("full-nopriors", g)};
}

// Uniform-cost search to any free cell next to the slot footprint.
int ucs_distance(const GridLayout& l, Cell from, int slot) {
    const std::array<std::pair<int, int>, 4> steps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    std::set<Cell> goal;
    for (const Cell& c : l.slots[static_cast<std::size_t>(slot)].cells) {
        for (auto [dx, dy] : steps) {
            const Cell n{c.x + dx, c.y + dy};
            if (l.in_bounds(n) && l.is_free(n)) goal.insert(n);
        }
    }
    using Item = std::pair<int, Cell>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    std::map<Cell, int> dist{{from, 0}};
    open.push({0, from});
    while (!open.empty()) {
        auto [d, c] = open.top();
        open.pop();
        if (d > dist[c]) continue;
        if (goal.contains(c)) return d;
        for (auto [dx, dy] : steps) {
            const Cell n{c.x + dx, c.y + dy};
            if (!l.in_bounds(n) || !l.is_free(n)) continue;
            if (!dist.contains(n) || d + 1 < dist[n]) {
                dist[n] = d + 1;
                open.push({d + 1, n});
            }
        }
    }
    return -1;
}

Outcome igridson() {
    const GridLayout layout = load_layout(bundled_layout_path());
    IgridsonConfig c;
    c.n_envs = kGridEnvs;
    c.episodes_per_env = kGridEpisodes;
    c.max_actions = kGridActions;
    c.seed = kSeed;
    const double bayes = run_igridson(c, layout, priors(), *make_policy(PolicyKind::Bayesian), kEmb).success_rate;
    const double rnd = run_igridson(c, layout, priors(), *make_policy(PolicyKind::Random), kEmb).success_rate;

    std::vector<Cell> free;
    for (int y = 0; y < layout.height; ++y)
        for (int x = 0; x < layout.width; ++x)
            if (layout.is_free({x, y})) free.push_back({x, y});
    Rng rng(kSeed);
    int agree = 0;
    for (int i = 0; i < kPathPairs; ++i) {
        const Cell from = free[rng.index(free.size())];
        const int slot = static_cast<int>(rng.index(layout.slots.size()));
        agree += shortest_path_len(layout, from, slot) == ucs_distance(layout, from, slot);
    }
    return {bayes - rnd >= kGridGap && agree == kPathPairs,
            std::to_string(kGridEnvs * kGridEpisodes) + " episodes: bayesian " + fmt(bayes, 3) + " random " +
                fmt(rnd, 3) + " (gap " + fmt(bayes - rnd, 3) + "); BFS = UCS on " + std::to_string(agree) + "/" +
                std::to_string(kPathPairs) + " pairs"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "scenemem_acceptance_rerun";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto run = [&](const std::string& args) {
        const std::string cmd = "cd '" + dir.string() + "' && '" SCENEMEM_CLI "' " + args + " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    int same = 0, total = 0;
    for (const char* t : {"predict-location", "relative-likelihood", "find-object"}) {
        const std::string first = std::string("a-") + t;
        const std::string second = std::string("b-") + t;
        if (run(std::string("eval --seed 3 --envs 3 --steps 10 --policy bayesian --task ") + t + " --out " + first) != 0 ||
            run("--config " + first + "/manifest.toml eval --out " + second) != 0) {
            return {false, std::string("eval failed for ") + t};
        }
        for (const char* f : {"metrics.csv", "env_means.csv"}) {
            const std::string a = slurp(dir / first / f);
            ++total;
            same += !a.empty() && a == slurp(dir / second / f);
        }
    }
    fs::remove_all(dir);
    return {same == total, std::to_string(same) + "/" + std::to_string(total) + " metrics files byte-identical"};
}

Outcome random_sanity() {
    TaskConfig c = task(Task::PredictLocation, kRandomEnvs, kRandomSteps);
    std::vector<double> expected(kRandomEnvs, 0.0);
    const StepHook hook = [&](const StepInfo& s) {
        int hits = 0;
        for (const auto& k : s.candidates) hits += s.true_locations.contains(k.parent);
        expected[static_cast<std::size_t>(s.env_index)] += static_cast<double>(hits) / s.candidates.size() / kRandomSteps;
    };
    const auto acc = aggregate(run_traces(c, priors(), *make_policy(PolicyKind::Random), kEmb, hook)).env_mean;
    const Gap g = paired(acc, expected);
    return {std::abs(g.mean) <= kRandomSigma * g.se,
            "accuracy " + fmt(mean(acc)) + " expected " + fmt(mean(expected)) + " | " + gap_text("diff", g)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"scene composition", composition},
        {"evolution bounds", evolution},
        {"bayesian closed forms", closed_forms},
        {"gradient correctness", gradients},
        {"batched forward", batching},
        {"baseline ordering", table_ordering},
        {"myopic ndcg collapse", myopic_collapse},
        {"nep learns", nep_learns},
        {"no-priors ablation", ablation},
        {"igridson", igridson},
        {"determinism", determinism},
        {"random-policy sanity", random_sanity},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1 < 10 ? " " : "") << i + 1 << " "
                  << criteria[i].first << ": " << o.detail << " [" << fmt(secs, 1) << " s]" << std::endl;
    }
    std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed ? 1 : 0;
}
