#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "scenemem/dataset.hpp"
#include "scenemem/dhs.hpp"
#include "scenemem/embedding.hpp"
#include "scenemem/eval.hpp"
#include "scenemem/igridson.hpp"
#include "scenemem/nep.hpp"
#include "scenemem/policies.hpp"
#include "scenemem/priors.hpp"
#include "selftest.hpp"

namespace fs = std::filesystem;
using namespace scenemem;

namespace {

struct Common {
    std::string priors;
    std::string embeddings;
    std::string out;
    bool filter_sparse = false;
    int workers = 1;
    NoiseSpec noise;
};

struct Options {
    Common common;
    Seed seed = 0;
    SceneDims dims;
    bool static_nodes = false;

    // evolve
    std::string snapshot;
    int evolve_steps = 1;

    // collect / eval
    std::string task = "predict-location";
    std::string policy = "bayesian";
    int envs = 100;
    int steps = 100;
    int env_offset = 0;
    int queries_per_step = 10;
    double dropout = 0.25;
    double moved_branch_prob = 0.5;
    int max_actions = 0;
    double threshold = 0.05;
    int min_k = 5;
    double variance = 0.05;
    bool oracle_cheat = false;
    std::string checkpoint;

    // train
    std::string dataset;
    int epochs = 25;
    int batch = 100;
    double lr = 1e-4;
    int hidden = 64;
    bool cross_query = false;

    // ablations
    bool no_priors = false;
    bool no_transformer = false;
    bool no_temporal = false;
    bool no_semantic = false;

    // igridson
    std::string layout;
    int grid_envs = 10;
    int episodes = 100;
    int igridson_actions = 10;
    bool render = true;
};

fs::path out_root() {
    const char* env = std::getenv("SCENEMEM_OUT_DIR");
    return env && *env ? fs::path(env) : fs::path("runs");
}

fs::path resolve_out(const Common& c, const std::string& name) {
    return c.out.empty() ? out_root() / name : fs::path(c.out);
}

PriorsGraph load(const Common& c) {
    PriorsLoadOptions lo;
    lo.filter_sparse_furniture = c.filter_sparse;
    return load_priors(c.priors.empty() ? bundled_priors_path() : fs::path(c.priors), lo);
}

std::unique_ptr<EmbeddingProvider> embeddings(const Common& c) {
    if (c.embeddings.empty()) return std::make_unique<HashEmbeddingProvider>();
    return std::make_unique<TableEmbeddingProvider>(c.embeddings);
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write '" + path.string() + "'");
}

void write_manifest(const CLI::App& app, const fs::path& dir, const std::string& extra = {}) {
    fs::create_directories(dir);
    const CLI::App* sub = app.get_subcommands().front();
    std::string text = "# scenemem run manifest\n# rerun: scenemem --config manifest.toml " + sub->get_name() + "\n";
    text += extra;
    text += "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false);
    write_text(dir / "manifest.toml", text);
}

TaskConfig task_config(const Options& o) {
    TaskConfig cfg;
    cfg.task = task_from_string(o.task);
    cfg.n_envs = o.envs;
    cfg.steps = o.steps;
    cfg.dynamic_nodes = !o.static_nodes;
    cfg.dropout = o.dropout;
    cfg.queries_per_step = o.queries_per_step;
    cfg.moved_branch_prob = o.moved_branch_prob;
    cfg.seed = o.seed;
    cfg.workers = o.common.workers;
    cfg.env_offset = o.env_offset;
    if (o.max_actions > 0) cfg.max_actions = o.max_actions;
    cfg.noise = o.common.noise;
    cfg.dims = o.dims;
    cfg.query.threshold = o.threshold;
    cfg.query.min_k = o.min_k;
    cfg.query.random_edges = o.no_priors;
    return cfg;
}

std::string env_seed_lines(const TaskConfig& cfg) {
    std::string s;
    for (int i = 0; i < cfg.n_envs; ++i) {
        s += "# env " + std::to_string(cfg.env_offset + i) + " seed " + std::to_string(env_seed(cfg, i)) + "\n";
    }
    return s;
}

std::unique_ptr<Policy> policy_from(const Options& o) {
    if (o.policy == "nep") {
        if (o.checkpoint.empty()) throw Error("policy 'nep' needs --checkpoint");
        return std::make_unique<NepPolicy>(load_checkpoint(o.checkpoint));
    }
    PolicyOptions po;
    po.bayes_variance = o.variance;
    po.oracle_cheat = o.oracle_cheat;
    return make_policy(policy_kind_from_string(o.policy), po);
}

std::string suffix(const Options& o) {
    std::string s;
    if (o.env_offset != 0) s += "-o" + std::to_string(o.env_offset);
    if (o.no_priors) s += "-nopriors";
    if (o.static_nodes) s += "-static";
    return s;
}

int cmd_sample_env(const CLI::App& app, const Options& o) {
    const PriorsGraph p = load(o.common);
    const EnvInstance env = make_env(p, o.common.noise, o.dims, o.seed, !o.static_nodes);
    const fs::path dir = resolve_out(o.common, "env-seed" + std::to_string(o.seed));
    write_manifest(app, dir);
    write_text(dir / "env.json", to_json(env).dump(1) + "\n");
    std::cout << "rooms " << env.scene.count(NodeType::Room) << " furniture " << env.scene.count(NodeType::Furniture)
              << " objects " << env.scene.count(NodeType::Object) << "\n"
              << "wrote " << (dir / "env.json").string() << "\n";
    return 0;
}

int cmd_evolve(const CLI::App& app, const Options& o) {
    std::ifstream in(o.snapshot);
    if (!in) throw Error("cannot open snapshot '" + o.snapshot + "'");
    const PriorsGraph p = load(o.common);
    EnvInstance env = env_from_json(nlohmann::json::parse(in));
    const fs::path dir = resolve_out(o.common, "evolve-t" + std::to_string(env.t + o.evolve_steps));
    write_manifest(app, dir);
    std::string log = "t,removed,sampled_to_move,relocated,added,objects\n";
    for (int k = 0; k < o.evolve_steps; ++k) {
        const EvolveStats s = evolve(env, p);
        log += std::to_string(env.t) + ',' + std::to_string(s.removed) + ',' + std::to_string(s.sampled_to_move) +
               ',' + std::to_string(s.relocated.size()) + ',' + std::to_string(s.added) + ',' +
               std::to_string(env.object_count()) + '\n';
    }
    write_text(dir / "evolve.csv", log);
    write_text(dir / "env.json", to_json(env).dump(1) + "\n");
    std::cout << "t " << env.t << " objects " << env.object_count() << "\nwrote " << (dir / "env.json").string()
              << "\n";
    return 0;
}

int cmd_collect(const CLI::App& app, const Options& o) {
    const TaskConfig cfg = task_config(o);
    const PriorsGraph p = load(o.common);
    const auto emb = embeddings(o.common);
    const auto policy = policy_from(o);
    const fs::path dir = resolve_out(o.common, "collect-" + o.policy + "-e" + std::to_string(o.envs) + "-s" +
                                                   std::to_string(o.steps) + "-seed" + std::to_string(o.seed) +
                                                   suffix(o));
    write_manifest(app, dir, env_seed_lines(cfg));
    const auto records = collect_records(cfg, p, *policy, *emb);
    write_dataset(dir / "dataset.sgmd", records);
    std::cout << "records " << records.size() << "\nwrote " << (dir / "dataset.sgmd").string() << "\n";
    return 0;
}

int cmd_train(const CLI::App& app, const Options& o) {
    if (!fs::exists(o.dataset)) throw Error("dataset not found: '" + o.dataset + "'");
    const auto emb = embeddings(o.common);
    const auto records = read_dataset(o.dataset, *emb);
    NepConfig model;
    model.hidden = o.hidden;
    model.use_transformer = !o.no_transformer;
    model.cross_query_attention = o.cross_query;
    model.features.prior = !o.no_priors;
    model.features.temporal = !o.no_temporal;
    model.features.semantic = !o.no_semantic;
    TrainConfig tc;
    tc.learning_rate = o.lr;
    tc.epochs = o.epochs;
    tc.batch_size = o.batch;
    tc.seed = o.seed;
    std::string name = "train-seed" + std::to_string(o.seed) + "-ep" + std::to_string(o.epochs);
    if (o.no_priors) name += "-nopriors";
    if (o.no_transformer) name += "-notransformer";
    if (o.no_temporal) name += "-notemporal";
    if (o.no_semantic) name += "-nosemantic";
    const fs::path dir = resolve_out(o.common, name);
    write_manifest(app, dir);
    const TrainResult r = train_nep(records, model, tc);
    std::string log = "epoch,loss\n";
    for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) log += std::to_string(e + 1) + ',' + num(r.epoch_loss[e]) + '\n';
    write_text(dir / "losses.csv", log);
    save_checkpoint(dir / "model.nepc", r.params);
    std::cout << "parameters " << r.params.parameter_count() << "\n";
    if (!r.epoch_loss.empty()) {
        std::cout << "loss first " << num(r.epoch_loss.front()) << " last " << num(r.epoch_loss.back()) << "\n";
    }
    std::cout << "wrote " << (dir / "model.nepc").string() << "\n";
    return 0;
}

int cmd_eval(const CLI::App& app, const Options& o) {
    const TaskConfig cfg = task_config(o);
    const PriorsGraph p = load(o.common);
    const auto emb = embeddings(o.common);
    const auto policy = policy_from(o);
    const fs::path dir = resolve_out(o.common, "eval-" + o.task + "-" + o.policy + "-e" + std::to_string(o.envs) +
                                                   "-s" + std::to_string(o.steps) + "-seed" +
                                                   std::to_string(o.seed) + suffix(o));
    write_manifest(app, dir, env_seed_lines(cfg));
    const MetricsSummary s = run_task(cfg, p, *policy, *emb);
    write_metrics(dir, s);
    std::cout << o.task << " " << o.policy << " mean " << num(s.mean) << " std " << num(s.std) << "\nwrote "
              << (dir / "metrics.csv").string() << "\n";
    return 0;
}

int cmd_igridson(const CLI::App& app, const Options& o) {
    const PriorsGraph p = load(o.common);
    const auto emb = embeddings(o.common);
    const auto policy = policy_from(o);
    const GridLayout layout = load_layout(o.layout.empty() ? bundled_layout_path() : fs::path(o.layout));
    IgridsonConfig cfg;
    cfg.n_envs = o.grid_envs;
    cfg.episodes_per_env = o.episodes;
    cfg.max_actions = o.igridson_actions;
    cfg.dropout = o.dropout;
    cfg.dynamic_nodes = !o.static_nodes;
    cfg.seed = o.seed;
    cfg.workers = o.common.workers;
    cfg.noise = o.common.noise;
    cfg.query.threshold = o.threshold;
    cfg.query.min_k = o.min_k;
    cfg.query.random_edges = o.no_priors;
    const fs::path dir = resolve_out(o.common, "igridson-" + o.policy + "-e" + std::to_string(o.grid_envs) + "-n" +
                                                   std::to_string(o.episodes) + "-seed" + std::to_string(o.seed));
    write_manifest(app, dir);
    const IgridsonSummary s = run_igridson(cfg, layout, p, *policy, *emb);
    std::string log = "episode,success,actions,path_length\n";
    for (std::size_t i = 0; i < s.episodes.size(); ++i) {
        const auto& e = s.episodes[i];
        log += std::to_string(i) + ',' + (e.success ? "1" : "0") + ',' + std::to_string(e.actions) + ',' +
               std::to_string(e.path_length) + '\n';
    }
    log += "\nsummary,success_rate,mean_actions,mean_path_length\noverall," + num(s.success_rate) + ',' +
           num(s.mean_actions) + ',' + num(s.mean_path_length) + '\n';
    write_text(dir / "episodes.csv", log);
    if (o.render) {
        TaskConfig tc;
        tc.seed = o.seed;
        const EnvInstance env = make_env(p, cfg.noise, layout_scene_dims(layout, cfg.objects_per_furniture),
                                         env_seed(tc, 0), cfg.dynamic_nodes);
        const Rendering r = render(instantiate(env.scene, layout), env.scene);
        write_text(dir / "render.txt", r.text);
        write_text(dir / "render.ppm", r.ppm);
    }
    std::cout << "success_rate " << num(s.success_rate) << " mean_actions " << num(s.mean_actions)
              << " mean_path_length " << num(s.mean_path_length) << "\nwrote " << (dir / "episodes.csv").string()
              << "\n";
    return 0;
}

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--priors", o.common.priors, "Priors file (default: bundled)");
    sub->add_option("--embeddings", o.common.embeddings, "Embedding table (default: hashed embeddings)");
    sub->add_option("--out", o.common.out, "Output directory (default: $SCENEMEM_OUT_DIR/<run name>)");
    sub->add_flag("--filter-sparse", o.common.filter_sparse, "Drop furniture with few object edges from the priors");
    sub->add_option("--workers", o.common.workers, "Worker threads across environments")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--zero-prob", o.common.noise.zero_prob, "Class noise: chance an edge is zeroed")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--scale-limit", o.common.noise.scale_limit, "Class noise: maximum relative rescale")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
}

void add_seed(CLI::App* sub, Options& o) { sub->add_option("--seed", o.seed, "Master seed")->required(); }

void add_dims(CLI::App* sub, Options& o) {
    sub->add_option("--furniture-per-room", o.dims.furniture_per_room, "Furniture per room")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--objects-per-furniture", o.dims.objects_per_furniture, "Objects per furniture")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_flag("--static-nodes", o.static_nodes, "Disable object addition and removal");
}

void add_task(CLI::App* sub, Options& o) {
    sub->add_option("--task", o.task, "predict-location | relative-likelihood | find-object")
        ->capture_default_str()
        ->check(CLI::IsMember({"predict-location", "relative-likelihood", "find-object"}));
    sub->add_option("--envs", o.envs, "Environments")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--steps", o.steps, "Steps per environment")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--env-offset", o.env_offset, "Index of the first environment")->capture_default_str();
    sub->add_option("--queries-per-step", o.queries_per_step, "Queries per step (relative likelihood)")
        ->capture_default_str();
    sub->add_option("--dropout", o.dropout, "Detection dropout")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    sub->add_option("--moved-branch-prob", o.moved_branch_prob, "Chance of querying a just-moved object")
        ->capture_default_str();
    sub->add_option("--max-actions", o.max_actions, "Find-object action cap (0: uncapped)")->capture_default_str();
}

void add_policy(CLI::App* sub, Options& o) {
    sub->add_option("--policy", o.policy, "random | priors | frequentist | myopic | bayesian | oracle | nep")
        ->capture_default_str()
        ->check(CLI::IsMember({"random", "priors", "frequentist", "myopic", "bayesian", "oracle", "nep"}));
    sub->add_option("--checkpoint", o.checkpoint, "NEP checkpoint (policy nep)");
    sub->add_option("--variance", o.variance, "Bayesian prior variance")->capture_default_str();
    sub->add_flag("--oracle-cheat", o.oracle_cheat, "Oracle knows the current true locations");
    sub->add_option("--threshold", o.threshold, "Hypothetical edge prior threshold")->capture_default_str();
    sub->add_option("--min-k", o.min_k, "Minimum candidates per query")->capture_default_str();
    sub->add_flag("--no-priors", o.no_priors, "Random hypothetical edges, prior features zeroed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scene graph memory experiments: simulation, baselines, NEP training and evaluation."};
    app.set_config("--config", "", "Read options from a manifest or config file");
    app.require_subcommand(1);
    Options o;

    auto* sample = app.add_subcommand("sample-env", "Sample an environment and write its snapshot");
    add_common(sample, o);
    add_seed(sample, o);
    add_dims(sample, o);

    auto* evolve_cmd = app.add_subcommand("evolve", "Advance a snapshot");
    add_common(evolve_cmd, o);
    evolve_cmd->add_option("--snapshot", o.snapshot, "Snapshot written by sample-env or evolve")->required();
    evolve_cmd->add_option("--steps", o.evolve_steps, "Steps")->capture_default_str()->check(CLI::PositiveNumber);

    auto* collect = app.add_subcommand("collect", "Collect a labeled memory dataset");
    add_common(collect, o);
    add_seed(collect, o);
    add_dims(collect, o);
    add_task(collect, o);
    add_policy(collect, o);

    auto* train = app.add_subcommand("train", "Train the node edge predictor");
    add_common(train, o);
    add_seed(train, o);
    train->add_option("--dataset", o.dataset, "Dataset written by collect")->required();
    train->add_option("--epochs", o.epochs, "Epochs")->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--batch", o.batch, "Memories per batch")->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--lr", o.lr, "Learning rate")->capture_default_str();
    train->add_option("--hidden", o.hidden, "Embedding width")->capture_default_str()->check(CLI::PositiveNumber);
    train->add_flag("--cross-query", o.cross_query, "Attention across queries of one memory");
    train->add_flag("--no-priors", o.no_priors, "Zero prior features");
    train->add_flag("--no-transformer", o.no_transformer, "Replace the encoder with the identity");
    train->add_flag("--no-temporal", o.no_temporal, "Zero temporal features");
    train->add_flag("--no-semantic", o.no_semantic, "Zero text embeddings and similarity");

    auto* eval = app.add_subcommand("eval", "Run a task with a policy and write metrics");
    add_common(eval, o);
    add_seed(eval, o);
    add_dims(eval, o);
    add_task(eval, o);
    add_policy(eval, o);

    auto* grid = app.add_subcommand("igridson", "Embodied find-object episodes on the grid layout");
    add_common(grid, o);
    add_seed(grid, o);
    add_policy(grid, o);
    grid->add_option("--layout", o.layout, "Layout file (default: bundled)");
    grid->add_option("--envs", o.grid_envs, "Environments")->capture_default_str()->check(CLI::PositiveNumber);
    grid->add_option("--episodes", o.episodes, "Episodes per environment")->capture_default_str();
    grid->add_option("--max-actions", o.igridson_actions, "Actions per episode")->capture_default_str();
    grid->add_option("--dropout", o.dropout, "Detection dropout")->capture_default_str();
    grid->add_flag("--static-nodes", o.static_nodes, "Disable object addition and removal");
    grid->add_flag("!--no-render", o.render, "Skip the text and image renders");

    auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*sample) return cmd_sample_env(app, o);
        if (*evolve_cmd) return cmd_evolve(app, o);
        if (*collect) return cmd_collect(app, o);
        if (*train) return cmd_train(app, o);
        if (*eval) return cmd_eval(app, o);
        if (*grid) return cmd_igridson(app, o);
        if (*selftest) return run_selftest(std::cout) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
