#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scenemem/autodiff.hpp"
#include "scenemem/dataset.hpp"
#include "scenemem/memory.hpp"
#include "scenemem/policies.hpp"

namespace scenemem {

struct NepConfig {
    int hidden = 64;
    // Layers in each of the node and edge embedders.
    int embed_layers = 2;
    int encoder_layers = 2;
    int heads = 2;
    int feedforward = 64;
    // Ablation: replace the encoder with the identity.
    bool use_transformer = true;
    // Let candidates of different queries from the same memory attend to each other.
    bool cross_query_attention = false;
    FeatureMask features;

    int fused_width() const { return 2 * hidden; }
};

/// Named parameter tensors of the node edge predictor.
class NepParams {
public:
    NepParams() = default;
    static NepParams init(const NepConfig& config, Seed seed);

    const NepConfig& config() const { return config_; }
    std::vector<Param>& tensors() { return tensors_; }
    const std::vector<Param>& tensors() const { return tensors_; }
    Param& get(const std::string& name);
    const Param& get(const std::string& name) const;
    std::size_t parameter_count() const;
    void zero_grad();

    bool same_values(const NepParams& o) const;

private:
    void add(const std::string& name, int rows, int cols, Rng& rng, double bound);
    void add_constant(const std::string& name, int rows, int cols, double value);

    NepConfig config_;
    std::vector<Param> tensors_;
    std::map<std::string, std::size_t> index_;
};

/// Feature rows for the candidates of one query.
struct QueryFeatures {
    std::vector<EdgeKey> keys;
    Matrix parent;  // candidates x 105
    Matrix child;   // candidates x 105
    Matrix edge;    // candidates x 13
    std::vector<double> labels;
    // Queries sharing a group id may attend to each other under cross-query attention.
    int group = 0;

    int size() const { return static_cast<int>(keys.size()); }
};

QueryFeatures featurize_query(const SceneGraphMemory& m, NodeId query, const std::vector<EdgeKey>& candidates,
                              const FeatureMask& mask);

// Builds the forward graph for a batch of queries; returns the logits var
// (total candidates x 1), rows in query order.
Tape::Var nep_forward(Tape& tape, NepParams& params, const std::vector<const QueryFeatures*>& batch);

// Sigmoid outputs grouped by query.
std::vector<std::vector<double>> nep_predict(const NepParams& params, const std::vector<const QueryFeatures*>& batch);

// Weight applied to false edges: true count / false count, or 1 when either count is 0.
double false_edge_weight(const std::vector<double>& labels);

// Weighted BCE of probabilities against labels, matching the training loss.
double nep_loss(const std::vector<double>& probabilities, const std::vector<double>& labels);

// Loss of the batch; accumulates gradients into params when `backprop`.
double nep_batch_loss(NepParams& params, const std::vector<const QueryFeatures*>& batch, bool backprop);

struct TrainConfig {
    double learning_rate = 1e-4;
    int epochs = 25;
    int batch_size = 100;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    Seed seed = 0;
};

struct AdamState {
    long step = 0;
};

void adam_step(NepParams& params, AdamState& state, const TrainConfig& config);

struct TrainResult {
    NepParams params;
    std::vector<double> epoch_loss;
};

// Features of every query in the records, labeled from the record labels.
std::vector<std::vector<QueryFeatures>> featurize_records(const std::vector<SGMRecord>& records,
                                                          const FeatureMask& mask);

TrainResult train_nep(const std::vector<SGMRecord>& records, const NepConfig& model, const TrainConfig& config);

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const NepParams& params);
NepParams load_checkpoint(const std::filesystem::path& path);

class NepPolicy : public Policy {
public:
    explicit NepPolicy(NepParams params) : params_(std::move(params)) {}
    std::string name() const override { return "nep"; }
    std::vector<double> score(const ScoringContext& ctx) const override;

private:
    NepParams params_;
};

// One mean-aggregation graph convolution: row v of the result is
// ReLU(mean over {v} and its neighbours of H rows, times W). `order` maps rows
// of H to memory node ids; neighbours come from all memory edges.
Matrix gcn_layer(const SceneGraphMemory& m, const std::vector<NodeId>& order, const Matrix& H, const Matrix& W);

}  // namespace scenemem
