#include "scenemem/nep.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "scenemem/binary_io.hpp"

namespace scenemem {

void NepParams::add(const std::string& name, int rows, int cols, Rng& rng, double bound) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
    }
    index_[name] = tensors_.size();
    tensors_.emplace_back(name, std::move(m));
}

void NepParams::add_constant(const std::string& name, int rows, int cols, double value) {
    index_[name] = tensors_.size();
    tensors_.emplace_back(name, Matrix::Constant(rows, cols, value));
}

NepParams NepParams::init(const NepConfig& c, Seed seed) {
    if (c.hidden <= 0 || c.embed_layers <= 0 || c.heads <= 0 || c.fused_width() % c.heads != 0) {
        throw Error("invalid predictor dimensions");
    }
    NepParams p;
    p.config_ = c;
    Rng rng(derive_seed(seed, "nep_init"));
    auto dense = [&](const std::string& name, int in, int out) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        p.add(name + ".w", in, out, rng, bound);
        p.add(name + ".b", 1, out, rng, bound);
    };
    for (int l = 0; l < c.embed_layers; ++l) dense("node." + std::to_string(l), l == 0 ? kNodeFeatureDim : c.hidden, c.hidden);
    for (int l = 0; l < c.embed_layers; ++l) dense("edge." + std::to_string(l), l == 0 ? kEdgeFeatureDim : c.hidden, c.hidden);
    const int d = c.fused_width();
    if (c.use_transformer) {
        for (int l = 0; l < c.encoder_layers; ++l) {
            const std::string pre = "enc." + std::to_string(l);
            for (const char* proj : {".q", ".k", ".v", ".o"}) dense(pre + proj, d, d);
            p.add_constant(pre + ".ln1.g", 1, d, 1.0);
            p.add_constant(pre + ".ln1.b", 1, d, 0.0);
            dense(pre + ".ff1", d, c.feedforward);
            dense(pre + ".ff2", c.feedforward, d);
            p.add_constant(pre + ".ln2.g", 1, d, 1.0);
            p.add_constant(pre + ".ln2.b", 1, d, 0.0);
        }
    }
    dense("head.0", d, c.hidden);
    dense("head.1", c.hidden, c.hidden);
    dense("head.2", c.hidden, 1);
    return p;
}

Param& NepParams::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("no parameter '" + name + "'");
    return tensors_[it->second];
}

const Param& NepParams::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("no parameter '" + name + "'");
    return tensors_[it->second];
}

std::size_t NepParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
    return n;
}

void NepParams::zero_grad() {
    for (auto& t : tensors_) t.grad.setZero();
}

bool NepParams::same_values(const NepParams& o) const {
    if (tensors_.size() != o.tensors_.size()) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        if (tensors_[i].name != o.tensors_[i].name || tensors_[i].value != o.tensors_[i].value) return false;
    }
    return true;
}

QueryFeatures featurize_query(const SceneGraphMemory& m, NodeId query, const std::vector<EdgeKey>& candidates,
                              const FeatureMask& mask) {
    QueryFeatures f;
    f.keys = candidates;
    const auto n = static_cast<Eigen::Index>(candidates.size());
    f.parent.resize(n, kNodeFeatureDim);
    f.child.resize(n, kNodeFeatureDim);
    f.edge.resize(n, kEdgeFeatureDim);
    const auto child = m.featurize_node(query, mask);
    std::map<NodeId, std::vector<double>> parents;
    for (Eigen::Index i = 0; i < n; ++i) {
        const EdgeKey& k = candidates[static_cast<std::size_t>(i)];
        auto it = parents.find(k.parent);
        if (it == parents.end()) it = parents.emplace(k.parent, m.featurize_node(k.parent, mask)).first;
        const auto e = m.featurize_edge(k, mask);
        for (int j = 0; j < kNodeFeatureDim; ++j) {
            f.parent(i, j) = it->second[static_cast<std::size_t>(j)];
            f.child(i, j) = child[static_cast<std::size_t>(j)];
        }
        for (int j = 0; j < kEdgeFeatureDim; ++j) f.edge(i, j) = e[static_cast<std::size_t>(j)];
    }
    return f;
}

namespace {

Tape::Var dense(Tape& tape, NepParams& p, const std::string& name, Tape::Var x) {
    return tape.add_row(tape.matmul(x, tape.param(p.get(name + ".w"))), tape.param(p.get(name + ".b")));
}

Tape::Var embed(Tape& tape, NepParams& p, const std::string& prefix, Tape::Var x) {
    for (int l = 0; l < p.config().embed_layers; ++l) x = tape.relu(dense(tape, p, prefix + std::to_string(l), x));
    return x;
}

}  // namespace

Tape::Var nep_forward(Tape& tape, NepParams& params, const std::vector<const QueryFeatures*>& batch) {
    int rows = 0;
    for (const auto* q : batch) {
        if (q->size() == 0) throw Error("predictor input has a query without candidates");
        rows += q->size();
    }
    if (rows == 0) throw Error("predictor input is empty");
    Matrix P(rows, kNodeFeatureDim), C(rows, kNodeFeatureDim), E(rows, kEdgeFeatureDim);
    std::vector<int> offsets{0};
    int r = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto* q = batch[i];
        P.middleRows(r, q->size()) = q->parent;
        C.middleRows(r, q->size()) = q->child;
        E.middleRows(r, q->size()) = q->edge;
        r += q->size();
        const bool merge = params.config().cross_query_attention && i + 1 < batch.size() &&
                           batch[i + 1]->group == q->group;
        if (!merge) offsets.push_back(r);
    }
    const NepConfig& c = params.config();
    const auto parent = embed(tape, params, "node.", tape.constant(std::move(P)));
    const auto child = embed(tape, params, "node.", tape.constant(std::move(C)));
    const auto edge = embed(tape, params, "edge.", tape.constant(std::move(E)));
    auto x = tape.concat_cols(tape.scale(tape.add(parent, child), 0.5), edge);
    if (c.use_transformer) {
        for (int l = 0; l < c.encoder_layers; ++l) {
            const std::string pre = "enc." + std::to_string(l);
            const auto q = dense(tape, params, pre + ".q", x);
            const auto k = dense(tape, params, pre + ".k", x);
            const auto v = dense(tape, params, pre + ".v", x);
            const auto a = dense(tape, params, pre + ".o", tape.attention(q, k, v, offsets, c.heads));
            x = tape.layer_norm(tape.add(x, a), tape.param(params.get(pre + ".ln1.g")),
                                tape.param(params.get(pre + ".ln1.b")));
            const auto ff = dense(tape, params, pre + ".ff2", tape.relu(dense(tape, params, pre + ".ff1", x)));
            x = tape.layer_norm(tape.add(x, ff), tape.param(params.get(pre + ".ln2.g")),
                                tape.param(params.get(pre + ".ln2.b")));
        }
    }
    x = tape.relu(dense(tape, params, "head.0", x));
    x = tape.relu(dense(tape, params, "head.1", x));
    return dense(tape, params, "head.2", x);
}

std::vector<std::vector<double>> nep_predict(const NepParams& params, const std::vector<const QueryFeatures*>& batch) {
    // The tape only reads parameter values here; no gradient is written back.
    NepParams& p = const_cast<NepParams&>(params);
    Tape tape;
    const auto logits = nep_forward(tape, p, batch);
    std::vector<std::vector<double>> out;
    Eigen::Index r = 0;
    for (const auto* q : batch) {
        std::vector<double> v;
        for (int i = 0; i < q->size(); ++i) v.push_back(sigmoid(tape.value(logits)(r++, 0)));
        out.push_back(std::move(v));
    }
    return out;
}

double false_edge_weight(const std::vector<double>& labels) {
    double t = 0.0, f = 0.0;
    for (double y : labels) (y > 0.5 ? t : f) += 1.0;
    if (t == 0.0 || f == 0.0) return 1.0;
    return t / f;
}

double nep_loss(const std::vector<double>& probabilities, const std::vector<double>& labels) {
    if (probabilities.size() != labels.size()) throw Error("loss: length mismatch");
    if (labels.empty()) throw Error("loss: no candidates");
    const double wf = false_edge_weight(labels);
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = std::clamp(probabilities[i], 1e-7, 1.0 - 1e-7);
        const double l = -(labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p));
        total += (labels[i] > 0.5 ? 1.0 : wf) * l;
    }
    return total / static_cast<double>(labels.size());
}

double nep_batch_loss(NepParams& params, const std::vector<const QueryFeatures*>& batch, bool backprop) {
    Tape tape;
    const auto logits = nep_forward(tape, params, batch);
    std::vector<double> labels;
    for (const auto* q : batch) {
        if (q->labels.size() != q->keys.size()) throw Error("query features are missing labels");
        labels.insert(labels.end(), q->labels.begin(), q->labels.end());
    }
    const double wf = false_edge_weight(labels);
    std::vector<double> weights;
    for (double y : labels) weights.push_back(y > 0.5 ? 1.0 : wf);
    const auto loss = tape.bce_with_logits(logits, std::move(labels), std::move(weights));
    const double value = tape.value(loss)(0, 0);
    if (!std::isfinite(value)) {
        throw Error("non-finite training loss (" + std::to_string(value) + ") on a batch of " +
                    std::to_string(batch.size()) + " queries");
    }
    if (backprop) tape.backward(loss);
    return value;
}

void adam_step(NepParams& params, AdamState& state, const TrainConfig& c) {
    ++state.step;
    const double b1t = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double b2t = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (auto& t : params.tensors()) {
        t.m = c.beta1 * t.m + (1.0 - c.beta1) * t.grad;
        t.v = c.beta2 * t.v + (1.0 - c.beta2) * t.grad.cwiseProduct(t.grad);
        t.value.array() -= c.learning_rate * (t.m.array() / b1t) / ((t.v.array() / b2t).sqrt() + c.epsilon);
    }
}

std::vector<std::vector<QueryFeatures>> featurize_records(const std::vector<SGMRecord>& records,
                                                          const FeatureMask& mask) {
    std::vector<std::vector<QueryFeatures>> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        std::vector<QueryFeatures> qs;
        for (NodeId q : rec.query_ids) {
            const auto cands = rec.memory.candidate_edges(q);
            if (cands.empty()) continue;
            QueryFeatures f = featurize_query(rec.memory, q, cands, mask);
            for (const auto& k : cands) {
                auto it = rec.labels.find(k);
                if (it == rec.labels.end()) throw Error("record " + std::to_string(i) + " lacks a candidate label");
                f.labels.push_back(it->second ? 1.0 : 0.0);
            }
            f.group = static_cast<int>(i);
            qs.push_back(std::move(f));
        }
        out.push_back(std::move(qs));
    }
    return out;
}

TrainResult train_nep(const std::vector<SGMRecord>& records, const NepConfig& model, const TrainConfig& config) {
    if (records.empty()) throw Error("training dataset is empty");
    for (const auto& r : records) {
        if (r.labels.empty()) throw Error("training dataset has records without labels");
    }
    if (config.batch_size <= 0 || config.epochs < 0) throw Error("invalid training configuration");
    TrainResult result{NepParams::init(model, config.seed), {}};
    const auto features = featurize_records(records, model.features);
    AdamState adam;
    std::vector<std::size_t> order(records.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        double sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            std::vector<const QueryFeatures*> batch;
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            for (std::size_t i = start; i < end; ++i) {
                for (const auto& q : features[order[i]]) batch.push_back(&q);
            }
            if (batch.empty()) continue;
            result.params.zero_grad();
            sum += nep_batch_loss(result.params, batch, true);
            adam_step(result.params, adam, config);
            ++batches;
        }
        result.epoch_loss.push_back(batches ? sum / batches : 0.0);
    }
    return result;
}

namespace {

constexpr char kCheckpointMagic[4] = {'N', 'E', 'P', 'C'};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NepParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
    out.write(kCheckpointMagic, 4);
    BinaryWriter w(out);
    w.put<std::uint32_t>(kCheckpointVersion);
    const NepConfig& c = params.config();
    for (int v : {c.hidden, c.embed_layers, c.encoder_layers, c.heads, c.feedforward}) w.put<std::int32_t>(v);
    for (bool b : {c.use_transformer, c.cross_query_attention, c.features.semantic, c.features.temporal,
                   c.features.prior}) {
        w.put<std::uint8_t>(b ? 1 : 0);
    }
    w.put<std::uint64_t>(params.tensors().size());
    for (const auto& t : params.tensors()) {
        w.put_string(t.name);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(t.value.rows()));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(t.value.cols()));
        for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
            for (Eigen::Index j = 0; j < t.value.cols(); ++j) w.put<double>(t.value(i, j));
        }
    }
    if (!w.ok()) throw Error("write failed for checkpoint '" + path.string() + "'");
}

NepParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kCheckpointMagic, 4)) {
        throw Error("'" + path.string() + "' is not a predictor checkpoint");
    }
    BinaryReader r(in);
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
    NepConfig c;
    c.hidden = r.get<std::int32_t>();
    c.embed_layers = r.get<std::int32_t>();
    c.encoder_layers = r.get<std::int32_t>();
    c.heads = r.get<std::int32_t>();
    c.feedforward = r.get<std::int32_t>();
    c.use_transformer = r.get<std::uint8_t>() != 0;
    c.cross_query_attention = r.get<std::uint8_t>() != 0;
    c.features.semantic = r.get<std::uint8_t>() != 0;
    c.features.temporal = r.get<std::uint8_t>() != 0;
    c.features.prior = r.get<std::uint8_t>() != 0;
    NepParams p = NepParams::init(c, 0);
    const auto n = r.get<std::uint64_t>();
    if (n != p.tensors().size()) throw Error("checkpoint tensor count does not match its configuration");
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::string name = r.get_string();
        Param& t = p.get(name);
        const auto rows = r.get<std::uint32_t>();
        const auto cols = r.get<std::uint32_t>();
        if (rows != t.value.rows() || cols != t.value.cols()) throw Error("checkpoint shape mismatch for '" + name + "'");
        for (Eigen::Index a = 0; a < t.value.rows(); ++a) {
            for (Eigen::Index b = 0; b < t.value.cols(); ++b) t.value(a, b) = r.get<double>();
        }
    }
    return p;
}

std::vector<double> NepPolicy::score(const ScoringContext& ctx) const {
    const QueryFeatures f = featurize_query(ctx.memory, ctx.query, ctx.candidates, params_.config().features);
    return nep_predict(params_, {&f}).front();
}

Matrix gcn_layer(const SceneGraphMemory& m, const std::vector<NodeId>& order, const Matrix& H, const Matrix& W) {
    if (static_cast<Eigen::Index>(order.size()) != H.rows()) throw Error("gcn_layer: row count mismatch");
    std::map<NodeId, int> row;
    for (std::size_t i = 0; i < order.size(); ++i) row[order[i]] = static_cast<int>(i);
    std::vector<std::set<int>> nbrs(order.size());
    for (const auto& [k, e] : m.edges()) {
        auto a = row.find(k.parent);
        auto b = row.find(k.child);
        if (a == row.end() || b == row.end()) continue;
        nbrs[static_cast<std::size_t>(a->second)].insert(b->second);
        nbrs[static_cast<std::size_t>(b->second)].insert(a->second);
    }
    Matrix agg(H.rows(), H.cols());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        agg.row(r) = H.row(r);
        for (int j : nbrs[i]) {
            if (j != static_cast<int>(i)) agg.row(r) += H.row(j);
        }
        nbrs[i].erase(static_cast<int>(i));
        agg.row(r) /= static_cast<double>(nbrs[i].size() + 1);
    }
    return (agg * W).cwiseMax(0.0);
}

}  // namespace scenemem
