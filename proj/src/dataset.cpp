#include "scenemem/dataset.hpp"

#include <fstream>

#include "scenemem/binary_io.hpp"

namespace scenemem {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'M', 'D'};

void write_node(BinaryWriter& w, const SGMNode& n) {
    w.put<std::uint64_t>(n.id);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(n.type));
    w.put_string(n.label);
    w.put_string(n.description);
    w.put<std::uint64_t>(n.room);
    w.put<std::uint8_t>(n.is_query ? 1 : 0);
    w.put_optional(n.last_observed_t);
    w.put<std::int32_t>(n.times_observed);
    w.put_optional(n.last_moved_t);
    w.put<std::int32_t>(n.times_moved);
    w.put<std::uint64_t>(n.last_locations.size());
    for (NodeId f : n.last_locations) w.put<std::uint64_t>(f);
}

SGMNode read_node(BinaryReader& r, const EmbeddingProvider& embeddings) {
    SGMNode n;
    n.id = r.get<std::uint64_t>();
    const auto type = r.get<std::uint8_t>();
    if (type > static_cast<std::uint8_t>(NodeType::Object)) throw Error("corrupt node type in dataset");
    n.type = static_cast<NodeType>(type);
    n.label = r.get_string();
    n.description = r.get_string();
    n.room = r.get<std::uint64_t>();
    n.is_query = r.get<std::uint8_t>() != 0;
    n.last_observed_t = r.get_optional();
    n.times_observed = r.get<std::int32_t>();
    n.last_moved_t = r.get_optional();
    n.times_moved = r.get<std::int32_t>();
    const auto nloc = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < nloc; ++i) n.last_locations.insert(r.get<std::uint64_t>());
    n.embedding = embeddings.embed(n.description);
    return n;
}

void write_key(BinaryWriter& w, const EdgeKey& k) {
    w.put<std::uint64_t>(k.parent);
    w.put<std::uint64_t>(k.child);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(k.relation));
}

EdgeKey read_key(BinaryReader& r) {
    EdgeKey k;
    k.parent = r.get<std::uint64_t>();
    k.child = r.get<std::uint64_t>();
    const auto rel = r.get<std::uint8_t>();
    if (rel >= kRelations.size()) throw Error("corrupt relation in dataset");
    k.relation = static_cast<Relation>(rel);
    return k;
}

void write_edge(BinaryWriter& w, const SGMEdge& e) {
    write_key(w, e.key);
    w.put<std::uint8_t>(e.is_hypothetical ? 1 : 0);
    w.put<std::int32_t>(e.times_observed);
    w.put<std::int32_t>(e.times_true);
    w.put<std::int32_t>(e.times_changed);
    w.put_optional(e.last_observed_t);
    w.put_optional(e.last_state_change_t);
    w.put_optional(e.last_true_t);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.last_state));
    w.put<double>(e.prior_prob);
}

SGMEdge read_edge(BinaryReader& r) {
    SGMEdge e;
    e.key = read_key(r);
    e.is_hypothetical = r.get<std::uint8_t>() != 0;
    e.times_observed = r.get<std::int32_t>();
    e.times_true = r.get<std::int32_t>();
    e.times_changed = r.get<std::int32_t>();
    e.last_observed_t = r.get_optional();
    e.last_state_change_t = r.get_optional();
    e.last_true_t = r.get_optional();
    const auto state = r.get<std::uint8_t>();
    if (state > 2) throw Error("corrupt edge state in dataset");
    e.last_state = static_cast<EdgeState>(state);
    e.prior_prob = r.get<double>();
    return e;
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const std::vector<SGMRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write dataset '" + path.string() + "'");
    out.write(kMagic, 4);
    BinaryWriter w(out);
    w.put<std::uint32_t>(kDatasetVersion);
    w.put<std::uint64_t>(records.size());
    for (const auto& rec : records) {
        w.put<std::int32_t>(rec.env_index);
        w.put<std::int32_t>(rec.step);
        w.put<std::int32_t>(rec.memory.t());
        w.put<std::uint64_t>(rec.memory.nodes().size());
        for (const auto& [id, n] : rec.memory.nodes()) write_node(w, n);
        w.put<std::uint64_t>(rec.memory.edges().size());
        for (const auto& [k, e] : rec.memory.edges()) write_edge(w, e);
        w.put<std::uint64_t>(rec.memory.query_ids().size());
        for (NodeId q : rec.memory.query_ids()) w.put<std::uint64_t>(q);
        w.put<std::uint64_t>(rec.query_ids.size());
        for (NodeId q : rec.query_ids) w.put<std::uint64_t>(q);
        w.put<std::uint64_t>(rec.labels.size());
        for (const auto& [k, v] : rec.labels) {
            write_key(w, k);
            w.put<std::uint8_t>(v ? 1 : 0);
        }
    }
    if (!w.ok()) throw Error("write failed for dataset '" + path.string() + "'");
}

std::vector<SGMRecord> read_dataset(const std::filesystem::path& path, const EmbeddingProvider& embeddings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open dataset '" + path.string() + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
        throw Error("'" + path.string() + "' is not an SGM dataset");
    }
    BinaryReader r(in);
    const auto version = r.get<std::uint32_t>();
    if (version != kDatasetVersion) throw Error("unsupported dataset version " + std::to_string(version));
    const auto count = r.get<std::uint64_t>();
    std::vector<SGMRecord> out;
    for (std::uint64_t i = 0; i < count; ++i) {
        SGMRecord rec;
        rec.env_index = r.get<std::int32_t>();
        rec.step = r.get<std::int32_t>();
        const int t = r.get<std::int32_t>();
        std::vector<SGMNode> nodes(r.get<std::uint64_t>());
        for (auto& n : nodes) n = read_node(r, embeddings);
        std::vector<SGMEdge> edges(r.get<std::uint64_t>());
        for (auto& e : edges) e = read_edge(r);
        std::set<NodeId> memory_queries;
        const auto nq = r.get<std::uint64_t>();
        for (std::uint64_t j = 0; j < nq; ++j) memory_queries.insert(r.get<std::uint64_t>());
        rec.memory = SceneGraphMemory::from_parts(t, std::move(nodes), std::move(edges), memory_queries);
        rec.query_ids.resize(r.get<std::uint64_t>());
        for (auto& q : rec.query_ids) q = r.get<std::uint64_t>();
        const auto nl = r.get<std::uint64_t>();
        for (std::uint64_t j = 0; j < nl; ++j) {
            const EdgeKey k = read_key(r);
            rec.labels[k] = r.get<std::uint8_t>() != 0;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace scenemem
