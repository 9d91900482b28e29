#include "scenemem/priors.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace scenemem {

using nlohmann::json;

std::string_view to_string(Relation r) {
    switch (r) {
        case Relation::In: return "in";
        case Relation::Contains: return "contains";
        case Relation::OnTop: return "onTop";
        case Relation::Under: return "under";
    }
    return "?";
}

Relation relation_from_string(std::string_view s) {
    for (Relation r : kRelations) {
        if (to_string(r) == s) return r;
    }
    throw Error("unknown relation '" + std::string(s) + "'");
}

std::string_view to_string(NodeType t) {
    switch (t) {
        case NodeType::House: return "house";
        case NodeType::Floor: return "floor";
        case NodeType::Room: return "room";
        case NodeType::Furniture: return "furniture";
        case NodeType::Object: return "object";
    }
    return "?";
}

NodeType node_type_from_string(std::string_view s) {
    for (auto t : {NodeType::House, NodeType::Floor, NodeType::Room, NodeType::Furniture,
                   NodeType::Object}) {
        if (to_string(t) == s) return t;
    }
    throw Error("unknown node type '" + std::string(s) + "'");
}

double RelationProbs::room_furniture_prob(std::string_view room, std::string_view furniture) const {
    auto it = room_furniture.find({std::string(room), std::string(furniture)});
    return it == room_furniture.end() ? 0.0 : it->second;
}

double RelationProbs::placement_prob(const PlacementKey& key) const {
    auto it = furniture_object.find(key);
    return it == furniture_object.end() ? 0.0 : it->second;
}

std::vector<std::pair<PlacementKey, double>> RelationProbs::group(std::string_view room,
                                                                  std::string_view object) const {
    std::vector<std::pair<PlacementKey, double>> out;
    for (auto it = furniture_object.lower_bound(PlacementKey{std::string(room), "", "", Relation::In});
         it != furniture_object.end() && it->first.room == room; ++it) {
        if (it->first.object == object) out.emplace_back(it->first, it->second);
    }
    return out;
}

const LabelMetadata& PriorsGraph::metadata(std::string_view label) const {
    auto it = labels.find(std::string(label));
    if (it == labels.end()) {
        throw PriorsError(PriorsError::Kind::UnknownLabel, "unknown label '" + std::string(label) + "'");
    }
    return it->second;
}

bool PriorsGraph::has_label(std::string_view label, LabelCategory category) const {
    auto it = labels.find(std::string(label));
    return it != labels.end() && it->second.category == category;
}

const AdjectiveCategory& PriorsGraph::adjective_category(std::string_view name) const {
    for (const auto& c : adjective_lexicon) {
        if (c.name == name) return c;
    }
    throw PriorsError(PriorsError::Kind::UnknownLabel,
                      "unknown adjective category '" + std::string(name) + "'");
}

namespace {

[[noreturn]] void schema_error(const std::string& what) {
    throw PriorsError(PriorsError::Kind::Schema, "priors schema violation: " + what);
}

double read_probability(const json& j, const char* field, const std::string& context) {
    if (!j.contains(field)) schema_error(context + ": missing '" + field + "'");
    const json& v = j.at(field);
    if (!v.is_number()) schema_error(context + ": '" + field + "' is not a number");
    const double p = v.get<double>();
    if (!(p >= 0.0 && p <= 1.0)) {
        schema_error(context + ": '" + field + "' = " + std::to_string(p) + " outside [0,1]");
    }
    return p;
}

std::string read_string(const json& j, const char* field, const std::string& context) {
    if (!j.contains(field) || !j.at(field).is_string()) {
        schema_error(context + ": missing string '" + field + "'");
    }
    return j.at(field).get<std::string>();
}

const json& read_array(const json& j, const char* field) {
    if (!j.contains(field) || !j.at(field).is_array()) schema_error(std::string("missing list '") + field + "'");
    return j.at(field);
}

void read_labels(PriorsGraph& g, const json& list, LabelCategory category, const char* section,
                 std::vector<std::string>& order) {
    for (const json& e : list) {
        if (!e.is_object()) schema_error(std::string(section) + ": entry is not an object");
        LabelMetadata m;
        m.label = read_string(e, "label", section);
        const std::string ctx = std::string(section) + " '" + m.label + "'";
        m.category = category;
        if (!e.contains("adjective_categories") || !e.at("adjective_categories").is_array()) {
            schema_error(ctx + ": missing 'adjective_categories'");
        }
        for (const json& a : e.at("adjective_categories")) {
            if (!a.is_string()) schema_error(ctx + ": adjective category is not a string");
            m.adjective_categories.push_back(a.get<std::string>());
        }
        m.sample_prob = read_probability(e, "sample_prob", ctx);
        if (!e.contains("max_count") || !e.at("max_count").is_number_integer() ||
            e.at("max_count").get<long long>() < 1) {
            schema_error(ctx + ": 'max_count' must be a positive integer");
        }
        m.max_count = e.at("max_count").get<int>();
        const bool is_object = category == LabelCategory::Object;
        for (const char* f : {"move_frequency", "add_prob", "remove_prob"}) {
            if (e.contains(f) != is_object) {
                schema_error(ctx + (is_object ? ": missing '" : ": unexpected '") + f + "'");
            }
        }
        if (is_object) {
            m.move_frequency = read_probability(e, "move_frequency", ctx);
            m.add_prob = read_probability(e, "add_prob", ctx);
            m.remove_prob = read_probability(e, "remove_prob", ctx);
        }
        if (g.labels.contains(m.label)) schema_error("duplicate label '" + m.label + "'");
        order.push_back(m.label);
        g.labels.emplace(m.label, std::move(m));
    }
}

template <class Map, class GroupOf>
void normalize_groups(Map& entries, GroupOf group_of, const char* what) {
    std::map<std::pair<std::string, std::string>, double> sums;
    for (const auto& [k, p] : entries) sums[group_of(k)] += p;
    for (const auto& [g, s] : sums) {
        if (std::abs(s - 1.0) > kNormalizationTolerance) {
            std::ostringstream os;
            os.precision(17);
            os << what << " (" << g.first << ", " << g.second << ") sums to " << s;
            throw PriorsError(PriorsError::Kind::Normalization, os.str());
        }
    }
    for (auto& [k, p] : entries) p /= sums[group_of(k)];
}

void filter_sparse(PriorsGraph& g, int min_edges) {
    std::map<std::pair<std::string, std::string>, int> outgoing;
    for (const auto& [k, p] : g.probs.furniture_object) ++outgoing[{k.room, k.furniture}];
    std::erase_if(g.probs.room_furniture, [&](const auto& e) { return outgoing[e.first] < min_edges; });
    std::erase_if(g.probs.furniture_object,
                  [&](const auto& e) { return outgoing[{e.first.room, e.first.furniture}] < min_edges; });
    // renormalize the survivors without a tolerance check
    std::map<std::string, double> room_sum;
    for (const auto& [k, p] : g.probs.room_furniture) room_sum[k.first] += p;
    for (auto& [k, p] : g.probs.room_furniture) p /= room_sum[k.first];
    std::map<std::pair<std::string, std::string>, double> group_sum;
    for (const auto& [k, p] : g.probs.furniture_object) group_sum[{k.room, k.object}] += p;
    for (auto& [k, p] : g.probs.furniture_object) {
        const double s = group_sum[{k.room, k.object}];
        if (s > 0.0) p /= s;
    }
}

}  // namespace

PriorsGraph parse_priors(std::string_view text, const PriorsLoadOptions& options) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw PriorsError(PriorsError::Kind::Parse, std::string("priors parse error: ") + e.what());
    }
    if (!doc.is_object()) schema_error("top level is not an object");
    if (!doc.contains("priors_format") || doc.at("priors_format") != 1) {
        schema_error("'priors_format: 1' required");
    }

    PriorsGraph g;
    for (const json& c : read_array(doc, "adjective_lexicon")) {
        AdjectiveCategory cat;
        cat.name = read_string(c, "category", "adjective_lexicon");
        for (const json& a : read_array(c, "adjectives")) cat.adjectives.push_back(a.get<std::string>());
        if (cat.adjectives.empty()) schema_error("adjective category '" + cat.name + "' is empty");
        g.adjective_lexicon.push_back(std::move(cat));
    }
    read_labels(g, read_array(doc, "rooms"), LabelCategory::Room, "rooms", g.rooms);
    read_labels(g, read_array(doc, "furniture"), LabelCategory::Furniture, "furniture", g.furniture);
    read_labels(g, read_array(doc, "objects"), LabelCategory::Object, "objects", g.objects);
    for (const auto& [label, m] : g.labels) {
        for (const auto& c : m.adjective_categories) {
            const bool known = std::any_of(g.adjective_lexicon.begin(), g.adjective_lexicon.end(),
                                           [&](const AdjectiveCategory& a) { return a.name == c; });
            if (!known) schema_error("label '" + label + "' uses unknown adjective category '" + c + "'");
        }
    }

    auto require = [&](const std::string& label, LabelCategory cat, const std::string& ctx) {
        if (!g.has_label(label, cat)) schema_error(ctx + ": dangling label '" + label + "'");
    };
    for (const json& e : read_array(doc, "room_furniture_edges")) {
        const std::string room = read_string(e, "room", "room_furniture_edges");
        const std::string furn = read_string(e, "furniture", "room_furniture_edges");
        const std::string ctx = "room_furniture_edges (" + room + ", " + furn + ")";
        require(room, LabelCategory::Room, ctx);
        require(furn, LabelCategory::Furniture, ctx);
        const double p = read_probability(e, "prob", ctx);
        if (!g.probs.room_furniture.emplace(std::pair{room, furn}, p).second) schema_error(ctx + ": duplicate edge");
    }
    for (const json& e : read_array(doc, "furniture_object_edges")) {
        PlacementKey k;
        k.room = read_string(e, "room", "furniture_object_edges");
        k.furniture = read_string(e, "furniture", "furniture_object_edges");
        k.object = read_string(e, "object", "furniture_object_edges");
        const std::string rel = read_string(e, "relation", "furniture_object_edges");
        const std::string ctx =
            "furniture_object_edges (" + k.room + ", " + k.furniture + ", " + k.object + ", " + rel + ")";
        require(k.room, LabelCategory::Room, ctx);
        require(k.furniture, LabelCategory::Furniture, ctx);
        require(k.object, LabelCategory::Object, ctx);
        try {
            k.relation = relation_from_string(rel);
        } catch (const Error&) {
            schema_error(ctx + ": unknown relation");
        }
        const double p = read_probability(e, "prob", ctx);
        if (!g.probs.furniture_object.emplace(k, p).second) schema_error(ctx + ": duplicate edge");
    }

    normalize_groups(
        g.probs.room_furniture, [](const auto& k) { return std::pair{k.first, std::string()}; },
        "room furniture probabilities");
    normalize_groups(
        g.probs.furniture_object, [](const PlacementKey& k) { return std::pair{k.room, k.object}; },
        "furniture-object probabilities for");

    if (options.filter_sparse_furniture) filter_sparse(g, options.min_outgoing_edges);
    return g;
}

PriorsGraph load_priors(const std::filesystem::path& path, const PriorsLoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PriorsError(PriorsError::Kind::Parse, "cannot open priors file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_priors(buf.str(), options);
}

std::filesystem::path bundled_priors_path() {
    return std::filesystem::path(SCENEMEM_DATA_DIR) / "priors.json";
}

double prior_prob(const PriorsGraph& p, std::string_view room, std::string_view furniture,
                  std::string_view object, Relation relation) {
    for (auto [label, cat] : {std::pair{room, LabelCategory::Room}, std::pair{furniture, LabelCategory::Furniture},
                              std::pair{object, LabelCategory::Object}}) {
        if (!p.has_label(label, cat)) {
            throw PriorsError(PriorsError::Kind::UnknownLabel, "unknown label '" + std::string(label) + "'");
        }
    }
    return p.probs.placement_prob({std::string(room), std::string(furniture), std::string(object), relation});
}

std::vector<PriorLocation> top_k_prior_locations(const PriorsGraph& p, std::string_view object,
                                                 std::size_t k) {
    if (!p.has_label(object, LabelCategory::Object)) {
        throw PriorsError(PriorsError::Kind::UnknownLabel, "unknown object '" + std::string(object) + "'");
    }
    std::vector<PriorLocation> all;
    for (const auto& [key, prob] : p.probs.furniture_object) {
        if (key.object == object) all.push_back({key.room, key.furniture, key.relation, prob});
    }
    // map order already is (room, furniture, relation) within one object
    std::stable_sort(all.begin(), all.end(),
                     [](const PriorLocation& a, const PriorLocation& b) { return a.probability > b.probability; });
    if (all.size() > k) all.resize(k);
    return all;
}

std::pair<std::vector<std::string>, std::string> split_description(const PriorsGraph& p,
                                                                    std::string_view description) {
    std::vector<std::string> words;
    std::istringstream is{std::string(description)};
    for (std::string w; is >> w;) words.push_back(w);
    for (std::size_t start = 0; start < words.size(); ++start) {
        std::string label;
        for (std::size_t i = start; i < words.size(); ++i) {
            if (!label.empty()) label += ' ';
            label += words[i];
        }
        auto it = p.labels.find(label);
        if (it != p.labels.end() && it->second.category != LabelCategory::Room) {
            return {std::vector<std::string>(words.begin(), words.begin() + static_cast<long>(start)), label};
        }
    }
    throw PriorsError(PriorsError::Kind::UnknownLabel,
                      "description '" + std::string(description) + "' has no known label");
}

}  // namespace scenemem
