#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scenemem/common.hpp"

namespace scenemem {

enum class LabelCategory : std::uint8_t { Room, Furniture, Object };

struct LabelMetadata {
    std::string label;
    LabelCategory category = LabelCategory::Object;
    std::vector<std::string> adjective_categories;
    double sample_prob = 1.0;
    int max_count = 1;
    // Objects only.
    std::optional<double> move_frequency;
    std::optional<double> add_prob;
    std::optional<double> remove_prob;

    bool operator==(const LabelMetadata&) const = default;
};

struct AdjectiveCategory {
    std::string name;
    std::vector<std::string> adjectives;

    bool operator==(const AdjectiveCategory&) const = default;
};

struct PlacementKey {
    std::string room;
    std::string furniture;
    std::string object;
    Relation relation = Relation::In;

    auto operator<=>(const PlacementKey&) const = default;
};

/// Room-furniture and furniture-object relation probabilities. Used both for
/// the global prior and for environment-specific noisy copies.
struct RelationProbs {
    std::map<std::pair<std::string, std::string>, double> room_furniture;
    std::map<PlacementKey, double> furniture_object;

    double room_furniture_prob(std::string_view room, std::string_view furniture) const;
    double placement_prob(const PlacementKey& key) const;

    // Entries of the (room, object) group in key order.
    std::vector<std::pair<PlacementKey, double>> group(std::string_view room,
                                                       std::string_view object) const;

    bool operator==(const RelationProbs&) const = default;
};

class PriorsError : public Error {
public:
    enum class Kind { Parse, Schema, Normalization, UnknownLabel };
    PriorsError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct PriorsGraph {
    std::map<std::string, LabelMetadata> labels;
    RelationProbs probs;
    std::vector<AdjectiveCategory> adjective_lexicon;

    const LabelMetadata& metadata(std::string_view label) const;
    bool has_label(std::string_view label, LabelCategory category) const;
    const AdjectiveCategory& adjective_category(std::string_view name) const;

    // Labels of one category, in the order they were declared in the file.
    std::vector<std::string> rooms;
    std::vector<std::string> furniture;
    std::vector<std::string> objects;

    bool operator==(const PriorsGraph&) const = default;
};

struct PriorsLoadOptions {
    // Drop (room, furniture) pairs with fewer than `min_outgoing_edges`
    // furniture-object edges, then renormalize.
    bool filter_sparse_furniture = false;
    int min_outgoing_edges = 3;
};

// Tolerance for accepting a group whose probabilities do not sum to one.
inline constexpr double kNormalizationTolerance = 1e-6;

PriorsGraph parse_priors(std::string_view text, const PriorsLoadOptions& options = {});
PriorsGraph load_priors(const std::filesystem::path& path, const PriorsLoadOptions& options = {});

// Path of the priors file bundled with the library.
std::filesystem::path bundled_priors_path();

// Probability of `object` being `relation` `furniture` in `room`; 0 when the
// tuple is absent. Throws PriorsError(UnknownLabel) for unknown labels.
double prior_prob(const PriorsGraph& p, std::string_view room, std::string_view furniture,
                  std::string_view object, Relation relation);

struct PriorLocation {
    std::string room;
    std::string furniture;
    Relation relation = Relation::In;
    double probability = 0.0;
};

// Highest-probability placements of `object`; ties broken by (room,
// furniture, relation).
std::vector<PriorLocation> top_k_prior_locations(const PriorsGraph& p, std::string_view object,
                                                 std::size_t k);

// Splits "large red mug" into its adjectives and class label. The class label
// is the longest object/furniture label that is a word-suffix of the
// description.
std::pair<std::vector<std::string>, std::string> split_description(const PriorsGraph& p,
                                                                    std::string_view description);

}  // namespace scenemem
