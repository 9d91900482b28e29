#pragma once

#include <string>

#include "json.hpp"
#include "scenemem/priors.hpp"

namespace fixtures {

// One kitchen with a shelf and a cabinet; mugs and plates.
inline nlohmann::json toy_priors_json() {
    using nlohmann::json;
    json d;
    d["priors_format"] = 1;
    d["adjective_lexicon"] = json::array({
        {{"category", "size"}, {"adjectives", {"small", "large"}}},
        {{"category", "color"}, {"adjectives", {"red", "blue"}}},
    });
    d["rooms"] = json::array({{{"label", "kitchen"}, {"adjective_categories", json::array()}, {"sample_prob", 1.0},
                               {"max_count", 1}}});
    d["furniture"] = json::array({
        {{"label", "shelf"}, {"adjective_categories", {"size"}}, {"sample_prob", 1.0}, {"max_count", 3}},
        {{"label", "cabinet"}, {"adjective_categories", {"color"}}, {"sample_prob", 1.0}, {"max_count", 2}},
    });
    d["objects"] = json::array({
        {{"label", "mug"}, {"adjective_categories", {"size", "color"}}, {"sample_prob", 1.0}, {"max_count", 20},
         {"move_frequency", 1.0}, {"add_prob", 0.0}, {"remove_prob", 0.0}},
        {{"label", "plate"}, {"adjective_categories", {"color"}}, {"sample_prob", 1.0}, {"max_count", 20},
         {"move_frequency", 1.0}, {"add_prob", 0.0}, {"remove_prob", 0.0}},
    });
    d["room_furniture_edges"] = json::array({
        {{"room", "kitchen"}, {"furniture", "shelf"}, {"prob", 0.5}},
        {{"room", "kitchen"}, {"furniture", "cabinet"}, {"prob", 0.5}},
    });
    d["furniture_object_edges"] = json::array({
        {{"room", "kitchen"}, {"furniture", "shelf"}, {"object", "mug"}, {"relation", "onTop"}, {"prob", 0.6}},
        {{"room", "kitchen"}, {"furniture", "cabinet"}, {"object", "mug"}, {"relation", "in"}, {"prob", 0.4}},
        {{"room", "kitchen"}, {"furniture", "shelf"}, {"object", "plate"}, {"relation", "onTop"}, {"prob", 0.3}},
        {{"room", "kitchen"}, {"furniture", "cabinet"}, {"object", "plate"}, {"relation", "in"}, {"prob", 0.7}},
    });
    return d;
}

inline scenemem::PriorsGraph toy_priors() { return scenemem::parse_priors(toy_priors_json().dump()); }

inline const scenemem::PriorsGraph& bundled() {
    static const scenemem::PriorsGraph p = scenemem::load_priors(scenemem::bundled_priors_path());
    return p;
}

}  // namespace fixtures
