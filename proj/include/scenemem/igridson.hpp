#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scenemem/dhs.hpp"
#include "scenemem/eval.hpp"
#include "scenemem/memory.hpp"
#include "scenemem/policies.hpp"

namespace scenemem {

struct Cell {
    int x = 0;
    int y = 0;

    auto operator<=>(const Cell&) const = default;
};

struct RoomRegion {
    std::string name;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct FurnitureSlot {
    std::string room;
    std::string furniture_class;
    char glyph = '?';
    std::vector<Cell> cells;
};

/// Static 2-D floor plan. Grid characters: '#' wall, '.' floor, '+' door.
struct GridLayout {
    int width = 0;
    int height = 0;
    std::vector<std::string> grid;
    std::vector<RoomRegion> rooms;
    std::vector<FurnitureSlot> slots;
    Cell start;

    bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    bool is_wall(Cell c) const { return grid[static_cast<std::size_t>(c.y)][static_cast<std::size_t>(c.x)] == '#'; }
    // Walkable: inside the map, not a wall, not covered by furniture.
    bool is_free(Cell c) const;
};

GridLayout parse_layout(const nlohmann::json& j);
GridLayout load_layout(const std::filesystem::path& path);
std::filesystem::path bundled_layout_path();

// Scene dimensions whose rooms and furniture classes match the layout slots.
SceneDims layout_scene_dims(const GridLayout& layout, int objects_per_furniture = 6);

struct EmbodiedState {
    GridLayout layout;
    // Scene furniture id -> slot index.
    std::map<NodeId, int> binding;
    Cell agent;
};

EmbodiedState instantiate(const SceneGraph& sg, const GridLayout& layout);

struct PathResult {
    int length = 0;
    Cell end;
};

// Breadth-first search over 4-connected free cells to the nearest free cell
// next to the slot's footprint.
PathResult shortest_path(const GridLayout& layout, Cell from, int slot);
int shortest_path_len(const GridLayout& layout, Cell from, int slot);

struct EpisodeResult {
    bool success = false;
    int actions = 0;
    int path_length = 0;
};

// One find-object episode with the agent starting at the layout start cell.
// `max_actions` bounds the search; failures report max_actions + 1 actions.
EpisodeResult run_embodied_find(EmbodiedState& st, const EnvInstance& env, SceneGraphMemory& m, const PriorsGraph& p,
                                const Policy& policy, const std::string& description, const QueryOptions& query,
                                int max_actions, double dropout, Seed seed);

struct IgridsonConfig {
    int n_envs = 10;
    int episodes_per_env = 100;
    int max_actions = 10;
    double dropout = 0.25;
    bool dynamic_nodes = true;
    Seed seed = 0;
    int workers = 1;
    int objects_per_furniture = 6;
    // Every furniture in the house is a candidate, not only plausible ones.
    bool search_all_furniture = true;
    NoiseSpec noise;
    QueryOptions query;
};

struct IgridsonSummary {
    std::vector<EpisodeResult> episodes;
    double success_rate = 0.0;
    double mean_actions = 0.0;
    double mean_path_length = 0.0;
};

IgridsonSummary run_igridson(const IgridsonConfig& cfg, const GridLayout& layout, const PriorsGraph& p,
                             const Policy& policy, const EmbeddingProvider& embeddings);

struct Rendering {
    std::string text;
    std::string ppm;
};

// Character grid plus legend, and a binary PPM image (8 pixels per cell).
Rendering render(const EmbodiedState& st, const SceneGraph& sg);

}  // namespace scenemem
