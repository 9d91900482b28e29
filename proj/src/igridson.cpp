#include "scenemem/igridson.hpp"

#include <atomic>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>

namespace scenemem {

using nlohmann::json;

bool GridLayout::is_free(Cell c) const {
    if (!in_bounds(c) || is_wall(c)) return false;
    for (const auto& s : slots) {
        for (const auto& f : s.cells) {
            if (f == c) return false;
        }
    }
    return true;
}

GridLayout parse_layout(const json& j) {
    try {
        if (j.at("layout_format").get<int>() != 1) throw Error("unsupported layout format");
        GridLayout l;
        l.width = j.at("width").get<int>();
        l.height = j.at("height").get<int>();
        l.grid = j.at("grid").get<std::vector<std::string>>();
        if (static_cast<int>(l.grid.size()) != l.height) throw Error("layout grid height mismatch");
        for (const auto& row : l.grid) {
            if (static_cast<int>(row.size()) != l.width) throw Error("layout grid width mismatch");
            if (row.find_first_not_of("#.+") != std::string::npos) throw Error("unknown layout grid character");
        }
        for (const json& r : j.at("rooms")) {
            l.rooms.push_back({r.at("name").get<std::string>(), r.at("x0").get<int>(), r.at("y0").get<int>(),
                               r.at("x1").get<int>(), r.at("y1").get<int>()});
        }
        for (const json& f : j.at("furniture")) {
            FurnitureSlot s;
            s.room = f.at("room").get<std::string>();
            s.furniture_class = f.at("class").get<std::string>();
            s.glyph = f.at("glyph").get<std::string>().at(0);
            for (const json& c : f.at("cells")) s.cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
            if (s.cells.empty()) throw Error("furniture slot without cells");
            for (const auto& c : s.cells) {
                if (!l.in_bounds(c) || l.is_wall(c)) throw Error("furniture '" + s.furniture_class + "' overlaps a wall");
            }
            l.slots.push_back(std::move(s));
        }
        l.start = {j.at("start").at(0).get<int>(), j.at("start").at(1).get<int>()};
        if (!l.is_free(l.start)) throw Error("layout start cell is not free");
        for (int i = 0; i < static_cast<int>(l.slots.size()); ++i) shortest_path(l, l.start, i);
        return l;
    } catch (const json::exception& e) {
        throw Error(std::string("invalid layout: ") + e.what());
    }
}

GridLayout load_layout(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open layout '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("cannot parse layout '" + path.string() + "': " + e.what());
    }
    return parse_layout(j);
}

std::filesystem::path bundled_layout_path() { return std::filesystem::path(SCENEMEM_DATA_DIR) / "igridson_layout.json"; }

SceneDims layout_scene_dims(const GridLayout& layout, int objects_per_furniture) {
    SceneDims d;
    d.rooms.clear();
    d.objects_per_furniture = objects_per_furniture;
    for (const auto& r : layout.rooms) {
        d.rooms.push_back(r.name);
        d.fixed_furniture[r.name];
    }
    for (const auto& s : layout.slots) d.fixed_furniture[s.room].push_back(s.furniture_class);
    return d;
}

EmbodiedState instantiate(const SceneGraph& sg, const GridLayout& layout) {
    EmbodiedState st;
    st.layout = layout;
    st.agent = layout.start;
    std::vector<bool> used(layout.slots.size(), false);
    std::vector<std::string> mismatches;
    for (NodeId f : sg.ids_of_type(NodeType::Furniture)) {
        const std::string& room = sg.node(sg.parent_edge(f).parent).label;
        const std::string& cls = sg.node(f).label;
        bool bound = false;
        for (std::size_t i = 0; i < layout.slots.size(); ++i) {
            if (!used[i] && layout.slots[i].room == room && layout.slots[i].furniture_class == cls) {
                used[i] = true;
                st.binding[f] = static_cast<int>(i);
                bound = true;
                break;
            }
        }
        if (!bound) mismatches.push_back("scene furniture " + std::to_string(f) + " (" + room + "/" + cls + ") has no slot");
    }
    for (std::size_t i = 0; i < used.size(); ++i) {
        if (!used[i]) mismatches.push_back("slot " + layout.slots[i].room + "/" + layout.slots[i].furniture_class + " is unbound");
    }
    if (!mismatches.empty()) {
        std::string msg = "cannot bind scene to layout:";
        for (const auto& m : mismatches) msg += "\n  " + m;
        throw Error(msg);
    }
    return st;
}

PathResult shortest_path(const GridLayout& layout, Cell from, int slot) {
    if (slot < 0 || slot >= static_cast<int>(layout.slots.size())) throw Error("unknown furniture slot");
    if (!layout.is_free(from)) throw Error("path start is not a free cell");
    const auto& cells = layout.slots[static_cast<std::size_t>(slot)].cells;
    auto adjacent = [&](Cell c) {
        for (const auto& f : cells) {
            if (std::abs(f.x - c.x) + std::abs(f.y - c.y) == 1) return true;
        }
        return false;
    };
    std::vector<int> dist(static_cast<std::size_t>(layout.width * layout.height), -1);
    auto at = [&](Cell c) -> int& { return dist[static_cast<std::size_t>(c.y * layout.width + c.x)]; };
    std::deque<Cell> queue{from};
    at(from) = 0;
    constexpr int dx[] = {1, -1, 0, 0};
    constexpr int dy[] = {0, 0, 1, -1};
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        if (adjacent(c)) return {at(c), c};
        for (int d = 0; d < 4; ++d) {
            const Cell n{c.x + dx[d], c.y + dy[d]};
            if (!layout.is_free(n) || at(n) >= 0) continue;
            at(n) = at(c) + 1;
            queue.push_back(n);
        }
    }
    throw Error("furniture '" + layout.slots[static_cast<std::size_t>(slot)].furniture_class + "' in " +
                layout.slots[static_cast<std::size_t>(slot)].room + " is unreachable");
}

int shortest_path_len(const GridLayout& layout, Cell from, int slot) { return shortest_path(layout, from, slot).length; }

EpisodeResult run_embodied_find(EmbodiedState& st, const EnvInstance& env, SceneGraphMemory& m, const PriorsGraph& p,
                                const Policy& policy, const std::string& description, const QueryOptions& query,
                                int max_actions, double dropout, Seed seed) {
    st.agent = st.layout.start;
    EpisodeResult r;
    const auto visit = [&](NodeId f) {
        auto it = st.binding.find(f);
        if (it == st.binding.end()) throw Error("furniture " + std::to_string(f) + " is not placed in the layout");
        const PathResult path = shortest_path(st.layout, st.agent, it->second);
        r.path_length += path.length;
        st.agent = path.end;
    };
    const SearchResult s = search_object(env, m, p, policy, description, query, max_actions, dropout, seed, visit);
    r.success = s.success;
    r.actions = s.actions;
    return r;
}

IgridsonSummary run_igridson(const IgridsonConfig& cfg, const GridLayout& layout, const PriorsGraph& p,
                             const Policy& policy, const EmbeddingProvider& embeddings) {
    if (cfg.n_envs <= 0 || cfg.episodes_per_env <= 0) throw Error("igridson run needs positive counts");
    const SceneDims dims = layout_scene_dims(layout, cfg.objects_per_furniture);
    std::vector<std::vector<EpisodeResult>> per_env(static_cast<std::size_t>(cfg.n_envs));
    TaskConfig tc;
    tc.seed = cfg.seed;
    auto run_env = [&](int i) {
        EnvInstance env = make_env(p, cfg.noise, dims, env_seed(tc, i), cfg.dynamic_nodes);
        EmbodiedState st = instantiate(env.scene, layout);
        SceneGraphMemory m(&p, &embeddings);
        m.add_structure(env.scene);
        for (int e = 0; e < cfg.episodes_per_env; ++e) {
            const EvolveStats stats = evolve(env, p);
            m.advance_to(env.t);
            const Seed s = derive_seed(env.seed, "episode", static_cast<std::uint64_t>(e));
            const std::string desc = sample_query(env, p, stats.relocated, derive_seed(s, "query"));
            QueryOptions q = cfg.query;
            q.cover_all_furniture = cfg.search_all_furniture;
            q.seed = derive_seed(s, "hypothetical");
            per_env[static_cast<std::size_t>(i)].push_back(
                run_embodied_find(st, env, m, p, policy, desc, q, cfg.max_actions, cfg.dropout, derive_seed(s, "search")));
        }
    };
    if (cfg.workers <= 1) {
        for (int i = 0; i < cfg.n_envs; ++i) run_env(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        std::mutex err_mu;
        std::exception_ptr err;
        for (int w = 0; w < std::min(cfg.workers, cfg.n_envs); ++w) {
            pool.emplace_back([&] {
                for (int i = next++; i < cfg.n_envs; i = next++) {
                    try {
                        run_env(i);
                    } catch (...) {
                        std::lock_guard lock(err_mu);
                        if (!err) err = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (err) std::rethrow_exception(err);
    }
    IgridsonSummary out;
    for (auto& v : per_env) out.episodes.insert(out.episodes.end(), v.begin(), v.end());
    double succ = 0.0, actions = 0.0, path = 0.0;
    for (const auto& e : out.episodes) {
        succ += e.success ? 1.0 : 0.0;
        actions += e.actions;
        path += e.path_length;
    }
    const double n = static_cast<double>(out.episodes.size());
    out.success_rate = succ / n;
    out.mean_actions = actions / n;
    out.mean_path_length = path / n;
    return out;
}

Rendering render(const EmbodiedState& st, const SceneGraph& sg) {
    const GridLayout& l = st.layout;
    std::vector<std::string> rows = l.grid;
    std::map<int, NodeId> slot_to_id;
    for (const auto& [id, slot] : st.binding) slot_to_id[slot] = id;
    for (const auto& s : l.slots) {
        for (const auto& c : s.cells) rows[static_cast<std::size_t>(c.y)][static_cast<std::size_t>(c.x)] = s.glyph;
    }
    rows[static_cast<std::size_t>(st.agent.y)][static_cast<std::size_t>(st.agent.x)] = '@';
    Rendering r;
    for (const auto& row : rows) r.text += row + "\n";
    r.text += "\n";
    for (std::size_t i = 0; i < l.slots.size(); ++i) {
        const auto& s = l.slots[i];
        r.text += std::string(1, s.glyph) + "  ";
        auto it = slot_to_id.find(static_cast<int>(i));
        if (it != slot_to_id.end()) {
            r.text += "id " + std::to_string(it->second) + "  " + s.room + " / " + sg.node(it->second).description() +
                      "  (" + std::to_string(sg.children(it->second).size()) + " objects)";
        } else {
            r.text += s.room + " / " + s.furniture_class + "  (unbound)";
        }
        r.text += "\n";
    }

    constexpr int kPx = 8;
    const int w = l.width * kPx;
    const int h = l.height * kPx;
    r.ppm = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::string pixels(static_cast<std::size_t>(w * h * 3), '\0');
    auto color = [](char ch) -> std::array<unsigned char, 3> {
        switch (ch) {
            case '#': return {60, 60, 60};
            case '.': return {235, 230, 220};
            case '+': return {160, 110, 60};
            case '@': return {210, 40, 40};
            default: {
                const auto k = static_cast<unsigned>(ch - 'a');
                return {static_cast<unsigned char>(60 + (k * 53) % 160), static_cast<unsigned char>(80 + (k * 97) % 140),
                        static_cast<unsigned char>(120 + (k * 31) % 120)};
            }
        }
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto c = color(rows[static_cast<std::size_t>(y / kPx)][static_cast<std::size_t>(x / kPx)]);
            const auto off = static_cast<std::size_t>((y * w + x) * 3);
            pixels[off] = static_cast<char>(c[0]);
            pixels[off + 1] = static_cast<char>(c[1]);
            pixels[off + 2] = static_cast<char>(c[2]);
        }
    }
    r.ppm += pixels;
    return r;
}

}  // namespace scenemem
