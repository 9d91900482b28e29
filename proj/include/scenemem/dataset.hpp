#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "scenemem/memory.hpp"

namespace scenemem {

/// One labeled training example: a memory snapshot, the queries posed at that
/// step, and the ground-truth state of every candidate edge.
struct SGMRecord {
    int env_index = 0;
    int step = 0;
    SceneGraphMemory memory;
    std::vector<NodeId> query_ids;
    std::map<EdgeKey, bool> labels;

    bool operator==(const SGMRecord&) const = default;
};

inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(const std::filesystem::path& path, const std::vector<SGMRecord>& records);
// Embeddings are not stored; they are recomputed from descriptions with `embeddings`.
std::vector<SGMRecord> read_dataset(const std::filesystem::path& path, const EmbeddingProvider& embeddings);

}  // namespace scenemem
