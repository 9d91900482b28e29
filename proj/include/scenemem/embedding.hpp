#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace scenemem {

inline constexpr int kEmbeddingDim = 96;

/// Maps a label string to a fixed unit-norm vector.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

// Standard-normal draws seeded by a stable hash of the text, normalized.
class HashEmbeddingProvider : public EmbeddingProvider {
public:
    std::vector<double> embed(std::string_view text) const override;
};

// Precomputed table, one line per entry: the text, a tab, then
// kEmbeddingDim whitespace-separated numbers. Vectors are normalized on load.
// Unknown strings fall back to the hash provider.
class TableEmbeddingProvider : public EmbeddingProvider {
public:
    explicit TableEmbeddingProvider(const std::filesystem::path& path);
    std::vector<double> embed(std::string_view text) const override;
    std::size_t size() const { return table_.size(); }

private:
    std::map<std::string, std::vector<double>, std::less<>> table_;
    HashEmbeddingProvider fallback_;
};

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace scenemem
