#include "scenemem/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "scenemem/common.hpp"
#include "scenemem/rng.hpp"

namespace scenemem {

namespace {

void normalize(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) throw Error("cannot normalize a zero embedding");
    for (double& x : v) x /= n;
}

}  // namespace

std::vector<double> HashEmbeddingProvider::embed(std::string_view text) const {
    Rng rng(derive_seed(0, "embedding", text));
    std::vector<double> v(kEmbeddingDim);
    for (double& x : v) x = rng.normal();
    normalize(v);
    return v;
}

TableEmbeddingProvider::TableEmbeddingProvider(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open embedding table '" + path.string() + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": missing tab separator");
        }
        std::istringstream nums(line.substr(tab + 1));
        std::vector<double> v;
        double x = 0.0;
        while (nums >> x) v.push_back(x);
        if (v.size() != kEmbeddingDim) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(kEmbeddingDim) + " values, got " + std::to_string(v.size()));
        }
        normalize(v);
        table_[line.substr(0, tab)] = std::move(v);
    }
}

std::vector<double> TableEmbeddingProvider::embed(std::string_view text) const {
    auto it = table_.find(text);
    if (it != table_.end()) return it->second;
    return fallback_.embed(text);
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

}  // namespace scenemem
