#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "linkforge/curve.hpp"

namespace linkforge {

// Dense retrieval index: float32 embedding rows plus an id table, bound to
// the checkpoint that produced the rows via its file fingerprint. Queries
// are exact cosine scans (embeddings are stored L2-normalized, so the score
// is a dot product accumulated in double).
class EmbeddingIndex {
public:
    EmbeddingIndex(int dim, std::uint64_t checkpoint_fingerprint);

    int dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    std::uint64_t fingerprint() const { return fingerprint_; }

    // emb must already be L2-normalized; stored at float32 precision.
    void add(std::uint64_t id, std::uint32_t n_joints, const Eigen::VectorXd& emb);

    struct Hit {
        std::uint64_t id = 0;
        double score = 0;
        std::uint32_t n_joints = 0;
    };
    // Top-k by score, descending; joint-count filter first; equal scores
    // rank by ascending id. Throws EmptyIndexError when nothing qualifies.
    std::vector<Hit> query(const Eigen::VectorXd& emb, int k, int max_joints) const;

    void save(const std::string& path) const;
    static EmbeddingIndex load(const std::string& path);

private:
    int dim_;
    std::uint64_t fingerprint_;
    std::vector<float> data_;  // row-major, size() * dim_
    struct Entry {
        std::uint64_t id;
        std::uint32_t n_joints;
    };
    std::vector<Entry> entries_;
};

// The slow oracle the embedding search approximates: exact ordered-distance
// scan over stored coupler curves. Query and stored curves must share the
// sample count. Results rank ascending by distance, ties by index.
struct BruteHit {
    int index = 0;
    double od = 0;
};
std::vector<BruteHit> brute_force_search(const std::vector<Curve>& curves,
                                         const Curve& query, int k);

} // namespace linkforge
