#include "linkforge/embedding_index.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "linkforge/errors.hpp"
#include "linkforge/metrics.hpp"

namespace linkforge {

static_assert(std::endian::native == std::endian::little,
              "index layout assumes a little-endian host");

namespace {
constexpr char kMagic[4] = {'L', 'F', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;
} // namespace

EmbeddingIndex::EmbeddingIndex(int dim, std::uint64_t checkpoint_fingerprint)
    : dim_(dim), fingerprint_(checkpoint_fingerprint) {
    if (dim < 1) throw ShapeMismatchError("EmbeddingIndex: dim < 1");
}

void EmbeddingIndex::add(std::uint64_t id, std::uint32_t n_joints,
                         const Eigen::VectorXd& emb) {
    if (int(emb.size()) != dim_)
        throw ShapeMismatchError("EmbeddingIndex::add: wrong embedding size");
    for (int i = 0; i < dim_; ++i) data_.push_back(float(emb[i]));
    entries_.push_back({id, n_joints});
}

std::vector<EmbeddingIndex::Hit> EmbeddingIndex::query(const Eigen::VectorXd& emb,
                                                       int k, int max_joints) const {
    if (int(emb.size()) != dim_)
        throw ShapeMismatchError("EmbeddingIndex::query: wrong embedding size");
    if (entries_.empty()) throw EmptyIndexError("query over an empty index");
    if (k < 1) throw EmptyIndexError("query with k < 1");

    std::vector<Hit> hits;
    hits.reserve(entries_.size());
    for (std::size_t r = 0; r < entries_.size(); ++r) {
        if (int(entries_[r].n_joints) > max_joints) continue;
        const float* row = data_.data() + r * dim_;
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += double(row[i]) * emb[i];
        hits.push_back({entries_[r].id, s, entries_[r].n_joints});
    }
    if (hits.empty())
        throw EmptyIndexError("no index entry passes the joint-count filter");
    const auto better = [](const Hit& a, const Hit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    };
    if (int(hits.size()) > k) {
        std::nth_element(hits.begin(), hits.begin() + (k - 1), hits.end(), better);
        hits.resize(k);
    }
    std::sort(hits.begin(), hits.end(), better);
    return hits;
}

void EmbeddingIndex::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(kMagic, 4);
    const std::uint32_t ver = kVersion;
    const std::uint64_t m = entries_.size();
    const std::uint32_t d = std::uint32_t(dim_);
    f.write(reinterpret_cast<const char*>(&ver), 4);
    f.write(reinterpret_cast<const char*>(&m), 8);
    f.write(reinterpret_cast<const char*>(&d), 4);
    f.write(reinterpret_cast<const char*>(&fingerprint_), 8);
    f.write(reinterpret_cast<const char*>(data_.data()),
            std::streamsize(data_.size() * sizeof(float)));
    for (const auto& e : entries_) {
        f.write(reinterpret_cast<const char*>(&e.id), 8);
        f.write(reinterpret_cast<const char*>(&e.n_joints), 4);
    }
    if (!f.good()) throw IoError("write failed on " + path);
}

EmbeddingIndex EmbeddingIndex::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    char magic[4];
    std::uint32_t ver = 0, d = 0;
    std::uint64_t m = 0, fp = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&ver), 4);
    f.read(reinterpret_cast<char*>(&m), 8);
    f.read(reinterpret_cast<char*>(&d), 4);
    f.read(reinterpret_cast<char*>(&fp), 8);
    if (!f.good() || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not an embedding index: " + path);
    if (ver != kVersion) throw IoError("unsupported index version in " + path);
    if (d < 1 || d > (1u << 16)) throw IoError("implausible index dim in " + path);
    EmbeddingIndex idx(int(d), fp);
    idx.data_.resize(m * d);
    f.read(reinterpret_cast<char*>(idx.data_.data()),
           std::streamsize(idx.data_.size() * sizeof(float)));
    idx.entries_.resize(m);
    for (auto& e : idx.entries_) {
        f.read(reinterpret_cast<char*>(&e.id), 8);
        f.read(reinterpret_cast<char*>(&e.n_joints), 4);
    }
    if (!f.good()) throw IoError("truncated index file: " + path);
    return idx;
}

std::vector<BruteHit> brute_force_search(const std::vector<Curve>& curves,
                                         const Curve& query, int k) {
    if (curves.empty() || k < 1) throw EmptyIndexError("brute_force_search: no curves or k < 1");
    OrderedDistancePlan plan(query.points);
    std::vector<BruteHit> hits(curves.size());
    for (std::size_t i = 0; i < curves.size(); ++i)
        hits[i] = {int(i), plan.eval(curves[i].points).value};
    const auto better = [](const BruteHit& a, const BruteHit& b) {
        if (a.od != b.od) return a.od < b.od;
        return a.index < b.index;
    };
    if (int(hits.size()) > k) {
        std::nth_element(hits.begin(), hits.begin() + (k - 1), hits.end(), better);
        hits.resize(k);
    }
    std::sort(hits.begin(), hits.end(), better);
    return hits;
}

} // namespace linkforge
