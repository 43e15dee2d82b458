#include "linkforge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "linkforge/errors.hpp"
#include "linkforge/rng.hpp"

namespace linkforge {

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& b, std::uint32_t v) { b.append(reinterpret_cast<char*>(&v), 4); }
void put_u64(std::string& b, std::uint64_t v) { b.append(reinterpret_cast<char*>(&v), 8); }

void put_bytes(std::string& b, const void* p, std::size_t n) {
    b.append(static_cast<const char*>(p), n);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    void need(std::size_t n) const {
        if (pos + n > buf.size())
            throw CheckpointMismatchError("checkpoint: truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    if (!f.good() && !f.eof()) throw IoError("read failed on " + path);
    return data;
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::string b;
    put_bytes(b, kMagic, 4);
    put_u32(b, kVersion);
    put_u64(b, ck.seed);
    const std::string meta = ck.meta.dump();
    put_u64(b, meta.size());
    put_bytes(b, meta.data(), meta.size());
    put_u64(b, ck.arrays.size());
    for (const auto& [name, m] : ck.arrays) {
        put_u64(b, name.size());
        put_bytes(b, name.data(), name.size());
        put_u64(b, std::uint64_t(m.rows()));
        put_u64(b, std::uint64_t(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                const double v = m(r, c);
                put_bytes(b, &v, 8);
            }
    }
    put_u64(b, fnv1a64(b.data(), b.size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(b.data(), std::streamsize(b.size()));
    if (!f.good()) throw IoError("write failed on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    const std::string b = read_file(path);
    if (b.size() < 4 + 4 + 8 + 8 + 8 + 8)
        throw CheckpointMismatchError("checkpoint: file too small");
    std::uint64_t stored;
    std::memcpy(&stored, b.data() + b.size() - 8, 8);
    if (stored != fnv1a64(b.data(), b.size() - 8))
        throw CheckpointMismatchError("checkpoint: hash mismatch (corrupt file)");

    Reader r{b};
    if (r.bytes(4) != std::string(kMagic, 4))
        throw CheckpointMismatchError("checkpoint: bad magic");
    if (r.u32() != kVersion)
        throw CheckpointMismatchError("checkpoint: unsupported version");
    Checkpoint ck;
    ck.seed = r.u64();
    const std::uint64_t meta_len = r.u64();
    const std::string meta = r.bytes(meta_len);
    try {
        ck.meta = nlohmann::ordered_json::parse(meta);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointMismatchError(std::string("checkpoint: bad metadata: ") + e.what());
    }
    const std::uint64_t count = r.u64();
    ck.arrays.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t name_len = r.u64();
        std::string name = r.bytes(name_len);
        const std::uint64_t rows = r.u64(), cols = r.u64();
        if (rows > (1u << 24) || cols > (1u << 24))
            throw CheckpointMismatchError("checkpoint: implausible array dims");
        Eigen::MatrixXd m(rows, cols);
        r.need(rows * cols * 8);
        for (std::uint64_t rr = 0; rr < rows; ++rr)
            for (std::uint64_t cc = 0; cc < cols; ++cc) {
                double v;
                std::memcpy(&v, b.data() + r.pos, 8);
                r.pos += 8;
                m(Eigen::Index(rr), Eigen::Index(cc)) = v;
            }
        ck.arrays.emplace_back(std::move(name), std::move(m));
    }
    return ck;
}

std::uint64_t checkpoint_fingerprint(const std::string& path) {
    const std::string b = read_file(path);
    return fnv1a64(b.data(), b.size());
}

void put_params(Checkpoint& ck, const std::string& prefix, const ParamSet& ps) {
    for (const auto& [name, m] : ps) ck.arrays.emplace_back(prefix + "." + name, m);
}

void take_params(const Checkpoint& ck, const std::string& prefix, ParamSet& ps) {
    for (auto& [name, m] : ps) {
        const Eigen::MatrixXd* src = ck.find(prefix + "." + name);
        if (!src)
            throw CheckpointMismatchError("checkpoint: missing array " + prefix + "." + name);
        if (src->rows() != m.rows() || src->cols() != m.cols())
            throw CheckpointMismatchError("checkpoint: shape mismatch on " + prefix +
                                          "." + name);
        m = *src;
    }
}

} // namespace linkforge
