#include "fft.hpp"

#include <numbers>
#include <unordered_map>

namespace linkforge::detail {

namespace {

struct Plan {
    std::vector<std::size_t> rev;
    // Twiddles for each butterfly span, concatenated: span 2, 4, ..., n.
    std::vector<std::complex<double>> tw;
};

const Plan& plan_for(std::size_t n) {
    thread_local std::unordered_map<std::size_t, Plan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    Plan p;
    p.rev.resize(n);
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        p.rev[i] = j;
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / double(len);
        for (std::size_t k = 0; k < len / 2; ++k)
            p.tw.push_back(std::polar(1.0, ang * double(k)));
    }
    return cache.emplace(n, std::move(p)).first->second;
}

} // namespace

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n < 2) return;
    const Plan& p = plan_for(n);

    for (std::size_t i = 0; i < n; ++i)
        if (i < p.rev[i]) std::swap(a[i], a[p.rev[i]]);

    // Butterflies in explicit real arithmetic: identical values to the
    // complex operator form, but free of its non-finite fixup branches.
    double* d = reinterpret_cast<double*>(a.data());
    const double* tw = reinterpret_cast<const double*>(p.tw.data());
    const double wsign = inverse ? -1.0 : 1.0;
    std::size_t tw_off = 0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t i = 0; i < n; i += len) {
            double* lo = d + 2 * i;
            double* hi = d + 2 * (i + half);
            for (std::size_t k = 0; k < half; ++k) {
                const double wr = tw[2 * (tw_off + k)];
                const double wi = wsign * tw[2 * (tw_off + k) + 1];
                const double br = hi[2 * k], bi = hi[2 * k + 1];
                const double vr = br * wr - bi * wi;
                const double vi = br * wi + bi * wr;
                const double ur = lo[2 * k], ui = lo[2 * k + 1];
                lo[2 * k] = ur + vr;
                lo[2 * k + 1] = ui + vi;
                hi[2 * k] = ur - vr;
                hi[2 * k + 1] = ui - vi;
            }
        }
        tw_off += half;
    }
}

} // namespace linkforge::detail
