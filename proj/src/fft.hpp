#pragma once

// Internal radix-2 FFT used by the ordered-distance fast path. Deterministic,
// dependency-free; sizes are powers of two chosen by the caller.

#include <complex>
#include <vector>

namespace linkforge::detail {

// In-place forward (inverse=false) or unnormalized inverse DFT. a.size() must
// be a power of two. The inverse leaves the 1/n scaling to the caller.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

} // namespace linkforge::detail
