#pragma once

// Radix-2 complex FFT, iterative Cooley-Tukey. Grids are power-of-two by
// construction, so no other radix is needed. Forward convention:
//   X[j] = sum_i x[i] exp(-2 pi i * ij / n), inverse scaled by 1/n.

#include <complex>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "wplab/errors.hpp"
#include "wplab/util.hpp"

namespace wplab {

using cdouble = std::complex<double>;

namespace detail {

// Forward-direction twiddles exp(-i pi j / half) for each stage size, cached
// per transform length.
inline const std::vector<cdouble>& twiddle_table(int n) {
    static std::mutex mtx;
    static std::unordered_map<int, std::vector<cdouble>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cdouble> tw(static_cast<std::size_t>(n / 2));
    for (int j = 0; j < n / 2; ++j) {
        const double ang = -2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
        tw[static_cast<std::size_t>(j)] = cdouble(std::cos(ang), std::sin(ang));
    }
    return cache.emplace(n, std::move(tw)).first->second;
}

} // namespace detail

inline void fft_inplace(std::vector<cdouble>& a, bool inverse) {
    const int n = static_cast<int>(a.size());
    require(n > 0 && (n & (n - 1)) == 0, Errc::invalid_argument,
            "fft length must be a power of two");

    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
    }

    const auto& tw = detail::twiddle_table(n);
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len / 2;
        const int stride = n / len;
        for (int i = 0; i < n; i += len) {
            for (int j = 0; j < half; ++j) {
                cdouble w = tw[static_cast<std::size_t>(j * stride)];
                if (inverse) w = std::conj(w);
                const std::size_t lo = static_cast<std::size_t>(i + j);
                const std::size_t hi = lo + static_cast<std::size_t>(half);
                const cdouble u = a[lo];
                const cdouble v = a[hi] * w;
                a[lo] = u + v;
                a[hi] = u - v;
            }
        }
    }

    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& z : a) z *= scale;
    }
}

inline std::vector<cdouble> fft(std::vector<cdouble> a) {
    fft_inplace(a, false);
    return a;
}

inline std::vector<cdouble> ifft(std::vector<cdouble> a) {
    fft_inplace(a, true);
    return a;
}

} // namespace wplab
