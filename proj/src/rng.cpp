#include "stimpute/rng.hpp"

#include <cmath>

namespace stimpute {

uint64_t Rng::mix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng Rng::stream(uint64_t seed, std::string_view purpose, uint64_t index) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the purpose tag
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return Rng(mix(seed) ^ mix(h) ^ mix(index * 0xd6e8feb86659fd93ULL + 1));
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(next_u64());  // full 64-bit range
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return lo + static_cast<int64_t>(v % span);
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

void Rng::fill_normal(Tensor& t, double stddev) {
    for (int64_t i = 0; i < t.size(); ++i) t[i] = normal() * stddev;
}

void Rng::fill_uniform(Tensor& t, double lo, double hi) {
    for (int64_t i = 0; i < t.size(); ++i) t[i] = uniform(lo, hi);
}

}  // namespace stimpute
