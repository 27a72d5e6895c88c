#include "fedfta/rng.hpp"

#include <cmath>

namespace fedfta {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t hash_name(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream_id))) {}

SeededRng SeededRng::for_stream(std::uint64_t master_seed, std::string_view name) {
    return SeededRng(master_seed, hash_name(name));
}

SeededRng SeededRng::for_client(std::uint64_t master_seed, std::uint64_t client_id,
                                std::uint64_t round) {
    return SeededRng(master_seed,
                     splitmix64(hash_name("client") ^ splitmix64(client_id)) ^ splitmix64(round));
}

SeededRng SeededRng::for_round(std::uint64_t master_seed, std::string_view name,
                               std::uint64_t round) {
    return SeededRng(master_seed, splitmix64(hash_name(name)) ^ splitmix64(round));
}

std::uint64_t SeededRng::next_u64() { return engine_(); }

double SeededRng::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_unit_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t SeededRng::next_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = (UINT64_MAX / n) * n;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

double SeededRng::next_gaussian(double mean, double stddev) {
    if (has_spare_gaussian_) {
        has_spare_gaussian_ = false;
        return mean + stddev * spare_gaussian_;
    }
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_gaussian_ = r * std::sin(theta);
    has_spare_gaussian_ = true;
    return mean + stddev * r * std::cos(theta);
}

double SeededRng::next_gamma(double shape) {
    if (shape < 1.0) {
        const double g = next_gamma(shape + 1.0);
        return g * std::pow(next_unit_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = next_gaussian();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = next_unit_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}  // namespace fedfta
