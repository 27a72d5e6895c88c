#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fedfta {

// Deterministic random stream. One master seed fans out to named streams so
// that, e.g., changing the client-selection stream never perturbs data
// generation. All distributions are hand-rolled on top of the raw mt19937_64
// output, whose sequence is fixed by the standard; the std:: distribution
// classes are implementation-defined and would break cross-run stability.
class SeededRng {
public:
    SeededRng(std::uint64_t seed, std::uint64_t stream_id);

    // Stream derived from a human-readable name ("data", "partition", ...).
    static SeededRng for_stream(std::uint64_t master_seed, std::string_view name);

    // Per-client, per-round stream: participation patterns in one round must
    // not perturb any other client's randomness.
    static SeededRng for_client(std::uint64_t master_seed, std::uint64_t client_id,
                                std::uint64_t round);

    // Stream for a named purpose at a given round (participant selection).
    static SeededRng for_round(std::uint64_t master_seed, std::string_view name,
                               std::uint64_t round);

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double next_unit();

    // Uniform in (0, 1]; safe to pass to log().
    double next_unit_open();

    // Unbiased uniform integer in [0, n), n >= 1.
    std::uint64_t next_below(std::uint64_t n);

    // Box-Muller Gaussian.
    double next_gaussian(double mean = 0.0, double stddev = 1.0);

    // Marsaglia-Tsang Gamma(shape, 1), shape > 0.
    double next_gamma(double shape);

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_gaussian_ = false;
    double spare_gaussian_ = 0.0;
};

// FNV-1a, used to turn stream names into stream ids.
std::uint64_t hash_name(std::string_view name);

}  // namespace fedfta
