#pragma once

#include <cstdint>
#include <vector>

namespace dfr {

// Deterministic random source. All samplers are implemented on top of raw
// 64-bit draws so that streams are bit-reproducible across platforms and
// standard-library versions (std::*_distribution makes no such guarantee).
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53-bit resolution.
    double u01();

    // Uniform on [lo, hi).
    double uniform(double lo, double hi);

    // Uniform integer in {0, ..., n-1}; n > 0.
    std::uint64_t uniform_int(std::uint64_t n);

    bool bernoulli(double p);

    // Standard normal via Box-Muller.
    double normal();
    double normal(double mean, double sd);

    // Poisson by inversion (suitable for the small means used here).
    long poisson(double lambda);

    // Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
    double gamma(double shape);

    double beta(double a, double b);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derives an independent child seed, e.g. one per replication or worker.
    static std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dfr
