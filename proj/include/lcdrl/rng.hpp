#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>

namespace lcdrl {

/// Deterministic random stream. Every simulation entry point takes an explicit
/// Rng so that episodes can run on independent streams derived from one master
/// seed. Categorical sampling consumes exactly one uniform draw, which keeps
/// parallel runs of equivalent models on identical streams.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        return std::generate_canonical<double, 53>(gen_);
    }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        int v = static_cast<int>(uniform() * n);
        return v < n ? v : n - 1;
    }

    double normal(double mean, double stddev) {
        std::normal_distribution<double> d(mean, stddev);
        return d(gen_);
    }

    double gamma(double shape, double scale) {
        std::gamma_distribution<double> d(shape, scale);
        return d(gen_);
    }

    /// Inverse-CDF draw from an (approximately) normalized probability vector.
    int categorical(std::span<const double> probs) {
        double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }

    std::mt19937_64& engine() { return gen_; }

    /// Mixes a master seed with a stream index (splitmix64 finalizer) so that
    /// derived streams are decorrelated.
    static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
        std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace lcdrl
