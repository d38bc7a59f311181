#include "lcdrl/gamma_process.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace lcdrl {

double GammaProcessModel::shape_at(double tau) const {
    if (tau <= 0.0) return 0.0;
    return coeff * std::pow(tau, beta);
}

GammaProcessModel calibrate(double mean_at_T, double sigma_at_T, double T, double beta) {
    if (mean_at_T <= 0.0 || sigma_at_T <= 0.0 || T <= 0.0)
        throw std::invalid_argument("calibrate: mean, sigma and T must be positive");
    if (beta <= 0.0 || beta > 2.0) throw std::invalid_argument("calibrate: beta must be in (0,2]");
    GammaProcessModel m;
    m.beta = beta;
    double f_T = (mean_at_T / sigma_at_T) * (mean_at_T / sigma_at_T);
    m.lambda = f_T / mean_at_T;
    m.coeff = f_T / std::pow(T, beta);
    return m;
}

double sample_increment(const GammaProcessModel& model, double tau1, double tau2, Rng& rng) {
    if (tau1 >= tau2) throw std::invalid_argument("sample_increment: needs tau1 < tau2");
    double shape = model.shape_at(tau2) - model.shape_at(tau1);
    if (shape <= 0.0) return 0.0;
    return rng.gamma(shape, 1.0 / model.lambda);
}

int DiscretizedDeterioration::bin_of(double loss) const {
    if (loss >= failure_threshold) return num_states - 1;
    int k = static_cast<int>(loss / bin_width);
    return std::min(k, num_states - 1);
}

DiscretizedDeterioration estimate_transition_matrices(const GammaProcessModel& model,
                                                      double bin_width, int num_states,
                                                      double failure_threshold, int horizon,
                                                      long n_sims, std::uint64_t seed) {
    if (n_sims < 10000) throw std::invalid_argument("estimate_transition_matrices: n_sims >= 1e4 required");
    DiscretizedDeterioration disc;
    disc.bin_width = bin_width;
    disc.num_states = num_states;
    disc.failure_threshold = failure_threshold;
    disc.representative.resize(static_cast<std::size_t>(num_states));
    for (int k = 0; k + 1 < num_states; ++k) disc.representative[static_cast<std::size_t>(k)] = (k + 0.5) * bin_width;
    disc.representative[static_cast<std::size_t>(num_states - 1)] = failure_threshold + bin_width / 2.0;

    Rng rng(seed);
    std::vector<double> loss(static_cast<std::size_t>(n_sims), 0.0);
    std::vector<std::vector<std::uint64_t>> counts(
        static_cast<std::size_t>(horizon),
        std::vector<std::uint64_t>(static_cast<std::size_t>(num_states) * num_states, 0));

    for (int tau = 0; tau < horizon; ++tau) {
        double shape = model.shape_at(tau + 1) - model.shape_at(tau);
        auto& c = counts[static_cast<std::size_t>(tau)];
        for (long i = 0; i < n_sims; ++i) {
            double d0 = loss[static_cast<std::size_t>(i)];
            double d1 = d0 + rng.gamma(shape, 1.0 / model.lambda);
            int from = disc.bin_of(d0);
            int to = std::max(disc.bin_of(d1), from);
            ++c[static_cast<std::size_t>(from) * num_states + to];
            loss[static_cast<std::size_t>(i)] = d1;
        }
    }

    disc.matrices.assign(static_cast<std::size_t>(horizon), Matrix(num_states, num_states));
    for (int tau = 0; tau < horizon; ++tau) {
        Matrix& m = disc.matrices[static_cast<std::size_t>(tau)];
        const auto& c = counts[static_cast<std::size_t>(tau)];
        for (int i = 0; i < num_states; ++i) {
            std::uint64_t total = 0;
            for (int j = 0; j < num_states; ++j) total += c[static_cast<std::size_t>(i) * num_states + j];
            if (i == num_states - 1 || total == 0) {
                // Absorbing failure state; unvisited source bins stay put.
                m.at(i, i == num_states - 1 ? num_states - 1 : i) = 1.0;
                continue;
            }
            for (int j = 0; j < num_states; ++j)
                m.at(i, j) = static_cast<double>(c[static_cast<std::size_t>(i) * num_states + j]) /
                             static_cast<double>(total);
        }
    }
    return disc;
}

namespace {
constexpr char kMagic[4] = {'L', 'C', 'G', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return static_cast<bool>(in);
}
}  // namespace

void save_deterioration_cache(const std::string& path, const GammaProcessModel& model,
                              const DiscretizedDeterioration& disc, long n_sims, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write deterioration cache: " + path);
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, model.beta);
    write_pod(out, model.lambda);
    write_pod(out, model.coeff);
    write_pod(out, disc.bin_width);
    write_pod(out, disc.failure_threshold);
    write_pod(out, static_cast<std::int32_t>(disc.num_states));
    write_pod(out, static_cast<std::int32_t>(disc.matrices.size()));
    write_pod(out, static_cast<std::int64_t>(n_sims));
    write_pod(out, seed);
    for (const Matrix& m : disc.matrices)
        out.write(reinterpret_cast<const char*>(m.data.data()),
                  static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!out) throw std::runtime_error("failed writing deterioration cache: " + path);
}

bool load_deterioration_cache(const std::string& path, const GammaProcessModel& model,
                              double bin_width, int num_states, double failure_threshold,
                              int horizon, long n_sims, std::uint64_t seed,
                              DiscretizedDeterioration& disc) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) return false;
    std::uint32_t version;
    double beta, lambda, coeff, bw, fail;
    std::int32_t states, hor;
    std::int64_t sims;
    std::uint64_t s;
    if (!read_pod(in, version) || version != kVersion) return false;
    if (!read_pod(in, beta) || !read_pod(in, lambda) || !read_pod(in, coeff) || !read_pod(in, bw) ||
        !read_pod(in, fail) || !read_pod(in, states) || !read_pod(in, hor) || !read_pod(in, sims) ||
        !read_pod(in, s))
        return false;
    if (beta != model.beta || lambda != model.lambda || coeff != model.coeff || bw != bin_width ||
        fail != failure_threshold || states != num_states || hor != horizon || sims != n_sims || s != seed)
        return false;

    disc.bin_width = bin_width;
    disc.num_states = num_states;
    disc.failure_threshold = failure_threshold;
    disc.representative.resize(static_cast<std::size_t>(num_states));
    for (int k = 0; k + 1 < num_states; ++k) disc.representative[static_cast<std::size_t>(k)] = (k + 0.5) * bin_width;
    disc.representative[static_cast<std::size_t>(num_states - 1)] = failure_threshold + bin_width / 2.0;
    disc.matrices.assign(static_cast<std::size_t>(horizon), Matrix(num_states, num_states));
    for (Matrix& m : disc.matrices) {
        in.read(reinterpret_cast<char*>(m.data.data()),
                static_cast<std::streamsize>(m.data.size() * sizeof(double)));
        if (!in) return false;
    }
    return true;
}

}  // namespace lcdrl
