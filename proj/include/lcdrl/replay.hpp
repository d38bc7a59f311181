#pragma once

#include <cstdint>
#include <vector>

#include "lcdrl/rng.hpp"

namespace lcdrl {

/// Replay tuple of the factored actor-critic: encoded inputs at t and t+1,
/// the per-unit action vector, the per-unit behavior probability of the chosen
/// action, and the (sign-adjusted) reward.
struct DcmacRecord {
    std::vector<float> input;
    std::vector<float> next_input;
    std::vector<std::uint8_t> action;
    std::vector<double> mu;
    double reward = 0.0;
    bool terminal = false;
};

struct DdqnRecord {
    std::vector<float> input;
    std::vector<float> next_input;
    int action = 0;
    double reward = 0.0;
    bool terminal = false;
};

/// Fixed-capacity ring with uniform sampling.
template <typename Record>
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void add(Record record) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(record));
        } else {
            storage_[head_] = std::move(record);
        }
        head_ = (head_ + 1) % capacity_;
    }

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Record& at(std::size_t i) const { return storage_[i]; }

    const Record& sample(Rng& rng) const { return storage_[sample_index(rng)]; }
    std::size_t sample_index(Rng& rng) const {
        return static_cast<std::size_t>(rng.uniform_int(static_cast<int>(storage_.size())));
    }

  private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Record> storage_;
};

inline std::vector<double> to_double(const std::vector<float>& v) {
    return std::vector<double>(v.begin(), v.end());
}

inline std::vector<float> to_float(const std::vector<double>& v) {
    return std::vector<float>(v.begin(), v.end());
}

}  // namespace lcdrl
