#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "echolab/engine.hpp"
#include "echolab/stochastic.hpp"

namespace echolab {

struct Transition {
    Observation obs;
    int action = 0;
    double reward = 0;
    Observation next_obs;
    bool done = false;
    bool operator==(const Transition&) const = default;
};

struct ReplayConfig {
    std::size_t capacity = 100000;
    double alpha = 0.6;
    double beta_start = 0.4;
    double beta_increment = 1e-4;
    double epsilon = 1e-6;
    double min_priority = 0.01;
    double max_priority = 10.0;
};

/// Handle to a sampled slot; the serial detects entries evicted since sampling.
struct ReplayIndex {
    std::size_t slot = 0;
    std::uint64_t serial = 0;
};

struct ReplaySample {
    std::vector<Transition> transitions;
    std::vector<ReplayIndex> indices;
    std::vector<double> weights;        // normalized by the batch maximum
    std::vector<double> probabilities;  // P(i) of each draw
};

/// Proportional prioritized replay over a ring buffer. Sampling probabilities
/// are (p_i + eps)^alpha / sum_k (p_k + eps)^alpha, kept in a sum tree.
class PrioritizedBuffer {
public:
    explicit PrioritizedBuffer(ReplayConfig config = {});

    /// New entries get the largest stored priority (1.0 when empty).
    void push(const Transition& t);
    /// Draws `batch` entries with replacement; advances beta afterwards.
    ReplaySample sample(std::size_t batch, RandomStream& stream);
    /// p_i <- clamp(|delta_i|, min, max); stale indices are skipped.
    void update(std::span<const ReplayIndex> indices, std::span<const double> td_errors);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return config_.capacity; }
    double beta() const;
    std::uint64_t sample_calls() const { return sample_calls_; }
    void set_sample_calls(std::uint64_t n) { sample_calls_ = n; }
    double priority(std::size_t slot) const { return priorities_[slot]; }
    double max_priority() const;
    /// P(slot) under the current priorities.
    double probability(std::size_t slot) const;
    const Transition& at(std::size_t slot) const { return data_[slot]; }
    const ReplayConfig& config() const { return config_; }

private:
    void set_leaf(std::size_t slot, double priority);

    ReplayConfig config_;
    std::vector<Transition> data_;
    std::vector<double> priorities_;
    std::vector<std::uint64_t> serials_;
    std::size_t leaves_ = 1;
    std::vector<double> sum_tree_;  // 2 * leaves_, node 1 is the root
    std::vector<double> max_tree_;
    std::size_t next_ = 0;
    std::size_t size_ = 0;
    std::uint64_t pushed_ = 0;
    std::uint64_t sample_calls_ = 0;
};

}  // namespace echolab
