#include "echolab/learner/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace echolab {

PrioritizedBuffer::PrioritizedBuffer(ReplayConfig config) : config_(config) {
    if (config_.capacity == 0) throw std::invalid_argument("PrioritizedBuffer: capacity must be positive");
    while (leaves_ < config_.capacity) leaves_ *= 2;
    data_.resize(config_.capacity);
    priorities_.assign(config_.capacity, 0.0);
    serials_.assign(config_.capacity, 0);
    sum_tree_.assign(2 * leaves_, 0.0);
    max_tree_.assign(2 * leaves_, 0.0);
}

double PrioritizedBuffer::beta() const {
    return std::min(1.0, config_.beta_start + static_cast<double>(sample_calls_) * config_.beta_increment);
}

double PrioritizedBuffer::max_priority() const { return size_ == 0 ? 1.0 : max_tree_[1]; }

void PrioritizedBuffer::set_leaf(std::size_t slot, double priority) {
    priorities_[slot] = priority;
    std::size_t node = leaves_ + slot;
    sum_tree_[node] = std::pow(priority + config_.epsilon, config_.alpha);
    max_tree_[node] = priority;
    for (node /= 2; node >= 1; node /= 2) {
        sum_tree_[node] = sum_tree_[2 * node] + sum_tree_[2 * node + 1];
        max_tree_[node] = std::max(max_tree_[2 * node], max_tree_[2 * node + 1]);
    }
}

void PrioritizedBuffer::push(const Transition& t) {
    const double p = max_priority();
    data_[next_] = t;
    serials_[next_] = ++pushed_;
    set_leaf(next_, p);
    next_ = (next_ + 1) % config_.capacity;
    size_ = std::min(size_ + 1, config_.capacity);
}

double PrioritizedBuffer::probability(std::size_t slot) const { return sum_tree_[leaves_ + slot] / sum_tree_[1]; }

ReplaySample PrioritizedBuffer::sample(std::size_t batch, RandomStream& stream) {
    if (size_ < batch || batch == 0) throw std::invalid_argument("PrioritizedBuffer::sample: buffer holds fewer entries than the batch");
    const double total = sum_tree_[1];
    const double b = beta();
    ReplaySample out;
    out.transitions.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k) {
        double u = stream.uniform() * total;
        std::size_t node = 1;
        while (node < leaves_) {
            const std::size_t left = 2 * node;
            if (u < sum_tree_[left] || sum_tree_[left + 1] <= 0.0) {
                node = left;
            } else {
                u -= sum_tree_[left];
                node = left + 1;
            }
        }
        std::size_t slot = node - leaves_;
        // Rounding can walk onto an empty leaf at the right edge.
        if (slot >= size_) slot = size_ - 1;
        const double p = probability(slot);
        out.transitions.push_back(data_[slot]);
        out.indices.push_back({slot, serials_[slot]});
        out.probabilities.push_back(p);
        out.weights.push_back(std::pow(static_cast<double>(size_) * p, -b));
    }
    const double wmax = *std::max_element(out.weights.begin(), out.weights.end());
    for (double& w : out.weights) w /= wmax;
    ++sample_calls_;
    return out;
}

void PrioritizedBuffer::update(std::span<const ReplayIndex> indices, std::span<const double> td_errors) {
    if (indices.size() != td_errors.size()) throw std::invalid_argument("PrioritizedBuffer::update: size mismatch");
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto& ix = indices[k];
        if (ix.slot >= size_ || serials_[ix.slot] != ix.serial) continue;
        set_leaf(ix.slot, std::clamp(std::abs(td_errors[k]), config_.min_priority, config_.max_priority));
    }
}

}  // namespace echolab
