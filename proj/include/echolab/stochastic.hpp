#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "echolab/model.hpp"

namespace echolab {

/// Generator identity, written into exports and checkpoints.
inline constexpr std::string_view kGeneratorId = "splitmix64-counter/v1";

/// Counter-based stream: draw k is a pure function of (key, k), so any draw
/// can be recomputed without replaying the stream. Substreams are keyed by
/// mixing the parent key with a label.
class RandomStream {
public:
    RandomStream() = default;
    explicit RandomStream(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() { return at(counter_++); }
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return to_unit(next_u64()); }
    /// Uniform integer in [0, n), n > 0 (Lemire-style rejection).
    std::uint64_t below(std::uint64_t n);

    std::uint64_t at(std::uint64_t index) const;
    double uniform_at(std::uint64_t index) const { return to_unit(at(index)); }

    RandomStream derive(std::uint64_t label) const;
    RandomStream derive(std::string_view label) const;
    RandomStream derive(std::string_view label, std::uint64_t index) const { return derive(label).derive(index); }

    static double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

    bool operator==(const RandomStream&) const = default;

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);
std::uint64_t fnv1a(std::string_view text);

// ---------------------------------------------------------------------------
// Inverse-CDF kernels (pure; exposed for testing against hand evaluations)

/// x = -mean * ln(1 - u (1 - e^{-upper/mean})), the truncated-exponential
/// inverse CDF on [0, upper).
double truncated_exponential_icdf(double mean, double upper, double u);
double exponential_icdf(double mean, double u);

/// Maps the branch draw and the magnitude draw to a signed whole-minute offset.
Minute arrival_offset_from_uniforms(const SimConfig& config, double branch_u, double value_u);

/// Accepts a raw Gamma draw if it lies in [lo, hi] and rounds it up.
std::optional<Minute> accept_duration(double raw, double lo, double hi);

enum class BreakChoice { BothTogether, Single, None };

BreakChoice break_choice_from_uniform(const SimConfig& config, int breaks_remaining, double u);

// ---------------------------------------------------------------------------
// Samplers

double sample_truncated_exponential(RandomStream& stream, double mean, double upper);
double sample_exponential(RandomStream& stream, double mean);
double sample_standard_normal(RandomStream& stream);
/// Marsaglia-Tsang; shape < 1 uses the boost u^{1/shape} trick.
double sample_gamma(RandomStream& stream, double shape, double scale);

Minute sample_arrival_offset(RandomStream& stream, const SimConfig& config);
Minute sample_exam_duration(RandomStream& stream, const SimConfig& config);
/// Consumes no draw when breaks_remaining == 0.
BreakChoice sample_break_choice(RandomStream& stream, const SimConfig& config, int breaks_remaining);
bool sample_bernoulli(RandomStream& stream, double p);

}  // namespace echolab
