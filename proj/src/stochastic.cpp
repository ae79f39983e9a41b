#include "echolab/stochastic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace echolab {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t RandomStream::at(std::uint64_t index) const {
    return mix64(key_ + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

std::uint64_t RandomStream::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RandomStream::below: n must be positive");
    const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x < limit) return x % n;
    }
}

RandomStream RandomStream::derive(std::uint64_t label) const {
    return RandomStream(mix64(key_ ^ mix64(label + 0x632be59bd9b4e019ULL)));
}

RandomStream RandomStream::derive(std::string_view label) const { return derive(fnv1a(label)); }

double exponential_icdf(double mean, double u) { return -mean * std::log1p(-u); }

double truncated_exponential_icdf(double mean, double upper, double u) {
    const double mass = -std::expm1(-upper / mean);  // 1 - e^{-upper/mean}
    const double x = -mean * std::log1p(-u * mass);
    // Rounding can land exactly on the boundary for u within an ulp of 1.
    return x < upper ? x : std::nextafter(upper, 0.0);
}

double sample_truncated_exponential(RandomStream& stream, double mean, double upper) {
    if (!(mean > 0) || !(upper > 0))
        throw std::invalid_argument("sample_truncated_exponential: mean and upper must be positive");
    return truncated_exponential_icdf(mean, upper, stream.uniform());
}

double sample_exponential(RandomStream& stream, double mean) {
    if (!(mean > 0)) throw std::invalid_argument("sample_exponential: mean must be positive");
    return exponential_icdf(mean, stream.uniform());
}

Minute arrival_offset_from_uniforms(const SimConfig& config, double branch_u, double value_u) {
    if (branch_u < config.p_late) {
        return static_cast<Minute>(std::ceil(exponential_icdf(config.mean_late_min, value_u)));
    }
    const double lead = truncated_exponential_icdf(config.mean_early_min, config.max_early_min, value_u);
    return -static_cast<Minute>(std::ceil(lead));
}

Minute sample_arrival_offset(RandomStream& stream, const SimConfig& config) {
    const double branch = stream.uniform();
    const double value = stream.uniform();
    return arrival_offset_from_uniforms(config, branch, value);
}

double sample_standard_normal(RandomStream& stream) {
    // Box-Muller, cosine branch only. 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - stream.uniform();
    const double u2 = stream.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double sample_gamma(RandomStream& stream, double shape, double scale) {
    if (!(shape > 0) || !(scale > 0)) throw std::invalid_argument("sample_gamma: shape and scale must be positive");
    if (shape < 1.0) {
        const double u = 1.0 - stream.uniform();
        return sample_gamma(stream, shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = sample_standard_normal(stream);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = stream.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
}

std::optional<Minute> accept_duration(double raw, double lo, double hi) {
    if (raw < lo || raw > hi) return std::nullopt;
    return static_cast<Minute>(std::ceil(raw));
}

Minute sample_exam_duration(RandomStream& stream, const SimConfig& config) {
    const double scale = config.dur_mean_min / config.dur_shape;
    for (;;) {
        if (auto d = accept_duration(sample_gamma(stream, config.dur_shape, scale), config.dur_lo_min, config.dur_hi_min))
            return *d;
    }
}

BreakChoice break_choice_from_uniform(const SimConfig& config, int breaks_remaining, double u) {
    if (breaks_remaining >= 2) {
        if (u < config.p_both_breaks) return BreakChoice::BothTogether;
        if (u < config.p_both_breaks + config.p_single_break_of_two) return BreakChoice::Single;
        return BreakChoice::None;
    }
    if (breaks_remaining == 1) return u < config.p_single_break_of_one ? BreakChoice::Single : BreakChoice::None;
    return BreakChoice::None;
}

BreakChoice sample_break_choice(RandomStream& stream, const SimConfig& config, int breaks_remaining) {
    if (breaks_remaining <= 0) return BreakChoice::None;
    return break_choice_from_uniform(config, breaks_remaining, stream.uniform());
}

bool sample_bernoulli(RandomStream& stream, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_bernoulli: p must lie in [0, 1]");
    return stream.uniform() < p;
}

}  // namespace echolab
