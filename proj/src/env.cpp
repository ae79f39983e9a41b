#include "echolab/env.hpp"

#include <algorithm>

#include "echolab/policies.hpp"

namespace echolab {

int encode_action(const ActionVector& a) {
    int index = 0;
    for (int v : a) {
        if (v < 0 || v > 2) throw std::invalid_argument("encode_action: components must lie in {0, 1, 2}");
        index = index * 3 + v;
    }
    return index;
}

ActionVector decode_action(int index) {
    if (index < 0 || index >= kNumActions) throw std::invalid_argument("decode_action: index out of range");
    ActionVector a{};
    for (int k = kActionComponents - 1; k >= 0; --k) {
        a[static_cast<std::size_t>(k)] = index % 3;
        index /= 3;
    }
    return a;
}

PatientStatus component_status(int component) {
    switch (component % 3) {
        case 0: return PatientStatus::WaitingOnTime;
        case 1: return PatientStatus::WaitingLate;
        default: return PatientStatus::WaitingEarly;
    }
}

bool component_fetal(int component) { return component < 3; }

namespace {

// Observation slot holding the waiting count a component draws from.
int waiting_slot(int component) {
    static constexpr int slots[kActionComponents] = {Observation::WFt, Observation::WFl, Observation::WFe,
                                                     Observation::WNt, Observation::WNl, Observation::WNe};
    return slots[component];
}

}  // namespace

ActionMask action_mask(const Observation& o) {
    ActionMask mask;
    const int rb = o[Observation::Rb], rn = o[Observation::Rn];
    const int sb = o[Observation::Sb], sn = o[Observation::Sn];
    for (int j = 0; j < kNumActions; ++j) {
        const ActionVector a = decode_action(j);
        bool ok = true;
        for (int k = 0; k < kActionComponents && ok; ++k) ok = a[static_cast<std::size_t>(k)] <= o[waiting_slot(k)];
        if (!ok) continue;
        const int fetal = a[AFt] + a[AFl] + a[AFe];
        const int nonfetal = a[ANt] + a[ANl] + a[ANe];
        if (fetal > std::min(rb, sb)) continue;
        if (nonfetal > rn + rb - fetal || nonfetal > sn + sb - fetal) continue;
        mask.set(static_cast<std::size_t>(j));
    }
    return mask;
}

ActionMask action_mask(const SimState& state) { return action_mask(observe(state)); }

std::vector<Allocation> materialize(const SimState& state, int action_index) {
    const ActionVector a = decode_action(action_index);
    ResourcePool pool(state);
    std::vector<Allocation> out;
    for (int k = 0; k < kActionComponents; ++k) {
        const int want = a[static_cast<std::size_t>(k)];
        if (want == 0) continue;
        std::vector<int> ids = waiting_by_priority(state, component_status(k));
        std::erase_if(ids, [&](int id) { return state.patients[static_cast<std::size_t>(id)].fetal != component_fetal(k); });
        if (static_cast<int>(ids.size()) < want)
            throw MaskedAction("action " + std::to_string(action_index) + ": not enough waiting patients");
        for (int i = 0; i < want; ++i) {
            auto alloc = pool.take(state.patients[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])]);
            if (!alloc) throw MaskedAction("action " + std::to_string(action_index) + ": no compatible idle pair");
            out.push_back(*alloc);
        }
    }
    return out;
}

ActionVector component_counts(const SimState& state, std::span<const Allocation> allocations) {
    ActionVector counts{};
    for (const auto& al : allocations) {
        const auto& p = state.patients[static_cast<std::size_t>(al.patient)];
        int k = 0;
        switch (p.status) {
            case PatientStatus::WaitingOnTime: k = 0; break;
            case PatientStatus::WaitingLate: k = 1; break;
            case PatientStatus::WaitingEarly: k = 2; break;
            default: throw std::invalid_argument("component_counts: allocated patient is not waiting");
        }
        ++counts[static_cast<std::size_t>(k + (p.fetal ? 0 : 3))];
    }
    return counts;
}

std::optional<int> action_index_of(const ActionVector& counts) {
    for (int v : counts)
        if (v > 2) return std::nullopt;
    return encode_action(counts);
}

std::array<double, Observation::kSize> normalize(const Observation& o, const SimConfig& c) {
    auto ratio = [](int v, int cap) { return cap > 0 ? static_cast<double>(v) / cap : 0.0; };
    std::array<double, Observation::kSize> x{};
    const int nf = c.fetal_scheduled(), nn = c.nonfetal_scheduled();
    for (int k : {Observation::WFe, Observation::WFt, Observation::WFl}) x[static_cast<std::size_t>(k)] = ratio(o[k], nf);
    for (int k : {Observation::WNe, Observation::WNt, Observation::WNl}) x[static_cast<std::size_t>(k)] = ratio(o[k], nn);
    x[Observation::Rn] = ratio(o[Observation::Rn], c.rooms_nonfetal);
    x[Observation::Rb] = ratio(o[Observation::Rb], c.rooms_both);
    x[Observation::Sn] = ratio(o[Observation::Sn], c.sonos_nonfetal);
    x[Observation::Sb] = ratio(o[Observation::Sb], c.sonos_both);
    x[Observation::Ln] = ratio(o[Observation::Ln], c.sonos_nonfetal);
    x[Observation::Lb] = ratio(o[Observation::Lb], c.sonos_both);
    x[Observation::T] = static_cast<double>(o[Observation::T] - c.open_time) / (c.close_time - c.open_time);
    return x;
}

EchoEnv::EchoEnv(SimConfig config) {
    validate(config);
    config_ = std::make_shared<const SimConfig>(std::move(config));
}

Observation EchoEnv::reset(std::uint64_t seed, int day_index, std::optional<double> leave_rate) {
    return reset(build_day(*config_, seed, day_index, leave_rate));
}

Observation EchoEnv::reset(const DayPlan& plan) {
    plan_ = plan;
    state_ = start_day(config_, plan_);
    acc_ = DayAccumulator{};
    active_ = true;
    return observe(state_);
}

bool EchoEnv::done() const { return !active_ || state_.clock >= config_->close_time; }

StepResult EchoEnv::step(int action_index) {
    if (done()) throw std::logic_error("EchoEnv::step: episode is over");
    if (action_index < 0 || action_index >= kNumActions || !mask().test(static_cast<std::size_t>(action_index)))
        throw MaskedAction("action " + std::to_string(action_index) + " is masked in this state");
    return step_allocations(materialize(state_, action_index));
}

StepResult EchoEnv::step_allocations(std::vector<Allocation> allocations) {
    if (done()) throw std::logic_error("EchoEnv::step: episode is over");
    const MinuteOutcome out = advance_minute(state_, allocations);
    acc_.record(out);
    StepResult r;
    r.observation = observe(state_);
    r.terms = out.penalty;
    r.reward = -out.penalty.total();
    r.done = state_.clock >= config_->close_time;
    r.allocations = std::move(allocations);
    return r;
}

DailyMetrics EchoEnv::finish() {
    if (!active_ || state_.clock < config_->close_time) throw std::logic_error("EchoEnv::finish: episode not done");
    active_ = false;
    return acc_.finish(state_);
}

}  // namespace echolab
