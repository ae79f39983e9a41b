#include "echolab/learner/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace echolab {

int masked_argmax(const Eigen::VectorXd& q, const ActionMask& mask) {
    int best = -1;
    for (int j = 0; j < static_cast<int>(q.size()) && j < kNumActions; ++j) {
        if (!mask.test(static_cast<std::size_t>(j))) continue;
        if (best < 0 || q(j) > q(best)) best = j;
    }
    if (best < 0) throw std::invalid_argument("masked_argmax: every action is masked");
    return best;
}

int select_action(std::span<const double> x, const ActionMask& mask, double epsilon, RandomStream& stream,
                  const ValueNetwork& online) {
    if (mask.none()) throw std::invalid_argument("select_action: every action is masked");
    if (stream.uniform() < epsilon) {
        const std::uint64_t pick = stream.below(mask.count());
        std::uint64_t seen = 0;
        for (int j = 0; j < kNumActions; ++j) {
            if (!mask.test(static_cast<std::size_t>(j))) continue;
            if (seen++ == pick) return j;
        }
    }
    return masked_argmax(online.q_values(x), mask);
}

double td_target(double reward, bool done, double gamma, const Eigen::VectorXd& q_online_next,
                 const Eigen::VectorXd& q_target_next, const ActionMask& mask_next, TargetStyle style) {
    if (done) return reward;
    if (style == TargetStyle::MaxTarget) return reward + gamma * q_target_next(masked_argmax(q_target_next, mask_next));
    return reward + gamma * q_target_next(masked_argmax(q_online_next, mask_next));
}

namespace {

Eigen::MatrixXd stack_inputs(const std::vector<Transition>& batch, bool next, const SimConfig& sim) {
    Eigen::MatrixXd X(Observation::kSize, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto x = normalize(next ? batch[i].next_obs : batch[i].obs, sim);
        for (int k = 0; k < Observation::kSize; ++k) X(k, static_cast<Eigen::Index>(i)) = x[static_cast<std::size_t>(k)];
    }
    return X;
}

}  // namespace

OptimizeResult optimize_step(ValueNetwork& online, const ValueNetwork& target, PrioritizedBuffer& buffer,
                             const TrainerConfig& config, const SimConfig& sim, double lr, RandomStream& replay_stream,
                             RandomStream& dropout_stream) {
    const auto batch = static_cast<std::size_t>(config.batch);
    ReplaySample s = buffer.sample(batch, replay_stream);
    const Eigen::MatrixXd X = stack_inputs(s.transitions, false, sim);
    const Eigen::MatrixXd Xn = stack_inputs(s.transitions, true, sim);
    const Eigen::MatrixXd q_online_next = online.forward(Xn, NetMode::Eval);
    const Eigen::MatrixXd q_target_next = target.forward(Xn, NetMode::Eval);

    Eigen::VectorXd y(static_cast<Eigen::Index>(batch));
    std::vector<int> actions(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const auto& t = s.transitions[i];
        const auto col = static_cast<Eigen::Index>(i);
        actions[i] = t.action;
        y(col) = td_target(t.reward, t.done, config.gamma, q_online_next.col(col), q_target_next.col(col),
                           action_mask(t.next_obs), config.target_style);
    }
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(s.weights.data(), static_cast<Eigen::Index>(batch));

    auto r = online.loss_and_gradient(X, actions, y, w, NetMode::Train, &dropout_stream);
    OptimizeResult out;
    out.loss = r.loss;
    out.grad_norm = clip_global_norm(r.grad, config.grad_clip_norm);
    online.apply(r.grad, lr);
    out.td_errors.assign(r.delta.data(), r.delta.data() + r.delta.size());
    buffer.update(s.indices, out.td_errors);
    return out;
}

Trainer::Trainer(SimConfig sim, TrainerConfig config, std::uint64_t seed)
    : config_(config),
      seed_(seed),
      env_(std::move(sim)),
      online_({ValueNetwork::kInput, config.hidden, config.hidden, ValueNetwork::kOutput}, config.dropout),
      target_(online_),
      epsilon_(config.eps_init, config.eps_decay, config.eps_min),
      plateau_(config.lr_init, config.lr_factor, config.plateau_patience, config.lr_min) {
    const RandomStream root = RandomStream(seed).derive("trainer");
    RandomStream init = root.derive("init");
    online_.init_kaiming(init);
    target_ = online_;
    explore_ = root.derive("explore");
    replay_ = root.derive("replay");
    dropout_ = root.derive("dropout");
}

DayLog Trainer::run_day() {
    const int day = day_;
    if (day == config_.eps_reset_day && day > 0) epsilon_.reset();
    const double leave = curriculum_leave_rate(config_, day);
    // Training days come from their own seed family so evaluation with the
    // same master seed sees unseen days.
    const std::uint64_t train_seed = RandomStream(seed_).derive("train-days").key();
    env_.reset(build_day(env_.config(), train_seed, day, leave));

    DayLog log;
    log.day = day;
    log.leave_rate = leave;
    double loss_sum = 0;
    Observation obs = env_.observation();
    while (!env_.done()) {
        const ActionMask mask = action_mask(obs);
        const auto x = normalize(obs, env_.config());
        const int a = select_action(x, mask, epsilon_.value(), explore_, online_);
        if (!mask.test(static_cast<std::size_t>(a))) ++log.masked_violations;
        const StepResult r = env_.step(a);
        buffer_.push({obs, a, r.reward, r.observation, r.done});
        ++env_steps_;
        if (env_steps_ % static_cast<std::uint64_t>(config_.optimize_every) == 0) {
            epsilon_.decay_event();
            if (day >= config_.warmup_days && buffer_.size() >= static_cast<std::size_t>(config_.batch)) {
                const OptimizeResult o = optimize_step(online_, target_, buffer_, config_, env_.config(), plateau_.lr(),
                                                       replay_, dropout_);
                plateau_.step(o.loss);
                ++optimizer_steps_;
                ++log.optimizer_steps;
                loss_sum += o.loss;
                if (!std::isfinite(o.loss)) log.loss_finite = false;
            }
        }
        obs = r.observation;
    }
    const DailyMetrics m = env_.finish();
    target_ = online_;

    log.penalty = m.total_penalty;
    log.epsilon = epsilon_.value();
    log.lr = plateau_.lr();
    log.buffer_size = buffer_.size();
    log.mean_loss = log.optimizer_steps > 0 ? loss_sum / log.optimizer_steps : std::nan("");
    ++day_;
    return log;
}

std::vector<DayLog> Trainer::train(const Observer& observer) {
    std::vector<DayLog> out;
    while (day_ < config_.total_days) {
        out.push_back(run_day());
        if (observer) observer(out.back(), *this);
    }
    return out;
}

TrainerState Trainer::state() const {
    TrainerState s;
    s.days_completed = day_;
    s.env_steps = env_steps_;
    s.optimizer_steps = optimizer_steps_;
    s.eps_events = epsilon_.events();
    s.sample_calls = buffer_.sample_calls();
    s.lr = plateau_.lr();
    s.best_loss = plateau_.best();
    s.bad_steps = plateau_.bad_steps();
    s.explore = explore_;
    s.replay = replay_;
    s.dropout = dropout_;
    return s;
}

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window) {
    std::vector<double> out(values.size());
    double sum = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum += values[i];
        if (i >= window) sum -= values[i - window];
        out[i] = sum / static_cast<double>(std::min(i + 1, window));
    }
    return out;
}

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

void write_training_log(std::ostream& out, const std::vector<DayLog>& log) {
    std::vector<double> penalties;
    for (const auto& d : log) penalties.push_back(d.penalty);
    const auto ma = moving_average(penalties);
    out << "day,penalty,ma50,epsilon,lr,leave_rate,buffer_size,mean_loss\n";
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& d = log[i];
        out << d.day << ',' << num(d.penalty) << ',' << num(ma[i]) << ',' << num(d.epsilon) << ',' << num(d.lr) << ','
            << num(d.leave_rate) << ',' << d.buffer_size << ',' << num(d.mean_loss) << '\n';
    }
}

GreedyAgent::GreedyAgent(ValueNetwork net, SimConfig config) : net_(std::move(net)), config_(std::move(config)) {}

int GreedyAgent::act(const SimState& state) const {
    const Observation obs = observe(state);
    const auto x = normalize(obs, config_);
    return masked_argmax(net_.q_values(x), action_mask(obs));
}

}  // namespace echolab
