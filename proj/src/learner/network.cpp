#include "echolab/learner/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace echolab {

double huber(double delta) {
    const double a = std::abs(delta);
    return a < 1.0 ? 0.5 * delta * delta : a - 0.5;
}

double huber_grad(double delta) {
    if (std::abs(delta) < 1.0) return delta;
    return delta > 0 ? 1.0 : -1.0;
}

double Gradients::norm() const {
    double s = 0;
    for (const auto& m : dW) s += m.squaredNorm();
    for (const auto& v : db) s += v.squaredNorm();
    return std::sqrt(s);
}

void Gradients::scale(double factor) {
    for (auto& m : dW) m *= factor;
    for (auto& v : db) v *= factor;
}

double clip_global_norm(Gradients& g, double max_norm) {
    const double n = g.norm();
    if (n > max_norm) g.scale(max_norm / n);
    return n;
}

ValueNetwork::ValueNetwork(std::vector<int> sizes, double dropout) : sizes_(std::move(sizes)), dropout_(dropout) {
    if (sizes_.size() < 2) throw std::invalid_argument("ValueNetwork: need at least input and output sizes");
    for (int s : sizes_)
        if (s <= 0) throw std::invalid_argument("ValueNetwork: layer sizes must be positive");
    if (!(dropout_ >= 0.0 && dropout_ < 1.0)) throw std::invalid_argument("ValueNetwork: dropout must lie in [0, 1)");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        W.push_back(Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]));
        b.push_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
    }
}

void ValueNetwork::init_kaiming(RandomStream& stream) {
    for (std::size_t l = 0; l < W.size(); ++l) {
        const double sd = std::sqrt(2.0 / static_cast<double>(W[l].cols()));
        for (Eigen::Index j = 0; j < W[l].cols(); ++j)
            for (Eigen::Index i = 0; i < W[l].rows(); ++i) W[l](i, j) = sd * sample_standard_normal(stream);
        b[l].setZero();
    }
}

std::size_t ValueNetwork::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < W.size(); ++l) n += static_cast<std::size_t>(W[l].size() + b[l].size());
    return n;
}

const Eigen::MatrixXd& ValueNetwork::hidden(const Eigen::MatrixXd& X, NetMode mode, RandomStream* stream,
                                            Cache& cache) const {
    if (X.rows() != input_size()) throw std::invalid_argument("ValueNetwork: input has the wrong size");
    if (mode == NetMode::Train && dropout_ > 0 && !stream)
        throw std::invalid_argument("ValueNetwork: Train mode needs a random stream for dropout");
    cache.a.assign(1, X);
    cache.z.clear();
    cache.mask.clear();
    for (std::size_t l = 0; l + 1 < W.size(); ++l) {
        Eigen::MatrixXd z = (W[l] * cache.a.back()).colwise() + b[l];
        Eigen::MatrixXd h = z.cwiseMax(0.0);
        if (dropout_ > 0) {
            if (mode == NetMode::Train) {
                Eigen::MatrixXd m(h.rows(), h.cols());
                for (Eigen::Index j = 0; j < m.cols(); ++j)
                    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = stream->uniform() < dropout_ ? 0.0 : 1.0;
                h = h.cwiseProduct(m);
                cache.mask.push_back(std::move(m));
            } else {
                h *= 1.0 - dropout_;
            }
        }
        cache.z.push_back(std::move(z));
        cache.a.push_back(std::move(h));
    }
    return cache.a.back();
}

Eigen::MatrixXd ValueNetwork::forward(const Eigen::MatrixXd& X, NetMode mode, RandomStream* stream) const {
    Cache cache;
    const Eigen::MatrixXd& h = hidden(X, mode, stream, cache);
    return (W.back() * h).colwise() + b.back();
}

Eigen::VectorXd ValueNetwork::q_values(std::span<const double> x) const {
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    return forward(Eigen::MatrixXd(v), NetMode::Eval);
}

Eigen::VectorXd ValueNetwork::selected(const Eigen::MatrixXd& X, std::span<const int> actions, NetMode mode,
                                       RandomStream* stream) const {
    if (static_cast<Eigen::Index>(actions.size()) != X.cols())
        throw std::invalid_argument("ValueNetwork::selected: one action per input column");
    Cache cache;
    const Eigen::MatrixXd& h = hidden(X, mode, stream, cache);
    Eigen::VectorXd q(X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        const int a = actions[static_cast<std::size_t>(i)];
        q(i) = W.back().row(a).dot(h.col(i)) + b.back()(a);
    }
    return q;
}

ValueNetwork::LossResult ValueNetwork::loss_and_gradient(const Eigen::MatrixXd& X, std::span<const int> actions,
                                                         const Eigen::VectorXd& targets,
                                                         const Eigen::VectorXd& weights, NetMode mode,
                                                         RandomStream* stream) const {
    const Eigen::Index n = X.cols();
    if (static_cast<Eigen::Index>(actions.size()) != n || targets.size() != n || weights.size() != n)
        throw std::invalid_argument("loss_and_gradient: batch sizes disagree");
    Cache cache;
    const Eigen::MatrixXd& h = hidden(X, mode, stream, cache);
    const std::size_t L = W.size();

    LossResult r;
    r.q.resize(n);
    r.delta.resize(n);
    r.grad.dW.resize(L);
    r.grad.db.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        r.grad.dW[l] = Eigen::MatrixXd::Zero(W[l].rows(), W[l].cols());
        r.grad.db[l] = Eigen::VectorXd::Zero(b[l].size());
    }

    // Output layer: only the taken action's row receives gradient.
    Eigen::MatrixXd dh(h.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int a = actions[static_cast<std::size_t>(i)];
        r.q(i) = W.back().row(a).dot(h.col(i)) + b.back()(a);
        r.delta(i) = targets(i) - r.q(i);
        r.loss += weights(i) * huber(r.delta(i));
        const double dq = -weights(i) * huber_grad(r.delta(i)) / static_cast<double>(n);
        r.grad.dW[L - 1].row(a) += dq * h.col(i).transpose();
        r.grad.db[L - 1](a) += dq;
        dh.col(i) = dq * W.back().row(a).transpose();
    }
    r.loss /= static_cast<double>(n);

    for (std::size_t l = L - 1; l-- > 0;) {
        // dh is the gradient w.r.t. the post-dropout activation of hidden layer l.
        Eigen::MatrixXd dz = dh;
        if (dropout_ > 0) {
            if (mode == NetMode::Train) dz = dz.cwiseProduct(cache.mask[l]);
            else dz *= 1.0 - dropout_;
        }
        dz = dz.cwiseProduct((cache.z[l].array() > 0.0).cast<double>().matrix());
        r.grad.dW[l] = dz * cache.a[l].transpose();
        r.grad.db[l] = dz.rowwise().sum();
        if (l > 0) dh = W[l].transpose() * dz;
    }
    return r;
}

void ValueNetwork::apply(const Gradients& g, double lr) {
    for (std::size_t l = 0; l < W.size(); ++l) {
        W[l] -= lr * g.dW[l];
        b[l] -= lr * g.db[l];
    }
}

std::vector<double> ValueNetwork::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (std::size_t l = 0; l < W.size(); ++l) {
        out.insert(out.end(), W[l].data(), W[l].data() + W[l].size());
        out.insert(out.end(), b[l].data(), b[l].data() + b[l].size());
    }
    return out;
}

void ValueNetwork::unflatten(std::span<const double> params) {
    if (params.size() != parameter_count()) throw std::invalid_argument("unflatten: parameter count mismatch");
    std::size_t k = 0;
    for (std::size_t l = 0; l < W.size(); ++l) {
        std::copy_n(params.data() + k, W[l].size(), W[l].data());
        k += static_cast<std::size_t>(W[l].size());
        std::copy_n(params.data() + k, b[l].size(), b[l].data());
        k += static_cast<std::size_t>(b[l].size());
    }
}

bool ValueNetwork::operator==(const ValueNetwork& o) const {
    if (sizes_ != o.sizes_ || dropout_ != o.dropout_) return false;
    for (std::size_t l = 0; l < W.size(); ++l)
        if (W[l] != o.W[l] || b[l] != o.b[l]) return false;
    return true;
}

}  // namespace echolab
