#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "echolab/stochastic.hpp"

namespace echolab {

enum class NetMode { Train, Eval };

double huber(double delta);
/// d huber / d delta.
double huber_grad(double delta);

/// Per-layer parameter gradients, same shapes as the network.
struct Gradients {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;

    double norm() const;
    void scale(double factor);
};

/// Rescales in place so the global L2 norm is at most max_norm. Returns the
/// norm before clipping.
double clip_global_norm(Gradients& g, double max_norm);

/// Fully connected Q-network with ReLU hidden layers. Dropout follows the
/// non-inverted convention: Train mode zeroes hidden units with probability
/// `dropout` and leaves survivors unscaled; Eval mode multiplies hidden units
/// by (1 - dropout).
class ValueNetwork {
public:
    static constexpr int kInput = 13;
    static constexpr int kHidden = 128;
    static constexpr int kOutput = 729;

    explicit ValueNetwork(std::vector<int> sizes = {kInput, kHidden, kHidden, kOutput}, double dropout = 0.1);

    /// He-normal weights (std sqrt(2 / fan_in)), zero biases.
    void init_kaiming(RandomStream& stream);

    const std::vector<int>& sizes() const { return sizes_; }
    double dropout() const { return dropout_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    std::size_t parameter_count() const;

    /// All Q-values; columns of X are inputs. Train mode needs a stream for
    /// the dropout masks.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X, NetMode mode = NetMode::Eval, RandomStream* stream = nullptr) const;
    Eigen::VectorXd q_values(std::span<const double> x) const;

    /// Q(x_i, a_i) only; skips the other output rows.
    Eigen::VectorXd selected(const Eigen::MatrixXd& X, std::span<const int> actions, NetMode mode = NetMode::Eval,
                             RandomStream* stream = nullptr) const;

    /// Loss mean_i w_i huber(y_i - Q(x_i, a_i)) and its gradient.
    struct LossResult {
        double loss = 0;
        Eigen::VectorXd q;      // Q(x_i, a_i)
        Eigen::VectorXd delta;  // y_i - Q(x_i, a_i)
        Gradients grad;
    };
    LossResult loss_and_gradient(const Eigen::MatrixXd& X, std::span<const int> actions, const Eigen::VectorXd& targets,
                                 const Eigen::VectorXd& weights, NetMode mode = NetMode::Train,
                                 RandomStream* stream = nullptr) const;

    void apply(const Gradients& g, double lr);

    /// Parameters flattened layer by layer (W column-major, then b).
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> params);

    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> b;

    bool operator==(const ValueNetwork& o) const;

private:
    struct Cache {
        std::vector<Eigen::MatrixXd> z;     // pre-activation of each hidden layer
        std::vector<Eigen::MatrixXd> a;     // input to each layer (a[0] = X)
        std::vector<Eigen::MatrixXd> mask;  // dropout masks (Train) per hidden layer
    };
    /// Runs the hidden stack; returns the input to the output layer.
    const Eigen::MatrixXd& hidden(const Eigen::MatrixXd& X, NetMode mode, RandomStream* stream, Cache& cache) const;

    std::vector<int> sizes_;
    double dropout_;
};

}  // namespace echolab
