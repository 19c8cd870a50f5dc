#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "laserml/pipeline.hpp"

namespace laserml {

/// One LSTM layer. Gate blocks are packed row-wise in the fixed order
/// forget, input, candidate, output: rows [0,H) belong to the forget gate,
/// [H,2H) to the input gate, and so on.
struct LstmLayerParams {
    Eigen::MatrixXd input_weights;     // (4H x input_dim)
    Eigen::MatrixXd recurrent_weights; // (4H x H)
    Eigen::VectorXd biases;            // (4H)

    int hidden_dim() const { return static_cast<int>(recurrent_weights.cols()); }
    int input_dim() const { return static_cast<int>(input_weights.cols()); }
};

struct NetworkConfig {
    int num_lstm_layers = 2;
    int hidden_dim = 100;
    int input_dim = kNumChannels;
    int num_classes = kNumModes;
};

void validate(const NetworkConfig& c);

struct LstmNetwork {
    NetworkConfig config;
    std::vector<LstmLayerParams> layers;
    Eigen::MatrixXd head_weights; // (num_classes x hidden_dim)
    Eigen::VectorXd head_bias;    // (num_classes)
};

/// Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero except the
/// forget-gate block, which starts at 1.
LstmNetwork init_network(const NetworkConfig& config, std::uint64_t seed);

struct CellState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;
};

/// Gate activations cached by the forward pass for backpropagation.
struct CellCache {
    Eigen::VectorXd forget_gate;
    Eigen::VectorXd input_gate;
    Eigen::VectorXd candidate;
    Eigen::VectorXd output_gate;
    Eigen::VectorXd cell;      // C_t
    Eigen::VectorXd tanh_cell; // tanh(C_t)
};

/// One step of one layer:
///   f = sigmoid(U_f x + W_f h_prev + b_f)   (i, o analogous)
///   g = tanh(U_g x + W_g h_prev + b_g)
///   C = f.*C_prev + i.*g
///   h = o.*tanh(C)
CellState lstm_cell_forward(const Eigen::VectorXd& x, const CellState& prev, const LstmLayerParams& params,
                            CellCache* cache = nullptr);

/// Per-sample caches for a full forward pass, columnar over time.
struct SequenceCache {
    // per layer: (H x T) matrices
    std::vector<Eigen::MatrixXd> forget_gate, input_gate, candidate, output_gate, cell, tanh_cell, hidden;
    Eigen::VectorXd probs;  // softmax output
    Eigen::VectorXd logits; // head pre-activation
};

/// Runs all layers over the T steps of a window and applies the dense head
/// plus softmax to the final hidden state of the last layer. Throws on a
/// non-finite activation, naming the time step.
Eigen::VectorXd forward_sequence(const LstmNetwork& net, const Eigen::MatrixXd& features,
                                 SequenceCache* cache = nullptr);

/// Max-subtracted stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// -ln(probs[label]) with probabilities floored at 1e-12.
double cross_entropy(const Eigen::VectorXd& probs, DegradationMode label);

/// Gradient container with the same shapes as the network parameters.
struct NetworkGradients {
    std::vector<LstmLayerParams> layers;
    Eigen::MatrixXd head_weights;
    Eigen::VectorXd head_bias;

    void set_zero();
    void add(const NetworkGradients& other, double scale = 1.0);
    double squared_norm() const;
    void scale(double s);
};

NetworkGradients zero_gradients(const LstmNetwork& net);

/// Exact gradients of cross_entropy(forward_sequence(features), label) with
/// respect to every parameter, by backpropagation through time across all
/// steps and layers. The cache must come from forward_sequence on the same
/// features.
NetworkGradients backward_bptt(const LstmNetwork& net, const Eigen::MatrixXd& features, DegradationMode label,
                               const SequenceCache& cache);

/// Rescales gradients so their global L2 norm is at most max_norm.
void clip_global_norm(NetworkGradients& grads, double max_norm);

struct RmsPropConfig {
    double learning_rate = 1e-3;
    double rho = 0.9;
    double epsilon = 1e-8;
};

struct RmsPropState {
    NetworkGradients accumulator; // squared-gradient running average
};

RmsPropState make_rmsprop_state(const LstmNetwork& net);

/// acc <- rho*acc + (1-rho)*g^2;  theta <- theta - lr*g/sqrt(acc+eps)
void rmsprop_step(LstmNetwork& net, const NetworkGradients& grads, RmsPropState& state, const RmsPropConfig& config);

struct TrainingConfig {
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t init_seed = 1;
    std::uint64_t shuffle_seed = 2;
    int early_stopping_patience = 10;
    double gradient_clip_norm = 5.0;
    RmsPropConfig optimizer;
    int num_threads = 0; // 0 = hardware concurrency
};

void validate(const TrainingConfig& c);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double validation_accuracy = 0.0;
};

struct TrainResult {
    LstmNetwork network; // snapshot with the best validation loss
    std::vector<EpochStats> history;
    int best_epoch = 0;
};

/// Mini-batch training with seeded shuffling and early stopping on
/// validation loss. Deterministic for fixed seeds regardless of thread
/// count: per-sample gradients are reduced in sample order.
TrainResult train(const std::vector<WindowedSample>& train_set, const std::vector<WindowedSample>& validation_set,
                  const NetworkConfig& net_config, const TrainingConfig& train_config);

struct Prediction {
    DegradationMode mode;
    Eigen::VectorXd probabilities;
};

/// Argmax of the class probabilities; ties break toward the lowest class
/// code.
Prediction predict(const LstmNetwork& net, const Eigen::MatrixXd& features);

} // namespace laserml
