#include "laserml/neural.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace laserml {

namespace {

inline Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z) { return 1.0 / (1.0 + (-z).exp()); }

void fill_uniform(Eigen::MatrixXd& m, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

} // namespace

void validate(const NetworkConfig& c) {
    if (c.num_lstm_layers < 1) throw std::invalid_argument("need at least one LSTM layer");
    if (c.hidden_dim < 1) throw std::invalid_argument("hidden_dim must be >= 1");
    if (c.input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
    if (c.num_classes != kNumModes) throw std::invalid_argument("num_classes must equal the four degradation modes");
}

LstmNetwork init_network(const NetworkConfig& config, std::uint64_t seed) {
    validate(config);
    auto rng = make_rng(seed);
    LstmNetwork net;
    net.config = config;
    const int hidden = config.hidden_dim;
    for (int l = 0; l < config.num_lstm_layers; ++l) {
        const int in_dim = (l == 0) ? config.input_dim : hidden;
        LstmLayerParams p;
        p.input_weights.resize(4 * hidden, in_dim);
        p.recurrent_weights.resize(4 * hidden, hidden);
        p.biases = Eigen::VectorXd::Zero(4 * hidden);
        fill_uniform(p.input_weights, 1.0 / std::sqrt(static_cast<double>(in_dim)), rng);
        fill_uniform(p.recurrent_weights, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
        p.biases.segment(0, hidden).setOnes(); // forget gate opens high
        net.layers.push_back(std::move(p));
    }
    net.head_weights.resize(config.num_classes, hidden);
    fill_uniform(net.head_weights, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    net.head_bias = Eigen::VectorXd::Zero(config.num_classes);
    return net;
}

CellState lstm_cell_forward(const Eigen::VectorXd& x, const CellState& prev, const LstmLayerParams& params,
                            CellCache* cache) {
    const int hidden = params.hidden_dim();
    if (x.size() != params.input_dim()) throw std::invalid_argument("cell input dimension mismatch");
    if (prev.h.size() != hidden || prev.c.size() != hidden) throw std::invalid_argument("cell state dimension mismatch");

    Eigen::VectorXd z = params.input_weights * x + params.recurrent_weights * prev.h + params.biases;
    const Eigen::ArrayXd f = sigmoid(z.segment(0, hidden).array());
    const Eigen::ArrayXd i = sigmoid(z.segment(hidden, hidden).array());
    const Eigen::ArrayXd g = z.segment(2 * hidden, hidden).array().tanh();
    const Eigen::ArrayXd o = sigmoid(z.segment(3 * hidden, hidden).array());

    CellState next;
    next.c = (f * prev.c.array() + i * g).matrix();
    const Eigen::ArrayXd tanh_c = next.c.array().tanh();
    next.h = (o * tanh_c).matrix();

    if (cache) {
        cache->forget_gate = f.matrix();
        cache->input_gate = i.matrix();
        cache->candidate = g.matrix();
        cache->output_gate = o.matrix();
        cache->cell = next.c;
        cache->tanh_cell = tanh_c.matrix();
    }
    return next;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::ArrayXd e = (logits.array() - m).exp();
    return (e / e.sum()).matrix();
}

double cross_entropy(const Eigen::VectorXd& probs, DegradationMode label) {
    const int idx = static_cast<int>(label);
    if (idx < 0 || idx >= probs.size()) throw std::invalid_argument("label out of range");
    return -std::log(std::max(probs(idx), 1e-12));
}

Eigen::VectorXd forward_sequence(const LstmNetwork& net, const Eigen::MatrixXd& features, SequenceCache* cache) {
    const int steps = static_cast<int>(features.rows());
    if (steps < 1) throw std::invalid_argument("need at least one time step");
    if (features.cols() != net.config.input_dim) throw std::invalid_argument("feature channel count mismatch");

    const int num_layers = static_cast<int>(net.layers.size());
    const int hidden = net.config.hidden_dim;

    if (cache) {
        auto resize_all = [&](std::vector<Eigen::MatrixXd>& v) {
            v.resize(num_layers);
            for (auto& m : v) m.resize(hidden, steps);
        };
        resize_all(cache->forget_gate);
        resize_all(cache->input_gate);
        resize_all(cache->candidate);
        resize_all(cache->output_gate);
        resize_all(cache->cell);
        resize_all(cache->tanh_cell);
        resize_all(cache->hidden);
    }

    Eigen::MatrixXd layer_input = features.transpose(); // (channels x T)
    Eigen::MatrixXd layer_output(hidden, steps);
    CellCache step_cache;
    for (int l = 0; l < num_layers; ++l) {
        CellState state{Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden)};
        for (int t = 0; t < steps; ++t) {
            state = lstm_cell_forward(layer_input.col(t), state, net.layers[l], cache ? &step_cache : nullptr);
            if (!state.h.allFinite() || !state.c.allFinite()) {
                throw std::runtime_error("non-finite LSTM activation at time step " + std::to_string(t) +
                                         " in layer " + std::to_string(l));
            }
            layer_output.col(t) = state.h;
            if (cache) {
                cache->forget_gate[l].col(t) = step_cache.forget_gate;
                cache->input_gate[l].col(t) = step_cache.input_gate;
                cache->candidate[l].col(t) = step_cache.candidate;
                cache->output_gate[l].col(t) = step_cache.output_gate;
                cache->cell[l].col(t) = step_cache.cell;
                cache->tanh_cell[l].col(t) = step_cache.tanh_cell;
            }
        }
        if (cache) cache->hidden[l] = layer_output;
        layer_input = layer_output;
    }

    Eigen::VectorXd logits = net.head_weights * layer_input.col(steps - 1) + net.head_bias;
    Eigen::VectorXd probs = softmax(logits);
    if (cache) {
        cache->logits = logits;
        cache->probs = probs;
    }
    return probs;
}

void NetworkGradients::set_zero() {
    for (auto& l : layers) {
        l.input_weights.setZero();
        l.recurrent_weights.setZero();
        l.biases.setZero();
    }
    head_weights.setZero();
    head_bias.setZero();
}

void NetworkGradients::add(const NetworkGradients& other, double s) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].input_weights += s * other.layers[l].input_weights;
        layers[l].recurrent_weights += s * other.layers[l].recurrent_weights;
        layers[l].biases += s * other.layers[l].biases;
    }
    head_weights += s * other.head_weights;
    head_bias += s * other.head_bias;
}

double NetworkGradients::squared_norm() const {
    double total = 0.0;
    for (const auto& l : layers) {
        total += l.input_weights.squaredNorm() + l.recurrent_weights.squaredNorm() + l.biases.squaredNorm();
    }
    return total + head_weights.squaredNorm() + head_bias.squaredNorm();
}

void NetworkGradients::scale(double s) {
    for (auto& l : layers) {
        l.input_weights *= s;
        l.recurrent_weights *= s;
        l.biases *= s;
    }
    head_weights *= s;
    head_bias *= s;
}

NetworkGradients zero_gradients(const LstmNetwork& net) {
    NetworkGradients g;
    for (const auto& l : net.layers) {
        LstmLayerParams p;
        p.input_weights = Eigen::MatrixXd::Zero(l.input_weights.rows(), l.input_weights.cols());
        p.recurrent_weights = Eigen::MatrixXd::Zero(l.recurrent_weights.rows(), l.recurrent_weights.cols());
        p.biases = Eigen::VectorXd::Zero(l.biases.size());
        g.layers.push_back(std::move(p));
    }
    g.head_weights = Eigen::MatrixXd::Zero(net.head_weights.rows(), net.head_weights.cols());
    g.head_bias = Eigen::VectorXd::Zero(net.head_bias.size());
    return g;
}

NetworkGradients backward_bptt(const LstmNetwork& net, const Eigen::MatrixXd& features, DegradationMode label,
                               const SequenceCache& cache) {
    const int steps = static_cast<int>(features.rows());
    const int num_layers = static_cast<int>(net.layers.size());
    const int hidden = net.config.hidden_dim;

    NetworkGradients grads = zero_gradients(net);

    // Head: softmax + cross-entropy collapse to probs - onehot.
    Eigen::VectorXd dlogits = cache.probs;
    dlogits(static_cast<int>(label)) -= 1.0;
    grads.head_weights.noalias() = dlogits * cache.hidden[num_layers - 1].col(steps - 1).transpose();
    grads.head_bias = dlogits;

    // Gradient flowing into each layer's hidden outputs from above.
    Eigen::MatrixXd dh_ext = Eigen::MatrixXd::Zero(hidden, steps);
    dh_ext.col(steps - 1) = net.head_weights.transpose() * dlogits;

    Eigen::VectorXd dz(4 * hidden);
    for (int l = num_layers - 1; l >= 0; --l) {
        const auto& params = net.layers[l];
        auto& layer_grads = grads.layers[l];
        const int in_dim = params.input_dim();
        const Eigen::MatrixXd* below = (l > 0) ? &cache.hidden[l - 1] : nullptr;

        Eigen::MatrixXd dx(in_dim, steps);
        Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hidden);
        Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hidden);

        for (int t = steps - 1; t >= 0; --t) {
            const Eigen::ArrayXd f = cache.forget_gate[l].col(t).array();
            const Eigen::ArrayXd i = cache.input_gate[l].col(t).array();
            const Eigen::ArrayXd g = cache.candidate[l].col(t).array();
            const Eigen::ArrayXd o = cache.output_gate[l].col(t).array();
            const Eigen::ArrayXd tanh_c = cache.tanh_cell[l].col(t).array();

            const Eigen::ArrayXd dh = dh_ext.col(t).array() + dh_next.array();
            const Eigen::ArrayXd dc = dh * o * (1.0 - tanh_c.square()) + dc_next.array();

            const Eigen::ArrayXd c_prev =
                (t > 0) ? cache.cell[l].col(t - 1).array() : Eigen::ArrayXd::Zero(hidden).eval();

            dz.segment(0, hidden).array() = dc * c_prev * f * (1.0 - f);
            dz.segment(hidden, hidden).array() = dc * g * i * (1.0 - i);
            dz.segment(2 * hidden, hidden).array() = dc * i * (1.0 - g.square());
            dz.segment(3 * hidden, hidden).array() = dh * tanh_c * o * (1.0 - o);

            if (l == 0) {
                layer_grads.input_weights.noalias() += dz * features.row(t);
            } else {
                layer_grads.input_weights.noalias() += dz * below->col(t).transpose();
            }
            if (t > 0) {
                layer_grads.recurrent_weights.noalias() += dz * cache.hidden[l].col(t - 1).transpose();
            }
            layer_grads.biases += dz;

            dh_next.noalias() = params.recurrent_weights.transpose() * dz;
            dc_next = (dc * f).matrix();
            if (l > 0) dx.col(t).noalias() = params.input_weights.transpose() * dz;
        }
        if (l > 0) dh_ext = dx;
    }

    if (!std::isfinite(grads.squared_norm())) throw std::runtime_error("non-finite gradient in backpropagation");
    return grads;
}

void clip_global_norm(NetworkGradients& grads, double max_norm) {
    if (max_norm <= 0.0) return;
    const double norm = std::sqrt(grads.squared_norm());
    if (norm > max_norm) grads.scale(max_norm / norm);
}

RmsPropState make_rmsprop_state(const LstmNetwork& net) { return RmsPropState{zero_gradients(net)}; }

namespace {

void rmsprop_update(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, Eigen::MatrixXd& acc,
                    const RmsPropConfig& c) {
    acc.array() = c.rho * acc.array() + (1.0 - c.rho) * grad.array().square();
    param.array() -= c.learning_rate * grad.array() / (acc.array() + c.epsilon).sqrt();
}

void rmsprop_update(Eigen::VectorXd& param, const Eigen::VectorXd& grad, Eigen::VectorXd& acc,
                    const RmsPropConfig& c) {
    acc.array() = c.rho * acc.array() + (1.0 - c.rho) * grad.array().square();
    param.array() -= c.learning_rate * grad.array() / (acc.array() + c.epsilon).sqrt();
}

} // namespace

void rmsprop_step(LstmNetwork& net, const NetworkGradients& grads, RmsPropState& state, const RmsPropConfig& config) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        rmsprop_update(net.layers[l].input_weights, grads.layers[l].input_weights,
                       state.accumulator.layers[l].input_weights, config);
        rmsprop_update(net.layers[l].recurrent_weights, grads.layers[l].recurrent_weights,
                       state.accumulator.layers[l].recurrent_weights, config);
        rmsprop_update(net.layers[l].biases, grads.layers[l].biases, state.accumulator.layers[l].biases, config);
    }
    rmsprop_update(net.head_weights, grads.head_weights, state.accumulator.head_weights, config);
    rmsprop_update(net.head_bias, grads.head_bias, state.accumulator.head_bias, config);
}

void validate(const TrainingConfig& c) {
    if (c.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (c.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (c.early_stopping_patience < 1) throw std::invalid_argument("patience must be >= 1");
}

namespace {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(i) for i in [0, n) across up to num_threads workers on contiguous
/// chunks. Work distribution is index-based, so any writes fn makes to
/// per-index slots are thread-safe and results are order-independent.
template <typename Fn>
void parallel_for(int n, int num_threads, const Fn& fn) {
    const int workers = std::min(std::max(num_threads, 1), std::max(n, 1));
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        const int lo = static_cast<int>(static_cast<std::int64_t>(w) * n / workers);
        const int hi = static_cast<int>(static_cast<std::int64_t>(w + 1) * n / workers);
        pool.emplace_back([&, lo, hi] {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace

TrainResult train(const std::vector<WindowedSample>& train_set, const std::vector<WindowedSample>& validation_set,
                  const NetworkConfig& net_config, const TrainingConfig& train_config) {
    validate(net_config);
    validate(train_config);
    if (train_set.empty() || validation_set.empty()) throw std::invalid_argument("train and validation sets must be non-empty");

    const int threads = resolve_threads(train_config.num_threads);
    LstmNetwork net = init_network(net_config, train_config.init_seed);
    RmsPropState opt_state = make_rmsprop_state(net);

    const int n_train = static_cast<int>(train_set.size());
    const int batch = std::min(train_config.batch_size, n_train);

    std::vector<NetworkGradients> sample_grads(batch, zero_gradients(net));
    std::vector<double> sample_loss(batch, 0.0);
    std::vector<SequenceCache> caches(batch);

    std::vector<int> order(n_train);
    for (int i = 0; i < n_train; ++i) order[i] = i;

    TrainResult result;
    double best_val_loss = std::numeric_limits<double>::infinity();
    int epochs_since_best = 0;

    for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
        auto shuffle_rng = make_rng(derive_seed(train_config.shuffle_seed, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss_sum = 0.0;
        for (int start = 0; start < n_train; start += batch) {
            const int count = std::min(batch, n_train - start);
            parallel_for(count, threads, [&](int j) {
                const auto& sample = train_set[order[start + j]];
                forward_sequence(net, sample.features, &caches[j]);
                sample_loss[j] = cross_entropy(caches[j].probs, sample.label);
                sample_grads[j] = backward_bptt(net, sample.features, sample.label, caches[j]);
            });

            NetworkGradients batch_grads = zero_gradients(net);
            for (int j = 0; j < count; ++j) {
                batch_grads.add(sample_grads[j]);
                epoch_loss_sum += sample_loss[j];
            }
            batch_grads.scale(1.0 / count);
            clip_global_norm(batch_grads, train_config.gradient_clip_norm);
            rmsprop_step(net, batch_grads, opt_state, train_config.optimizer);
        }

        const int n_val = static_cast<int>(validation_set.size());
        std::vector<double> val_losses(n_val);
        std::vector<char> val_correct(n_val);
        parallel_for(n_val, threads, [&](int i) {
            const auto& sample = validation_set[i];
            const Eigen::VectorXd probs = forward_sequence(net, sample.features);
            val_losses[i] = cross_entropy(probs, sample.label);
            int arg = 0;
            for (int c = 1; c < probs.size(); ++c) {
                if (probs(c) > probs(arg)) arg = c;
            }
            val_correct[i] = (arg == static_cast<int>(sample.label)) ? 1 : 0;
        });
        double val_loss_sum = 0.0;
        int correct = 0;
        for (int i = 0; i < n_val; ++i) {
            val_loss_sum += val_losses[i];
            correct += val_correct[i];
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss_sum / n_train;
        stats.validation_loss = val_loss_sum / n_val;
        stats.validation_accuracy = static_cast<double>(correct) / n_val;
        result.history.push_back(stats);

        if (!std::isfinite(stats.validation_loss)) {
            throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
        }

        if (stats.validation_loss < best_val_loss) {
            best_val_loss = stats.validation_loss;
            result.network = net;
            result.best_epoch = epoch;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= train_config.early_stopping_patience) {
            break;
        }
    }

    if (result.best_epoch == 0) {
        result.network = net;
        result.best_epoch = static_cast<int>(result.history.size());
    }
    return result;
}

Prediction predict(const LstmNetwork& net, const Eigen::MatrixXd& features) {
    Prediction p;
    p.probabilities = forward_sequence(net, features);
    int arg = 0;
    for (int c = 1; c < p.probabilities.size(); ++c) {
        if (p.probabilities(c) > p.probabilities(arg)) arg = c;
    }
    p.mode = static_cast<DegradationMode>(arg);
    return p;
}

} // namespace laserml
