#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "laserml/degradation.hpp"

namespace laserml {

inline constexpr int kWindowSize = 100;
inline constexpr int kNumChannels = 5; // current, I0, T, P, lambda

/// Fixed-length observation window in raw physical units, before scaling.
struct RawWindow {
    std::int64_t sample_id = 0;
    std::vector<double> currents_ma; // kWindowSize values
    std::vector<double> times_hours; // block-mean times
    LaserParams laser;
    DegradationMode label = DegradationMode::Normal;
    // Index of the first window step showing fault content: 0 for gradual and
    // rapid (degradation starts at t=0), the jump block for sudden.
    int fault_onset_index = 0;
    bool mutated = false;
    double fault_fraction = 0.0; // drawn f when mutated
};

/// Scaled window as consumed by the classifiers: kWindowSize steps by
/// kNumChannels channels, all fitted-scaler units.
struct WindowedSample {
    Eigen::MatrixXd features; // kWindowSize x kNumChannels
    DegradationMode label = DegradationMode::Normal;
};

/// Resamples a series to target_len. Longer series are partitioned into
/// target_len contiguous blocks of near-equal size (sizes differ by at most
/// one) and block means are emitted; shorter series repeat each element
/// ceil(target_len/len) times adjacently, then truncate.
std::vector<double> compress_to_window(const std::vector<double>& series, int target_len = kWindowSize);

/// Window index that receives raw element raw_index under compress_to_window
/// of a length-raw_len series.
int window_index_of(int raw_index, int raw_len, int target_len = kWindowSize);

/// Builds the raw window for one trajectory (compression plus onset mapping).
RawWindow make_raw_window(const DegradationSample& sample);

/// Per-channel min/max scaling fitted on the training split. A channel that
/// is constant on train maps everywhere to 0.5. Non-train data is clamped to
/// [clamp_lo, clamp_hi] in scaled units.
struct MinMaxScaler {
    std::array<double, kNumChannels> channel_min{};
    std::array<double, kNumChannels> channel_max{};
    double clamp_lo = -0.5;
    double clamp_hi = 1.5;

    double scale(double x, int channel, bool clamp) const;
};

MinMaxScaler fit_scaler(const std::vector<RawWindow>& train_windows);

WindowedSample apply_scaler(const MinMaxScaler& scaler, const RawWindow& window, bool is_train);

struct SplitDataset {
    std::vector<RawWindow> train;
    std::vector<RawWindow> validation;
    std::vector<RawWindow> test;
    MinMaxScaler scaler;
    std::uint64_t split_seed = 0;
};

struct SplitFractions {
    double train = 0.6;
    double validation = 0.2;
    double test = 0.2;
};

/// Seeded, stratified, exhaustive, disjoint partition. Per-mode counts
/// deviate from the exact proportions by at most one. Requires at least 5
/// samples per mode. The returned scaler is fitted on the training split.
SplitDataset split_dataset(const std::vector<RawWindow>& windows, const SplitFractions& fractions,
                           std::uint64_t seed);

struct PartialFailureSpec {
    double fault_fraction_min = 0.20;
    double fault_fraction_max = 0.40;
    std::uint64_t rng_seed = 0;
};

void validate(const PartialFailureSpec& spec);

/// Produces a normal-operation current sequence of the requested length for
/// the laser a fault window came from.
using NormalSource = std::function<std::vector<double>(const LaserParams& laser, int n, std::mt19937_64& rng)>;

NormalSource flat_normal_source(double noise_sigma_ma);

/// Replaces a fault window with a partial-failure observation: a drawn
/// fraction f in [min,max] of the fault pattern, taken from its onset, is
/// kept at the tail, with a normal-operation prefix filling the rest. Normal
/// windows pass through unchanged. The drawn f is recorded on the window.
RawWindow mutate_to_partial_failure(const RawWindow& window, const PartialFailureSpec& spec,
                                    const NormalSource& normal_source, std::mt19937_64& rng);

/// Applies mutate_to_partial_failure to every window of the test split, each
/// from its own (seed, sample id) substream.
void mutate_test_split(SplitDataset& split, const PartialFailureSpec& spec, const NormalSource& normal_source);

} // namespace laserml
