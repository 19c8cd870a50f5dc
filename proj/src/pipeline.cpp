#include "laserml/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace laserml {

std::vector<double> compress_to_window(const std::vector<double>& series, int target_len) {
    if (series.empty()) throw std::invalid_argument("cannot window an empty series");
    if (target_len <= 0) throw std::invalid_argument("target_len must be > 0");
    const int n = static_cast<int>(series.size());

    if (n == target_len) return series;

    std::vector<double> out;
    out.reserve(target_len);
    if (n > target_len) {
        for (int b = 0; b < target_len; ++b) {
            const int lo = static_cast<int>((static_cast<std::int64_t>(b) * n) / target_len);
            const int hi = static_cast<int>((static_cast<std::int64_t>(b + 1) * n) / target_len);
            double sum = 0.0;
            for (int i = lo; i < hi; ++i) sum += series[i];
            out.push_back(sum / (hi - lo));
        }
    } else {
        const int repeat = (target_len + n - 1) / n;
        for (int i = 0; i < n && static_cast<int>(out.size()) < target_len; ++i) {
            for (int r = 0; r < repeat && static_cast<int>(out.size()) < target_len; ++r) {
                out.push_back(series[i]);
            }
        }
    }
    return out;
}

int window_index_of(int raw_index, int raw_len, int target_len) {
    if (raw_index < 0 || raw_index >= raw_len) throw std::invalid_argument("raw_index out of range");
    if (raw_len >= target_len) {
        // invert the near-equal block partition
        int b = static_cast<int>((static_cast<std::int64_t>(raw_index) * target_len) / raw_len);
        while ((static_cast<std::int64_t>(b + 1) * raw_len) / target_len <= raw_index) ++b;
        while ((static_cast<std::int64_t>(b) * raw_len) / target_len > raw_index) --b;
        return b;
    }
    const int repeat = (target_len + raw_len - 1) / raw_len;
    return std::min(raw_index * repeat, target_len - 1);
}

RawWindow make_raw_window(const DegradationSample& sample) {
    RawWindow w;
    w.sample_id = sample.id;
    w.currents_ma = compress_to_window(sample.currents_ma, kWindowSize);
    w.times_hours = compress_to_window(sample.times_hours, kWindowSize);
    w.laser = sample.laser;
    w.label = sample.mode;
    if (sample.mode == DegradationMode::Sudden) {
        const int raw_len = static_cast<int>(sample.times_hours.size());
        int first_elevated = raw_len - 1;
        for (int i = 0; i < raw_len; ++i) {
            if (sample.times_hours[i] >= sample.sudden_onset_hours) {
                first_elevated = i;
                break;
            }
        }
        w.fault_onset_index = window_index_of(first_elevated, raw_len, kWindowSize);
    }
    return w;
}

double MinMaxScaler::scale(double x, int channel, bool clamp) const {
    const double lo = channel_min[channel];
    const double hi = channel_max[channel];
    double v;
    if (hi > lo) {
        v = (x - lo) / (hi - lo);
    } else {
        v = 0.5; // constant channel on train
    }
    if (clamp) v = std::clamp(v, clamp_lo, clamp_hi);
    return v;
}

MinMaxScaler fit_scaler(const std::vector<RawWindow>& train_windows) {
    if (train_windows.empty()) throw std::invalid_argument("cannot fit a scaler on an empty training set");
    MinMaxScaler s;
    s.channel_min.fill(std::numeric_limits<double>::infinity());
    s.channel_max.fill(-std::numeric_limits<double>::infinity());
    auto update = [&s](int ch, double x) {
        s.channel_min[ch] = std::min(s.channel_min[ch], x);
        s.channel_max[ch] = std::max(s.channel_max[ch], x);
    };
    for (const auto& w : train_windows) {
        for (double c : w.currents_ma) update(0, c);
        update(1, w.laser.threshold_current_ma);
        update(2, w.laser.temperature_k);
        update(3, w.laser.optical_power_mw);
        update(4, w.laser.wavelength_nm);
    }
    return s;
}

WindowedSample apply_scaler(const MinMaxScaler& scaler, const RawWindow& window, bool is_train) {
    if (static_cast<int>(window.currents_ma.size()) != kWindowSize) {
        throw std::invalid_argument("window must have exactly " + std::to_string(kWindowSize) + " steps");
    }
    WindowedSample out;
    out.label = window.label;
    out.features.resize(kWindowSize, kNumChannels);
    const bool clamp = !is_train;
    const double i0 = scaler.scale(window.laser.threshold_current_ma, 1, clamp);
    const double temp = scaler.scale(window.laser.temperature_k, 2, clamp);
    const double power = scaler.scale(window.laser.optical_power_mw, 3, clamp);
    const double wavelength = scaler.scale(window.laser.wavelength_nm, 4, clamp);
    for (int t = 0; t < kWindowSize; ++t) {
        out.features(t, 0) = scaler.scale(window.currents_ma[t], 0, clamp);
        out.features(t, 1) = i0;
        out.features(t, 2) = temp;
        out.features(t, 3) = power;
        out.features(t, 4) = wavelength;
    }
    return out;
}

namespace {

std::array<int, 3> stratum_counts(int n, const SplitFractions& f) {
    const double fracs[3] = {f.train, f.validation, f.test};
    std::array<int, 3> counts{};
    std::array<double, 3> remainders{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = fracs[i] * n;
        counts[i] = static_cast<int>(std::floor(exact));
        remainders[i] = exact - counts[i];
        assigned += counts[i];
    }
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i) {
            if (remainders[i] > remainders[best]) best = i;
        }
        ++counts[best];
        remainders[best] = -1.0;
        ++assigned;
    }
    return counts;
}

} // namespace

SplitDataset split_dataset(const std::vector<RawWindow>& windows, const SplitFractions& fractions,
                           std::uint64_t seed) {
    const double total = fractions.train + fractions.validation + fractions.test;
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");

    std::array<std::vector<std::size_t>, kNumModes> by_mode;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        by_mode[static_cast<int>(windows[i].label)].push_back(i);
    }
    for (int m = 0; m < kNumModes; ++m) {
        if (by_mode[m].size() < 5) {
            throw std::invalid_argument(std::string("need at least 5 samples per mode; mode ") + mode_name(mode_from_code(m)) +
                                        " has " + std::to_string(by_mode[m].size()));
        }
    }

    SplitDataset split;
    split.split_seed = seed;
    for (int m = 0; m < kNumModes; ++m) {
        auto& indices = by_mode[m];
        auto rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
        std::shuffle(indices.begin(), indices.end(), rng);
        const auto counts = stratum_counts(static_cast<int>(indices.size()), fractions);
        std::size_t pos = 0;
        for (int i = 0; i < counts[0]; ++i) split.train.push_back(windows[indices[pos++]]);
        for (int i = 0; i < counts[1]; ++i) split.validation.push_back(windows[indices[pos++]]);
        for (int i = 0; i < counts[2]; ++i) split.test.push_back(windows[indices[pos++]]);
    }
    split.scaler = fit_scaler(split.train);
    return split;
}

void validate(const PartialFailureSpec& spec) {
    if (!(spec.fault_fraction_min > 0.0 && spec.fault_fraction_max < 1.0 &&
          spec.fault_fraction_min <= spec.fault_fraction_max)) {
        throw std::invalid_argument("fault fraction range must satisfy 0 < min <= max < 1");
    }
}

NormalSource flat_normal_source(double noise_sigma_ma) {
    return [noise_sigma_ma](const LaserParams& laser, int n, std::mt19937_64& rng) {
        std::vector<double> out(n, laser.threshold_current_ma);
        if (noise_sigma_ma > 0.0) {
            std::normal_distribution<double> noise(0.0, noise_sigma_ma);
            for (auto& v : out) v = std::max(v + noise(rng), 0.0);
        }
        return out;
    };
}

RawWindow mutate_to_partial_failure(const RawWindow& window, const PartialFailureSpec& spec,
                                    const NormalSource& normal_source, std::mt19937_64& rng) {
    validate(spec);
    if (window.label == DegradationMode::Normal) return window;

    std::uniform_real_distribution<double> fraction_dist(spec.fault_fraction_min, spec.fault_fraction_max);
    const double f = fraction_dist(rng);
    const int keep = static_cast<int>(std::ceil(f * kWindowSize));
    const int prefix = kWindowSize - keep;

    const int onset = window.fault_onset_index;
    if (onset + keep > kWindowSize) {
        throw std::runtime_error("fault onset at step " + std::to_string(onset) +
                                 " leaves fewer than the drawn " + std::to_string(keep) +
                                 " fault steps; lower sudden_onset_fraction_max or the fault fraction range");
    }

    RawWindow out = window;
    const auto normal_prefix = normal_source(window.laser, prefix, rng);
    for (int i = 0; i < prefix; ++i) out.currents_ma[i] = normal_prefix[i];
    for (int i = 0; i < keep; ++i) out.currents_ma[prefix + i] = window.currents_ma[onset + i];
    out.fault_onset_index = prefix;
    out.mutated = true;
    out.fault_fraction = f;
    return out;
}

void mutate_test_split(SplitDataset& split, const PartialFailureSpec& spec, const NormalSource& normal_source) {
    for (auto& w : split.test) {
        auto rng = make_rng(derive_seed(spec.rng_seed, static_cast<std::uint64_t>(w.sample_id)));
        w = mutate_to_partial_failure(w, spec, normal_source, rng);
    }
}

} // namespace laserml
