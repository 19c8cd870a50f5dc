#include "laserml/degradation.hpp"

#include <cmath>
#include <stdexcept>

namespace laserml {

void validate(const LaserParams& p) {
    if (!(p.optical_power_mw > 0.0)) throw std::invalid_argument("optical_power must be > 0");
    if (!(p.threshold_current_ma > 0.0)) throw std::invalid_argument("threshold_current must be > 0");
    if (!(p.temperature_k > 0.0)) throw std::invalid_argument("temperature must be > 0");
    if (!(p.wavelength_nm > 0.0)) throw std::invalid_argument("wavelength must be > 0");
}

void validate(const DegradationCoefficients& c) {
    if (!(c.beta_ma >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    if (!(c.activation_energy_ev >= 0.0)) throw std::invalid_argument("activation_energy must be >= 0");
}

DegradationMode mode_from_code(int code) {
    if (code < 0 || code >= kNumModes) throw std::invalid_argument("mode code out of range: " + std::to_string(code));
    return static_cast<DegradationMode>(code);
}

const char* mode_name(DegradationMode m) {
    switch (m) {
        case DegradationMode::Normal: return "normal";
        case DegradationMode::Gradual: return "gradual";
        case DegradationMode::Rapid: return "rapid";
        case DegradationMode::Sudden: return "sudden";
    }
    return "?";
}

double TruncatedNormal::sample(std::mt19937_64& rng, const std::string& what) const {
    if (stddev == 0.0) {
        if (mean < lower || mean > upper) {
            throw std::runtime_error("degenerate distribution for " + what + " lies outside its bounds");
        }
        return mean;
    }
    std::normal_distribution<double> dist(mean, stddev);
    for (int attempt = 0; attempt <= kRedrawBudget; ++attempt) {
        const double v = dist(rng);
        if (v >= lower && v <= upper) return v;
    }
    throw std::runtime_error("exhausted redraw budget sampling " + what);
}

const ModeCoefficientDistributions& GenerationConfig::distributions_for(DegradationMode m) const {
    switch (m) {
        case DegradationMode::Normal: return normal;
        case DegradationMode::Gradual: return gradual;
        case DegradationMode::Rapid: return rapid;
        case DegradationMode::Sudden: return sudden;
    }
    throw std::invalid_argument("bad mode");
}

GenerationConfig default_generation_config() {
    GenerationConfig c;

    // 1550 nm-class DFB pool, datasheet-style spread.
    c.laser_pool = {
        {9.0, 18.0, 296.0, 1530.0}, {9.5, 20.0, 298.0, 1550.0},
        {10.0, 22.0, 300.0, 1550.0}, {10.5, 24.0, 302.0, 1570.0},
        {11.0, 16.0, 303.0, 1550.0}, {9.8, 25.0, 297.0, 1530.0},
        {10.2, 15.0, 305.0, 1570.0}, {10.8, 21.0, 299.0, 1550.0},
    };

    const TruncatedNormal beta{0.5, 0.05, 0.35, 0.65};
    const TruncatedNormal derating{1.5, 0.02, 1.46, 1.54};
    const TruncatedNormal activation{0.35, 0.002, 0.346, 0.354};

    // Only the scale parameter separates gradual from rapid: it shifts the
    // rate k by roughly e^2, moving end of life from a few hundred hours
    // down to inside the first hundred.
    c.normal = {TruncatedNormal{0.0, 0.0, 0.0, 0.0}, derating, TruncatedNormal{5.0, 0.15, 4.75, 5.25}, activation};
    c.gradual = {beta, derating, TruncatedNormal{5.0, 0.15, 4.75, 5.25}, activation};
    c.rapid = {beta, derating, TruncatedNormal{7.0, 0.15, 6.75, 7.25}, activation};
    c.sudden = {TruncatedNormal{0.0, 0.0, 0.0, 0.0}, derating, TruncatedNormal{5.0, 0.15, 4.75, 5.25}, activation};

    return c;
}

void validate(const GenerationConfig& c) {
    if (c.samples_per_mode <= 0) throw std::invalid_argument("samples_per_mode must be > 0");
    if (c.laser_pool.empty()) throw std::invalid_argument("laser parameter pool is empty");
    for (const auto& p : c.laser_pool) validate(p);
    if (!(c.sample_interval_hours > 0.0)) throw std::invalid_argument("sample_interval must be > 0");
    if (!(c.horizon_hours >= c.sample_interval_hours)) throw std::invalid_argument("horizon must be >= sample_interval");
    if (!(c.observation_noise_sigma_ma >= 0.0)) throw std::invalid_argument("observation_noise_sigma must be >= 0");
    if (!(c.compliance_fraction > 0.0)) throw std::invalid_argument("compliance_fraction must be > 0");
    if (!(c.sudden_onset_fraction_min >= 0.0 && c.sudden_onset_fraction_max < 1.0 &&
          c.sudden_onset_fraction_min <= c.sudden_onset_fraction_max)) {
        throw std::invalid_argument("sudden onset fraction range must satisfy 0 <= min <= max < 1");
    }
    for (const auto* d : {&c.normal, &c.gradual, &c.rapid, &c.sudden}) {
        if (d->beta.stddev < 0 || d->derating_exponent.stddev < 0 || d->scale_parameter.stddev < 0 ||
            d->activation_energy.stddev < 0 || c.sudden_jump_magnitude_ma.stddev < 0) {
            throw std::invalid_argument("distribution stddev must be >= 0");
        }
        if (d->beta.lower < 0.0) throw std::invalid_argument("beta lower bound must be >= 0");
        if (d->activation_energy.lower < 0.0) throw std::invalid_argument("activation_energy lower bound must be >= 0");
    }
}

double compute_rate_k(const LaserParams& laser, const DegradationCoefficients& coeffs) {
    validate(laser);
    validate(coeffs);
    const double power_factor = std::pow(laser.optical_power_mw, coeffs.derating_exponent);
    if (!std::isfinite(power_factor)) {
        throw std::domain_error("rate overflow in power de-rating factor (derating_exponent)");
    }
    const double exponent =
        coeffs.scale_parameter - coeffs.activation_energy_ev / (kBoltzmannEvPerK * laser.temperature_k);
    const double arrhenius = std::exp(exponent);
    const double k = power_factor * arrhenius;
    if (!std::isfinite(k) || !(k > 0.0)) {
        throw std::domain_error("rate not finite and positive; check scale_parameter");
    }
    return k;
}

double current_at(double t_hours, double threshold_current_ma, double beta_ma, double rate_k) {
    if (t_hours < 0.0) throw std::invalid_argument("time must be >= 0");
    const double growth = std::exp(rate_k * t_hours);
    const double current = threshold_current_ma + beta_ma * growth;
    if (!std::isfinite(current)) throw std::domain_error("current overflow at t = " + std::to_string(t_hours));
    return current;
}

namespace {

DegradationCoefficients draw_coefficients(const ModeCoefficientDistributions& d, std::mt19937_64& rng) {
    DegradationCoefficients c;
    c.beta_ma = d.beta.sample(rng, "beta");
    c.derating_exponent = d.derating_exponent.sample(rng, "derating_exponent");
    c.scale_parameter = d.scale_parameter.sample(rng, "scale_parameter");
    c.activation_energy_ev = d.activation_energy.sample(rng, "activation_energy");
    validate(c);
    return c;
}

} // namespace

DegradationSample generate_trajectory(DegradationMode mode, const LaserParams& laser,
                                      const GenerationConfig& config, std::mt19937_64& rng) {
    validate(laser);
    const int steps = static_cast<int>(std::floor(config.horizon_hours / config.sample_interval_hours + 1e-9)) + 1;

    DegradationSample sample;
    sample.mode = mode;
    sample.laser = laser;
    sample.coefficients = draw_coefficients(config.distributions_for(mode), rng);
    sample.times_hours.resize(steps);
    sample.currents_ma.resize(steps);

    const double i0 = laser.threshold_current_ma;
    const double compliance_ma = i0 * (1.0 + config.compliance_fraction);

    double onset = 0.0;
    double jump = 0.0;
    double rate = 0.0;
    if (mode == DegradationMode::Sudden) {
        std::uniform_real_distribution<double> onset_dist(config.sudden_onset_fraction_min * config.horizon_hours,
                                                          config.sudden_onset_fraction_max * config.horizon_hours);
        onset = onset_dist(rng);
        jump = config.sudden_jump_magnitude_ma.sample(rng, "sudden_jump_magnitude");
        sample.sudden_onset_hours = onset;
        sample.sudden_jump_ma = jump;
    } else if (mode == DegradationMode::Gradual || mode == DegradationMode::Rapid) {
        rate = compute_rate_k(laser, sample.coefficients);
    }

    std::normal_distribution<double> noise(0.0, config.observation_noise_sigma_ma);
    bool railed = false;
    for (int i = 0; i < steps; ++i) {
        const double t = i * config.sample_interval_hours;
        double value = i0;
        switch (mode) {
            case DegradationMode::Normal:
                break;
            case DegradationMode::Sudden:
                if (t >= onset) value += jump;
                break;
            case DegradationMode::Gradual:
            case DegradationMode::Rapid:
                if (!railed) {
                    value = current_at(t, i0, sample.coefficients.beta_ma, rate);
                    if (value >= compliance_ma) {
                        value = compliance_ma;
                        railed = true;
                    }
                } else {
                    value = compliance_ma;
                }
                break;
        }
        if (config.observation_noise_sigma_ma > 0.0) value += noise(rng);
        sample.times_hours[i] = t;
        sample.currents_ma[i] = std::max(value, 0.0);
    }
    return sample;
}

std::vector<DegradationSample> generate_dataset(const GenerationConfig& config) {
    validate(config);
    const std::int64_t total = static_cast<std::int64_t>(config.samples_per_mode) * kNumModes;
    std::vector<DegradationSample> samples(total);
    for (std::int64_t id = 0; id < total; ++id) {
        const auto mode = static_cast<DegradationMode>(id / config.samples_per_mode);
        auto rng = make_rng(derive_seed(config.rng_seed, static_cast<std::uint64_t>(id)));
        std::uniform_int_distribution<std::size_t> pick(0, config.laser_pool.size() - 1);
        const LaserParams& laser = config.laser_pool[pick(rng)];
        samples[id] = generate_trajectory(mode, laser, config, rng);
        samples[id].id = id;
    }
    return samples;
}

} // namespace laserml
