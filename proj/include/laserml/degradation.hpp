#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "laserml/common.hpp"

namespace laserml {

/// Static operating parameters of one laser, taken from datasheet-style specs.
struct LaserParams {
    double optical_power_mw = 10.0;
    double threshold_current_ma = 20.0;
    double temperature_k = 300.0;
    double wavelength_nm = 1550.0;
};

void validate(const LaserParams& p);

/// Coefficients of the current-growth model. The degradation rate is
///   k = P^n * exp(mu0 - E_A / (kB * T))
/// and the non-radiative current is I_nr(t) = beta * exp(k * t).
struct DegradationCoefficients {
    double beta_ma = 0.5;             // non-radiative current prefactor
    double derating_exponent = 1.5;   // power-law dependence on optical power
    double scale_parameter = 5.0;     // mu0
    double activation_energy_ev = 0.35;
};

void validate(const DegradationCoefficients& c);

enum class DegradationMode : int {
    Normal = 0,
    Gradual = 1,
    Rapid = 2,
    Sudden = 3,
};

inline constexpr int kNumModes = 4;

DegradationMode mode_from_code(int code);
const char* mode_name(DegradationMode m);

/// Normal distribution truncated to [lower, upper] by redraw; at most
/// kRedrawBudget redraws before sampling fails.
struct TruncatedNormal {
    double mean = 0.0;
    double stddev = 0.0;
    double lower = 0.0;
    double upper = 1e30;

    double sample(std::mt19937_64& rng, const std::string& what) const;
};

inline constexpr int kRedrawBudget = 8;

struct ModeCoefficientDistributions {
    TruncatedNormal beta;
    TruncatedNormal derating_exponent;
    TruncatedNormal scale_parameter;
    TruncatedNormal activation_energy;
};

/// Everything needed to synthesize one dataset. Defaults are chosen so that
/// rapid degradation reaches end of life within the first 100 hours, gradual
/// degradation over several hundred hours, and sudden failures strike after a
/// long stretch of normal operation.
struct GenerationConfig {
    ModeCoefficientDistributions normal;
    ModeCoefficientDistributions gradual;
    ModeCoefficientDistributions rapid;
    ModeCoefficientDistributions sudden;

    int samples_per_mode = 1500;
    std::vector<LaserParams> laser_pool;

    double horizon_hours = 1000.0;
    double sample_interval_hours = 1.0;
    double observation_noise_sigma_ma = 0.1;

    // Drive current rails at I0 * (1 + compliance_fraction) once the power
    // control loop runs out of headroom; readings hold there afterwards.
    double compliance_fraction = 0.6;

    TruncatedNormal sudden_jump_magnitude_ma{8.0, 1.0, 6.0, 11.0};
    // Sudden onset drawn uniformly from this fraction range of the horizon.
    double sudden_onset_fraction_min = 0.20;
    double sudden_onset_fraction_max = 0.60;

    std::uint64_t rng_seed = 20240901ull;

    const ModeCoefficientDistributions& distributions_for(DegradationMode m) const;
};

GenerationConfig default_generation_config();

void validate(const GenerationConfig& c);

/// One synthesized trajectory with its provenance.
struct DegradationSample {
    std::int64_t id = 0;
    std::vector<double> times_hours;
    std::vector<double> currents_ma;
    DegradationMode mode = DegradationMode::Normal;
    LaserParams laser;
    DegradationCoefficients coefficients;
    // Sudden-mode provenance; zero for other modes.
    double sudden_onset_hours = 0.0;
    double sudden_jump_ma = 0.0;
};

/// k = P^n * exp(mu0 - E_A/(kB*T)), in 1/hour. Throws std::domain_error
/// naming the offending coefficient when the result is not finite and
/// positive.
double compute_rate_k(const LaserParams& laser, const DegradationCoefficients& coeffs);

/// I(t) = I0 + beta * exp(k*t), in mA. Throws std::domain_error on overflow.
double current_at(double t_hours, double threshold_current_ma, double beta_ma, double rate_k);

/// Generates one trajectory of the given mode. The caller owns the RNG
/// substream; draw order is fixed (coefficients, then onset/jump for sudden,
/// then one noise value per time step).
DegradationSample generate_trajectory(DegradationMode mode, const LaserParams& laser,
                                      const GenerationConfig& config, std::mt19937_64& rng);

/// Generates samples_per_mode trajectories per mode, mode-major, each from an
/// independent substream of (rng_seed, sample id) so serial and parallel
/// generation agree.
std::vector<DegradationSample> generate_dataset(const GenerationConfig& config);

} // namespace laserml
