// model.hpp - physical parameters of the atom-cavity system in reduced units.
//
// Units throughout the library:
//   time      1/gamma        (gamma = atomic HWHM linewidth)
//   position  1/k            (x~ = k x)
//   momentum  hbar k
//   energy    hbar gamma
//   field     dimensionless coherent amplitude (alpha_r, alpha_i)
//
// The SI value of gamma is carried only so results can be reported in
// microseconds and microkelvin. It never enters the dynamics.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cavsim {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace units {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double hbar = 1.054571817e-34;    // J s
constexpr double k_boltzmann = 1.380649e-23;  // J/K

// 87Rb D2 line: recoil frequency omega_rec = 2 pi x 3.771 kHz,
// linewidth gamma = 2 pi x 3 MHz (HWHM convention of the master equation).
// epsilon = hbar k^2 / (M gamma) = 2 omega_rec / gamma
//         = 2 * 3.771e3 / 3.0e6 = 2.514e-3.
constexpr double rb87_recoil_hz = 3.771e3;
constexpr double default_gamma_si = two_pi * 3.0e6;  // 1/s
constexpr double rb87_epsilon = 2.0 * rb87_recoil_hz / 3.0e6;

}  // namespace units

struct SystemParams {
    double gamma_si = units::default_gamma_si;  // reporting anchor only
    double g = 2.5;                  // atom-field coupling
    double delta_A = 20.0;           // omega_p - omega_A
    double delta_C = 0.0;            // omega_p - omega_C
    double kappa = 0.5;              // cavity field decay
    double eta = 1.0;                // pump amplitude
    double epsilon_recoil = units::rb87_epsilon;
    double ubar2 = 0.4;              // second moment of the emission pattern

    // Throws ConfigError naming the first offending field.
    void validate() const;

    // 1/gamma expressed in microseconds.
    double time_unit_us() const { return 1.0e6 / gamma_si; }
    double to_us(double t) const { return t * time_unit_us(); }
    double from_us(double t_us) const { return t_us / time_unit_us(); }
    // hbar gamma / k_B in microkelvin.
    double temperature_unit_uK() const { return units::hbar * gamma_si / units::k_boltzmann * 1.0e6; }
};

struct DerivedParams {
    double U0 = 0.0;      // dispersive shift per photon
    double Gamma0 = 0.0;  // absorptive rate per photon
};

// U0 = g^2 dA / (dA^2 + 1), Gamma0 = g^2 / (dA^2 + 1) in units of gamma.
DerivedParams derive(const SystemParams& params);

struct ModeValue {
    double f = 0.0;
    double df = 0.0;  // d f / d x~
};

// Scalar cavity mode function along the atomic axis. The standing wave
// cos(x~) is the only shape used by the experiments; phase shifts it.
class ModeFunction {
public:
    ModeFunction() = default;
    explicit ModeFunction(double phase) : phase_(phase) {}

    static ModeFunction standing_wave() { return ModeFunction{}; }

    ModeValue operator()(double x) const {
        const double a = x + phase_;
        return {std::cos(a), -std::sin(a)};
    }

    double phase() const { return phase_; }

private:
    double phase_ = 0.0;
};

inline ModeValue mode_eval(const ModeFunction& mode, double x) { return mode(x); }

}  // namespace cavsim
