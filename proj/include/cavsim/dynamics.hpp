// dynamics.hpp - drift, correlated diffusion and one integration step of the
// coupled atom/cavity stochastic equations.
//
//   dx  = eps p dt
//   dp  = -U0 (|a|^2 - 1/2) d(f^2)/dx dt + dP
//   dar = [-eta + (U0 f^2 - dC) ai - (kappa + G0 f^2) ar] dt + dAr
//   dai = [     - (U0 f^2 - dC) ar - (kappa + G0 f^2) ai] dt + dAi
//
// The noise is specified in the frame (amplitude, phase, momentum) where the
// diffusion matrix is
//
//   | d1  0   0  |      d1 = (kappa + G0 f^2) / 2
//   | 0   d1  d3 |      d2 = 2 G0 (|a|^2 - 1/2) (f'^2 + ubar2 f^2)
//   | 0   d3  d2 |      d3 = G0 |a| f f'
//
// and (dAr, dAi) are recovered by rotating the amplitude/phase pair back onto
// the real/imaginary axes.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "cavsim/model.hpp"
#include "cavsim/random.hpp"

namespace cavsim {

struct PhaseState {
    double x = 0.0;
    double p = 0.0;
    double alpha_r = 0.0;
    double alpha_i = 0.0;

    double field_intensity() const { return alpha_r * alpha_r + alpha_i * alpha_i; }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(p) && std::isfinite(alpha_r) &&
               std::isfinite(alpha_i);
    }
    friend bool operator==(const PhaseState&, const PhaseState&) = default;
};

// Everything the kernels need, fixed for the lifetime of a run.
struct Model {
    SystemParams params;
    DerivedParams derived;
    ModeFunction mode;

    static Model from(const SystemParams& params, ModeFunction mode = {}) {
        params.validate();
        return {params, derive(params), mode};
    }
};

// Below this field amplitude the amplitude/phase frame is undefined and the
// identity frame is used instead.
inline constexpr double frame_threshold = 1e-9;

struct DiffusionTriple {
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;
    // Unit vector along alpha; (1, 0) when the frame is undefined.
    double cos_phi = 1.0;
    double sin_phi = 0.0;
    bool frame_defined = false;
};

struct StepDiagnostics {
    std::uint64_t steps = 0;
    std::uint64_t psd_violations = 0;
    std::uint64_t frame_undefined = 0;
    // Most negative eigenvalue of the (d1, d3; d3, d2) block; 0 if none seen.
    double min_eigenvalue_seen = 0.0;

    double violation_rate() const {
        return steps == 0 ? 0.0 : static_cast<double>(psd_violations) / static_cast<double>(steps);
    }
    void merge(const StepDiagnostics& other) {
        steps += other.steps;
        psd_violations += other.psd_violations;
        frame_undefined += other.frame_undefined;
        min_eigenvalue_seen = std::fmin(min_eigenvalue_seen, other.min_eigenvalue_seen);
    }
};

struct NoiseIncrement {
    double dA_r = 0.0;
    double dA_i = 0.0;
    double dP = 0.0;
};

// Amplitude/phase components of a real/imaginary field increment.
struct RotatedIncrement {
    double amplitude = 0.0;
    double phase = 0.0;
};

inline RotatedIncrement to_amplitude_phase(double dA_r, double dA_i, double c, double s) {
    return {c * dA_r + s * dA_i, -s * dA_r + c * dA_i};
}

inline void from_amplitude_phase(const RotatedIncrement& r, double c, double s, double& dA_r,
                                 double& dA_i) {
    dA_r = c * r.amplitude - s * r.phase;
    dA_i = s * r.amplitude + c * r.phase;
}

PhaseState drift(const PhaseState& state, const Model& model);

DiffusionTriple diffusion(const PhaseState& state, const Model& model);

// Lower-triangular factor of the 2x2 phase/momentum block after projection
// onto the PSD cone. `projected` is set when a negative eigenvalue was clamped.
struct BlockFactor {
    double l11 = 0.0;
    double l21 = 0.0;
    double l22 = 0.0;
    bool projected = false;
    double min_eigenvalue = 0.0;
};

BlockFactor factor_phase_momentum(double d1, double d2, double d3);

// Draws (dA_r, dA_i, dP) with covariance D dt. Requires dt > 0.
NoiseIncrement sample_noise(const DiffusionTriple& d, double dt, Rng& rng,
                            StepDiagnostics& diagnostics);

struct StepMode {
    bool noise = true;
    // Hold (alpha_r, alpha_i) fixed: atom moves in a static potential.
    bool frozen_field = false;
};

// One step of the scheme. The position is advanced first with the old
// momentum and every other drift and diffusion term is then evaluated at the
// new position (symplectic ordering of the mechanical pair; all noise terms
// are still evaluated before they act, so the scheme stays Ito-consistent).
PhaseState step(const PhaseState& state, const Model& model, double dt, Rng& rng,
                StepDiagnostics& diagnostics, const StepMode& mode = {});

// Steady state of the field drift for an atom held at x:
//   alpha = -eta (K + i delta) / (K^2 + delta^2),
//   K = kappa + G0 f^2, delta = U0 f^2 - dC.
PhaseState pinned_field(double x, const Model& model);

// eps p^2 / 2 + U0 (|alpha|^2 - 1/2) f^2.
double mechanical_energy(const PhaseState& state, const Model& model);

}  // namespace cavsim
