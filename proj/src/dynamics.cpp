#include "cavsim/dynamics.hpp"

#include <algorithm>

namespace cavsim {

PhaseState drift(const PhaseState& state, const Model& model) {
    const auto& prm = model.params;
    const auto& der = model.derived;
    const ModeValue m = model.mode(state.x);
    const double f2 = m.f * m.f;
    const double grad_f2 = 2.0 * m.f * m.df;
    const double loss = prm.kappa + der.Gamma0 * f2;
    const double shift = der.U0 * f2 - prm.delta_C;
    return {
        prm.epsilon_recoil * state.p,
        -der.U0 * (state.field_intensity() - 0.5) * grad_f2,
        -prm.eta + shift * state.alpha_i - loss * state.alpha_r,
        -shift * state.alpha_r - loss * state.alpha_i,
    };
}

namespace {

DiffusionTriple diffusion_at(const PhaseState& state, const ModeValue& m, const Model& model) {
    const auto& der = model.derived;
    const double f2 = m.f * m.f;
    const double intensity = state.field_intensity();
    const double amplitude = std::sqrt(intensity);

    DiffusionTriple d;
    d.d1 = 0.5 * (model.params.kappa + der.Gamma0 * f2);
    d.d2 = 2.0 * der.Gamma0 * (intensity - 0.5) * (m.df * m.df + model.params.ubar2 * f2);
    if (amplitude >= frame_threshold) {
        d.d3 = der.Gamma0 * amplitude * m.f * m.df;
        d.cos_phi = state.alpha_r / amplitude;
        d.sin_phi = state.alpha_i / amplitude;
        d.frame_defined = true;
    }
    return d;
}

}  // namespace

DiffusionTriple diffusion(const PhaseState& state, const Model& model) {
    return diffusion_at(state, model.mode(state.x), model);
}

BlockFactor factor_phase_momentum(double d1, double d2, double d3) {
    BlockFactor out;
    if (d1 > 0.0 && d2 >= 0.0 && d1 * d2 >= d3 * d3) {
        out.l11 = std::sqrt(d1);
        out.l21 = d3 / out.l11;
        out.l22 = std::sqrt(std::max(0.0, d2 - out.l21 * out.l21));
        return out;
    }
    if (d1 == 0.0 && d3 == 0.0 && d2 >= 0.0) {
        out.l22 = std::sqrt(d2);
        return out;
    }

    // Indefinite block: keep only the non-negative eigenpair.
    const double mean = 0.5 * (d1 + d2);
    const double half_diff = 0.5 * (d1 - d2);
    const double radius = std::hypot(half_diff, d3);
    const double lambda_plus = mean + radius;
    const double lambda_minus = mean - radius;
    out.projected = true;
    out.min_eigenvalue = std::min(lambda_minus, 0.0);
    if (lambda_plus <= 0.0) return out;

    // Eigenvector of lambda_plus; pick the better-conditioned of two forms.
    double vx = d3, vy = lambda_plus - d1;
    if (std::abs(lambda_plus - d2) > std::abs(vy)) {
        vx = lambda_plus - d2;
        vy = d3;
    }
    const double norm = std::hypot(vx, vy);
    if (norm == 0.0) {
        // d3 == 0 and lambda_plus equals a diagonal entry.
        if (d1 >= d2) {
            out.l11 = std::sqrt(lambda_plus);
        } else {
            out.l22 = std::sqrt(lambda_plus);
        }
        return out;
    }
    vx /= norm;
    vy /= norm;
    // Rank-one projection lambda v v^T written as a lower-triangular factor.
    const double root = std::sqrt(lambda_plus);
    if (std::abs(vx) > 0.0) {
        const double sign = vx > 0.0 ? 1.0 : -1.0;
        out.l11 = root * vx * sign;
        out.l21 = root * vy * sign;
    } else {
        out.l22 = root * std::abs(vy);
    }
    return out;
}

NoiseIncrement sample_noise(const DiffusionTriple& d, double dt, Rng& rng,
                            StepDiagnostics& diagnostics) {
    const double xi_amp = rng.normal();
    const double xi_phase = rng.normal();
    const double xi_mom = rng.normal();

    double c = d.cos_phi, s = d.sin_phi, d3 = d.d3;
    if (!d.frame_defined) {
        c = 1.0;
        s = 0.0;
        d3 = 0.0;
        ++diagnostics.frame_undefined;
    }

    const BlockFactor block = factor_phase_momentum(d.d1, d.d2, d3);
    if (block.projected) {
        ++diagnostics.psd_violations;
        diagnostics.min_eigenvalue_seen =
            std::min(diagnostics.min_eigenvalue_seen, block.min_eigenvalue);
    }

    const double root_dt = std::sqrt(dt);
    RotatedIncrement rotated{std::sqrt(std::max(0.0, d.d1)) * root_dt * xi_amp,
                             block.l11 * root_dt * xi_phase};
    NoiseIncrement out;
    out.dP = (block.l21 * xi_phase + block.l22 * xi_mom) * root_dt;
    from_amplitude_phase(rotated, c, s, out.dA_r, out.dA_i);
    return out;
}

PhaseState step(const PhaseState& state, const Model& model, double dt, Rng& rng,
                StepDiagnostics& diagnostics, const StepMode& mode) {
    const auto& prm = model.params;
    const auto& der = model.derived;

    PhaseState next = state;
    next.x = state.x + prm.epsilon_recoil * state.p * dt;

    const ModeValue m = model.mode(next.x);
    const double f2 = m.f * m.f;
    const double intensity = state.field_intensity();
    next.p = state.p - der.U0 * (intensity - 0.5) * 2.0 * m.f * m.df * dt;
    if (!mode.frozen_field) {
        const double loss = prm.kappa + der.Gamma0 * f2;
        const double shift = der.U0 * f2 - prm.delta_C;
        next.alpha_r = state.alpha_r + (-prm.eta + shift * state.alpha_i - loss * state.alpha_r) * dt;
        next.alpha_i = state.alpha_i + (-shift * state.alpha_r - loss * state.alpha_i) * dt;
    }
    ++diagnostics.steps;

    if (mode.noise) {
        const PhaseState at{next.x, state.p, state.alpha_r, state.alpha_i};
        const NoiseIncrement noise = sample_noise(diffusion_at(at, m, model), dt, rng, diagnostics);
        next.p += noise.dP;
        if (!mode.frozen_field) {
            next.alpha_r += noise.dA_r;
            next.alpha_i += noise.dA_i;
        }
    }
    return next;
}

PhaseState pinned_field(double x, const Model& model) {
    const ModeValue m = model.mode(x);
    const double f2 = m.f * m.f;
    const double loss = model.params.kappa + model.derived.Gamma0 * f2;
    const double shift = model.derived.U0 * f2 - model.params.delta_C;
    const double denom = loss * loss + shift * shift;
    const double eta = model.params.eta;
    return {x, 0.0, -eta * loss / denom, eta * shift / denom};
}

double mechanical_energy(const PhaseState& state, const Model& model) {
    const double f = model.mode(state.x).f;
    return 0.5 * model.params.epsilon_recoil * state.p * state.p +
           model.derived.U0 * (state.field_intensity() - 0.5) * f * f;
}

}  // namespace cavsim
