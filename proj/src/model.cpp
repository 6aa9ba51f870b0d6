#include "cavsim/model.hpp"

namespace cavsim {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid system parameter: " + what);
}

}  // namespace

void SystemParams::validate() const {
    require(std::isfinite(gamma_si) && gamma_si > 0.0, "gamma_si must be > 0");
    require(std::isfinite(kappa) && kappa > 0.0, "kappa must be > 0");
    require(std::isfinite(g) && g >= 0.0, "g must be >= 0");
    require(std::isfinite(eta) && eta >= 0.0, "eta must be >= 0");
    require(std::isfinite(epsilon_recoil) && epsilon_recoil > 0.0, "epsilon_recoil must be > 0");
    require(std::isfinite(ubar2) && ubar2 >= 0.0 && ubar2 <= 1.0, "ubar2 must lie in [0, 1]");
    require(std::isfinite(delta_A), "delta_A must be finite");
    require(std::isfinite(delta_C), "delta_C must be finite");
}

DerivedParams derive(const SystemParams& params) {
    // gamma is the unit of rates, so the denominator is delta_A^2 + 1 > 0.
    const double g2 = params.g * params.g;
    const double denom = params.delta_A * params.delta_A + 1.0;
    return {g2 * params.delta_A / denom, g2 / denom};
}

}  // namespace cavsim
