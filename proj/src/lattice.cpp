#include "cavsim/lattice.hpp"

#include <string>

namespace cavsim {

std::optional<CrossingEvent> CrossingDetector::feed(double t, double x) {
    if (!started_) {
        started_ = true;
        t_prev_ = t;
        x_prev_ = x;
        well_ = lattice_.index(x);
        return std::nullopt;
    }
    if (std::abs(x - x_prev_) >= max_jump) {
        throw SamplingTooCoarse("position moved " + std::to_string(x - x_prev_) +
                                " between samples at t=" + std::to_string(t));
    }
    std::optional<CrossingEvent> event;
    const long well = lattice_.index(x);
    if (well != well_) {
        // |dx| < pi/4 < period, so exactly one boundary lies in between.
        const double b = lattice_.boundary(well > well_ ? well : well_);
        const double frac = (b - x_prev_) / (x - x_prev_);
        event = CrossingEvent{t_prev_ + frac * (t - t_prev_), well_, well};
        well_ = well;
    }
    t_prev_ = t;
    x_prev_ = x;
    return event;
}

}  // namespace cavsim
