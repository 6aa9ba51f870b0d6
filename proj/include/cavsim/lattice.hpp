// lattice.hpp - geometry of the optical potential wells of the standing wave.

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace cavsim {

// Potential U0 (|alpha|^2 - 1/2) cos^2(x). For U0 > 0 the wells sit at the
// nodes and the barriers at x = m pi; for U0 < 0 the roles swap and the
// barriers sit at x = pi/2 + m pi. Well m spans [boundary(m), boundary(m+1)).
class WellLattice {
public:
    static constexpr double period = std::numbers::pi;

    explicit WellLattice(double offset = 0.0) : offset_(offset) {}

    static WellLattice for_light_shift(double U0) {
        return WellLattice(U0 >= 0.0 ? 0.0 : 0.5 * std::numbers::pi);
    }

    long index(double x) const { return static_cast<long>(std::floor((x - offset_) / period)); }
    double boundary(long m) const { return offset_ + static_cast<double>(m) * period; }
    double center(long m) const { return boundary(m) + 0.5 * period; }
    double offset() const { return offset_; }

private:
    double offset_;
};

struct CrossingEvent {
    double t = 0.0;
    long from_well = 0;
    long to_well = 0;
};

class SamplingTooCoarse : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Streaming boundary-crossing detector over a sampled position series.
// Crossing times are linearly interpolated between the bracketing samples.
class CrossingDetector {
public:
    // Largest position change allowed between consecutive samples.
    static constexpr double max_jump = 0.25 * std::numbers::pi;

    explicit CrossingDetector(WellLattice lattice) : lattice_(lattice) {}

    // Feeds the next sample; returns the crossing if the well index changed.
    std::optional<CrossingEvent> feed(double t, double x);

    bool started() const { return started_; }
    long current_well() const { return well_; }

private:
    WellLattice lattice_;
    bool started_ = false;
    double t_prev_ = 0.0;
    double x_prev_ = 0.0;
    long well_ = 0;
};

}  // namespace cavsim
