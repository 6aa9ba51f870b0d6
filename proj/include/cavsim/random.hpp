// random.hpp - per-trajectory random streams.

#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace cavsim {

using Engine = boost::random::mt19937_64;

// Seed for stream `index` of an ensemble. Two rounds of the splitmix64
// finalizer decorrelate neighbouring indices and neighbouring master seeds,
// so the value for trajectory i never depends on how many others exist.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

// Standard-normal (ziggurat) and uniform draws on a private engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    Engine& engine() { return engine_; }

private:
    Engine engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
    boost::random::uniform_01<double> uniform_;
};

}  // namespace cavsim
