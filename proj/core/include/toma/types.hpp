#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

namespace toma {

// All observations are fixed-length real vectors with entries in [-1, 1].
using Observation = Eigen::VectorXd;
using ObsPtr = std::shared_ptr<const Observation>;

struct Cell {
    int x = 0;
    int y = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

// One episode: N steps give N+1 observations and N actions. Step t is the
// triple (observations[t], actions[t], observations[t+1]).
struct Trajectory {
    std::vector<Observation> observations;
    std::vector<int> actions;

    int steps() const { return static_cast<int>(actions.size()); }
    int states() const { return static_cast<int>(observations.size()); }

    void check() const {
        if (observations.size() != actions.size() + 1)
            throw std::invalid_argument("trajectory: need exactly one more observation than actions");
    }
};

}  // namespace toma
