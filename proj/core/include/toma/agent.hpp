#pragma once

#include "toma/nn.hpp"
#include "toma/replay.hpp"
#include "toma/rng.hpp"
#include "toma/types.hpp"

#include <nlohmann/json_fwd.hpp>
#include <vector>

namespace toma {

struct QConfig {
    std::vector<int> hidden{64, 64};
    InputTransform input;          // applied to observation and goal alike
    AdamConfig adam{3e-4, 0.9, 0.999, 1e-8};
    double gamma = 0.95;
    double eps_greedy = 0.9;       // probability of taking the greedy action
    int batch = 256;
    int target_sync_every = 500;   // td steps between target-network copies
    double target_clip = 20.0;     // |y| bound on td targets
    int her_k = 4;                 // future relabels per transition
    int her_capacity = 100000;
    int vm_capacity = 1000;        // vertex-memory entries per vertex
};

// Goal-conditioned Q-network over concat(obs, goal), trained by 1-step td
// with a periodically synced target copy.
class QAgent {
public:
    QAgent(QConfig cfg, int obs_dim, int num_actions, Rng& rng);

    const QConfig& config() const { return cfg_; }
    int num_actions() const { return actions_; }
    long td_steps() const { return steps_; }

    Eigen::VectorXd q_values(const Observation& obs, const Observation& goal) const;
    int greedy(const Observation& obs, const Observation& goal) const;
    int act(const Observation& obs, const Observation& goal, Rng& rng) const;

    // One td step over the batch; returns the mean squared td error.
    double td_update(const std::vector<Transition>& batch);

    nlohmann::json to_json() const;
    static QAgent from_json(const nlohmann::json& j);

    const MlpParams& online_params() const { return online_; }

private:
    QAgent() = default;
    Eigen::VectorXd input_of(const Observation& obs, const Observation& goal) const;

    QConfig cfg_;
    int obs_dim_ = 0;
    int actions_ = 0;
    MlpParams online_, target_;
    AdamState adam_;
    long steps_ = 0;
};

}  // namespace toma
