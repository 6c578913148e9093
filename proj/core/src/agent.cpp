#include "toma/agent.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace toma {

QAgent::QAgent(QConfig cfg, int obs_dim, int num_actions, Rng& rng)
    : cfg_(std::move(cfg)), obs_dim_(obs_dim), actions_(num_actions) {
    if (num_actions < 2) throw std::invalid_argument("QAgent: need at least 2 actions");
    MlpSpec spec;
    spec.widths.push_back(2 * cfg_.input.out_dim(obs_dim));
    spec.widths.insert(spec.widths.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    spec.widths.push_back(num_actions);
    online_ = MlpParams::glorot(spec, rng);
    // Shrink the head so initial Q values are near-uniform: a full-scale
    // random head gives the greedy policy strong arbitrary action
    // preferences, which on MountainCar can amount to a ready-made bang-bang
    // controller before any learning has happened.
    online_.W.back() *= 0.01;
    target_ = online_;
    adam_ = AdamState::zeros(spec);
}

Eigen::VectorXd QAgent::input_of(const Observation& obs, const Observation& goal) const {
    const Eigen::VectorXd o = cfg_.input.apply(obs);
    const Eigen::VectorXd g = cfg_.input.apply(goal);
    Eigen::VectorXd x(o.size() + g.size());
    x << o, g;
    return x;
}

Eigen::VectorXd QAgent::q_values(const Observation& obs, const Observation& goal) const {
    return mlp_forward(online_, input_of(obs, goal));
}

int QAgent::greedy(const Observation& obs, const Observation& goal) const {
    Eigen::Index best = 0;
    q_values(obs, goal).maxCoeff(&best);  // first maximum: lowest action wins ties
    return static_cast<int>(best);
}

int QAgent::act(const Observation& obs, const Observation& goal, Rng& rng) const {
    if (uniform_real(rng, 0.0, 1.0) < cfg_.eps_greedy) return greedy(obs, goal);
    return uniform_int(rng, 0, actions_ - 1);
}

double QAgent::td_update(const std::vector<Transition>& batch) {
    if (batch.empty()) throw std::invalid_argument("td_update: empty batch");
    const int B = static_cast<int>(batch.size());
    const int in_dim = online_.spec.in_dim();
    Eigen::MatrixXd X(in_dim, B), Xn(in_dim, B);
    for (int k = 0; k < B; ++k) {
        const Transition& tr = batch[k];
        X.col(k) = input_of(tr.obs(), tr.goal());
        Xn.col(k) = input_of(tr.next_obs(), tr.goal());
    }

    const Eigen::MatrixXd Qn = mlp_forward_batch(target_, Xn);
    ForwardTrace trace;
    const Eigen::MatrixXd Q = mlp_forward_batch(online_, X, &trace);

    Eigen::MatrixXd up = Eigen::MatrixXd::Zero(actions_, B);
    double loss = 0.0;
    for (int k = 0; k < B; ++k) {
        const Transition& tr = batch[k];
        double y = tr.reward;
        if (!tr.done) y += cfg_.gamma * Qn.col(k).maxCoeff();
        y = std::clamp(y, -cfg_.target_clip, cfg_.target_clip);
        const double delta = Q(tr.action(), k) - y;
        loss += delta * delta;
        up(tr.action(), k) = 2.0 * delta / B;
    }
    const MlpGrads grads = mlp_backward_batch(online_, trace, up);
    adam_step(online_, adam_, grads, cfg_.adam);
    steps_ += 1;
    if (steps_ % cfg_.target_sync_every == 0) target_ = online_;
    return loss / B;
}

namespace {

nlohmann::json q_config_to_json(const QConfig& c) {
    return {{"hidden", c.hidden},
            {"input_image_side", c.input.image_side},
            {"input_pool_steps", c.input.pool_steps},
            {"adam_lr", c.adam.lr},
            {"adam_beta1", c.adam.beta1},
            {"adam_beta2", c.adam.beta2},
            {"adam_eps", c.adam.eps},
            {"gamma", c.gamma},
            {"eps_greedy", c.eps_greedy},
            {"batch", c.batch},
            {"target_sync_every", c.target_sync_every},
            {"target_clip", c.target_clip},
            {"her_k", c.her_k},
            {"her_capacity", c.her_capacity},
            {"vm_capacity", c.vm_capacity}};
}

QConfig q_config_from_json(const nlohmann::json& j) {
    QConfig c;
    c.hidden = j.at("hidden").get<std::vector<int>>();
    c.input.image_side = j.at("input_image_side").get<int>();
    c.input.pool_steps = j.at("input_pool_steps").get<int>();
    c.adam.lr = j.at("adam_lr").get<double>();
    c.adam.beta1 = j.at("adam_beta1").get<double>();
    c.adam.beta2 = j.at("adam_beta2").get<double>();
    c.adam.eps = j.at("adam_eps").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.eps_greedy = j.at("eps_greedy").get<double>();
    c.batch = j.at("batch").get<int>();
    c.target_sync_every = j.at("target_sync_every").get<int>();
    c.target_clip = j.at("target_clip").get<double>();
    c.her_k = j.at("her_k").get<int>();
    c.her_capacity = j.at("her_capacity").get<int>();
    c.vm_capacity = j.at("vm_capacity").get<int>();
    return c;
}

}  // namespace

nlohmann::json QAgent::to_json() const {
    nlohmann::json j;
    j["config"] = q_config_to_json(cfg_);
    j["obs_dim"] = obs_dim_;
    j["actions"] = actions_;
    j["steps"] = steps_;
    j["online"] = params_to_json(online_);
    j["target"] = params_to_json(target_);
    j["adam"] = adam_to_json(adam_);
    return j;
}

QAgent QAgent::from_json(const nlohmann::json& j) {
    QAgent a;
    a.cfg_ = q_config_from_json(j.at("config"));
    a.obs_dim_ = j.at("obs_dim").get<int>();
    a.actions_ = j.at("actions").get<int>();
    a.steps_ = j.at("steps").get<long>();
    a.online_ = params_from_json(j.at("online"));
    a.target_ = params_from_json(j.at("target"));
    a.adam_ = adam_from_json(j.at("adam"));
    return a;
}

}  // namespace toma
