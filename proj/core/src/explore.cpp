#include "toma/explore.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

namespace toma {

Variant variant_from_string(const std::string& name) {
    if (name == "toma") return Variant::Toma;
    if (name == "toma_vm") return Variant::TomaVm;
    if (name == "her") return Variant::HerBaseline;
    throw std::invalid_argument("unknown variant: " + name);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Toma: return "toma";
        case Variant::TomaVm: return "toma_vm";
        case Variant::HerBaseline: return "her";
    }
    throw std::invalid_argument("bad Variant");
}

GoalRule goal_rule_from_string(const std::string& name) {
    if (name == "least_visited") return GoalRule::LeastVisited;
    if (name == "furthest_vertex") return GoalRule::FurthestVertex;
    throw std::invalid_argument("unknown goal rule: " + name);
}

std::string to_string(GoalRule r) {
    switch (r) {
        case GoalRule::LeastVisited: return "least_visited";
        case GoalRule::FurthestVertex: return "furthest_vertex";
    }
    throw std::invalid_argument("bad GoalRule");
}

ExploreRun::ExploreRun(ExploreConfig cfg, std::unique_ptr<Env> env, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      env_(std::move(env)),
      seed_(seed),
      graph_(cfg_.graph),
      pool_(cfg_.embed.pool_capacity),
      her_(cfg_.q.her_capacity),
      vm_(cfg_.q.vm_capacity),
      reset_rng_(make_rng(seed, 1)),
      act_rng_(make_rng(seed, 2)),
      pair_rng_(make_rng(seed, 3)),
      embed_rng_(make_rng(seed, 4)),
      her_rng_(make_rng(seed, 5)),
      td_rng_(make_rng(seed, 6)) {
    if (!env_) throw std::invalid_argument("ExploreRun: null environment");
    Rng embed_init = make_rng(seed, 10);
    ensemble_ = std::make_unique<EmbeddingEnsemble>(cfg_.embed, env_->obs_dim(), embed_init);
    Rng q_init = make_rng(seed, 11);
    agent_ = std::make_unique<QAgent>(cfg_.q, env_->obs_dim(), env_->num_actions(), q_init);
}

GoalTest ExploreRun::goal_test() const {
    if (uses_graph()) {
        // Graph variants pursue landmarks, and a landmark is attained by
        // entering its unit ball in the learned metric — the same notion
        // labeling uses. Cell equality is the exact form of that on grid
        // sensors. The environment's own success predicate (the MountainCar
        // position threshold) judges only the env-fixed goal, which the
        // graph variants never pursue: as an attainment test for landmarks
        // it is satisfied by every state past the landmark, which saturates
        // the value function and leaves the policy unguided.
        if (env_->agent_cell().has_value())
            if (auto exact = env_->exact_goal_test()) return *exact;
        const EmbeddingEnsemble* ens = ensemble_.get();
        return [ens](const Observation& a, const Observation& g) {
            return ens->distance(a, g) < 1.0;
        };
    }
    if (auto exact = env_->exact_goal_test()) return *exact;
    // Graph-free variant on image observations: raw closeness stands in.
    return [](const Observation& a, const Observation& g) { return (a - g).norm() < 0.5; };
}

int ExploreRun::select_goal_vertex(const Observation& start_obs) {
    if (!graph_.initialized()) throw std::logic_error("select_goal_vertex: empty graph");
    if (cfg_.goal_rule == GoalRule::LeastVisited) {
        // A goal the start state already attains drives nothing: the value
        // function conditioned on it is constant, so the whole episode runs
        // on arbitrary actions. Prefer unattained vertices; the attained ones
        // only come back into play when they are all that exists.
        const GoalTest reached = goal_test();
        for (const bool require_unattained : {true, false}) {
            int best = -1;
            long best_visits = LONG_MAX;
            for (const auto& [id, v] : graph_.vertices()) {
                if (require_unattained && reached(start_obs, *v.landmark)) continue;
                if (v.visits < best_visits) {  // map ascends: ties keep the lowest id
                    best_visits = v.visits;
                    best = id;
                }
            }
            if (best >= 0) return best;
        }
    }
    // FurthestVertex: most graph hops from where the agent starts, reachable
    // vertices only.
    const VoteResult at = graph_.nearest(*ensemble_, start_obs);
    std::map<int, int> hops;
    std::deque<int> queue;
    hops[at.id] = 0;
    queue.push_back(at.id);
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int nb : graph_.neighbors(v))
            if (!hops.count(nb)) {
                hops[nb] = hops[v] + 1;
                queue.push_back(nb);
            }
    }
    int best = at.id, best_hops = -1;
    for (const auto& [id, h] : hops)
        if (h > best_hops) {  // strict: ties keep the lowest id
            best_hops = h;
            best = id;
        }
    return best;
}

std::vector<Transition> ExploreRun::compose_batch(const std::vector<int>& path_vertices, Rng& rng) {
    std::vector<Transition> batch;
    if (her_.size() == 0) return batch;
    const int B = cfg_.q.batch;
    batch.reserve(B);
    if (cfg_.variant == Variant::TomaVm && !path_vertices.empty()) {
        const int want = B / 2;
        for (int i = 0; i < want; ++i) {
            auto drawn = vm_.sample_union(path_vertices, rng);
            if (!drawn) break;
            auto& [v, ep, t] = *drawn;
            batch.push_back(Transition{std::move(ep), t, -1, graph_.vertex(v).landmark, 1.0, true});
        }
    }
    while (static_cast<int>(batch.size()) < B) batch.push_back(her_.sample(rng));
    return batch;
}

IterationResult ExploreRun::iterate() {
    const auto t_start = std::chrono::steady_clock::now();
    iteration_ += 1;
    IterationResult res;
    res.iteration = iteration_;
    const int T = cfg_.steps_per_iteration;

    Observation obs = env_->reset(reset_rng_);
    if (uses_graph()) {
        if (!graph_.initialized())
            graph_.initialize(*ensemble_, std::make_shared<Observation>(obs));
        else if (graph_.index().built_version() != ensemble_->params_version())
            graph_.rebuild_index(*ensemble_);
    }

    int goal_vertex = -1;
    Observation ultimate_goal;
    if (uses_graph()) {
        goal_vertex = select_goal_vertex(obs);
        ultimate_goal = *graph_.vertex(goal_vertex).landmark;
    } else {
        ultimate_goal = env_->goal_observation();
    }
    const GoalTest reached = goal_test();

    Trajectory traj;
    traj.observations.reserve(T + 1);
    traj.actions.reserve(T);
    traj.observations.push_back(obs);

    Plan plan;
    std::set<int> path_union;
    const auto replan = [&](const Observation& here) {
        const VoteResult loc = graph_.nearest(*ensemble_, here);
        plan = make_plan(graph_, loc.id, goal_vertex);
        advance_plan(plan, loc.id);
        for (int v : plan.path) path_union.insert(v);
    };
    if (uses_graph()) replan(obs);

    double iter_max = env_->reached_value();
    bool attained = false;
    const int tail_start = static_cast<int>(cfg_.random_tail * T);
    for (int t = 0; t < T; ++t) {
        int action;
        if (t >= tail_start) {
            action = uniform_int(act_rng_, 0, env_->num_actions() - 1);
        } else {
            ObsPtr sub;  // owns the landmark while acting
            const Observation* acting_goal = &ultimate_goal;
            if (uses_graph() && plan.valid()) {
                advance_plan_attained(
                    plan, [&](int v) { return reached(obs, *graph_.vertex(v).landmark); });
                sub = graph_.vertex(plan.subgoal()).landmark;
                acting_goal = sub.get();
            }
            action = agent_->act(obs, *acting_goal, act_rng_);
        }
        obs = env_->step(action);
        traj.actions.push_back(action);
        traj.observations.push_back(obs);
        iter_max = std::max(iter_max, env_->reached_value());
        if (!attained && reached(obs, ultimate_goal)) attained = true;
        if (uses_graph()) {
            const VoteResult loc = graph_.nearest(*ensemble_, obs);
            graph_.visit(loc.id);
            advance_plan(plan, loc.id);
            if ((t + 1) % cfg_.replan_period == 0) replan(obs);
        }
    }

    auto ep = std::make_shared<EpisodeRecord>();
    ep->traj = std::move(traj);
    ep->goal = ultimate_goal;
    ep->check();
    const std::shared_ptr<const Trajectory> shared_traj = trajectory_of(ep);

    std::map<int, int> merges;
    if (uses_graph()) {
        auto pairs = sample_pairs(shared_traj, cfg_.embed.radius, cfg_.embed.alpha,
                                  cfg_.embed.pairs_per_trajectory, pair_rng_);
        for (auto& p : pairs) pool_.push(std::move(p));
        double loss_sum = 0.0;
        for (int s = 0; s < cfg_.embed.steps_per_iteration; ++s)
            loss_sum += ensemble_->train_step(pool_, embed_rng_);
        res.embed_loss =
            cfg_.embed.steps_per_iteration > 0 ? loss_sum / cfg_.embed.steps_per_iteration : 0.0;

        graph_.rebuild_index(*ensemble_);
        IngestStats stats;
        const LabeledTrajectory labeled = graph_.ingest(*ensemble_, shared_traj, &stats, &merges);
        if (cfg_.variant == Variant::TomaVm) {
            vm_.apply_merges(merges);
            for (std::size_t k = 1; k < labeled.labels.size(); ++k)
                if (labeled.labels[k] != kNullLabel)
                    vm_.add(labeled.labels[k], ep, static_cast<int>(k) - 1);
        }
    }

    her_append_episode(her_, ep, cfg_.q.her_k, reached, her_rng_);

    std::vector<int> path_vertices;
    for (int v : path_union) {
        const auto it = merges.find(v);
        path_vertices.push_back(it == merges.end() ? v : it->second);
    }
    std::sort(path_vertices.begin(), path_vertices.end());
    path_vertices.erase(std::unique(path_vertices.begin(), path_vertices.end()),
                        path_vertices.end());

    double td_sum = 0.0;
    int td_done = 0;
    for (int u = 0; u < cfg_.td_updates_per_iteration; ++u) {
        const auto batch = compose_batch(path_vertices, td_rng_);
        if (batch.empty()) break;
        td_sum += agent_->td_update(batch);
        td_done += 1;
    }
    res.td_loss = td_done > 0 ? td_sum / td_done : 0.0;

    // Running maximum seeds from the first iteration: "distance reached"
    // starts at the reset state's value, not at zero (MountainCar positions
    // are negative at the start).
    max_reached_ = recent_maxima_.empty() ? iter_max : std::max(max_reached_, iter_max);
    recent_maxima_.push_back(iter_max);
    if (recent_maxima_.size() > 10) recent_maxima_.pop_front();
    res.iter_max_reached = iter_max;
    res.max_reached = max_reached_;
    res.mean_reached_10 = std::accumulate(recent_maxima_.begin(), recent_maxima_.end(), 0.0) /
                          static_cast<double>(recent_maxima_.size());
    res.vertices = uses_graph() ? graph_.vertex_count() : 0;
    res.edges = uses_graph() ? graph_.edge_count() : 0;
    res.goal_attained = attained;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

nlohmann::json ExploreRun::snapshot() const {
    nlohmann::json j;
    j["iteration"] = iteration_;
    j["seed"] = seed_;
    j["variant"] = to_string(cfg_.variant);
    j["max_reached"] = max_reached_;
    j["embedding"] = ensemble_->to_json();
    j["agent"] = agent_->to_json();
    if (uses_graph() && graph_.initialized()) {
        const bool fresh = graph_.index().built_version() == ensemble_->params_version();
        j["graph"] = graph_.to_json(fresh ? ensemble_.get() : nullptr);
    }
    return j;
}

std::vector<RunResult> run_experiment(
    const ExploreConfig& base, const std::vector<Variant>& variants,
    const std::vector<std::uint64_t>& seeds, const EnvFactory& make_env,
    const std::function<void(const ExploreRun&, const RunResult&)>& on_iteration) {
    if (!make_env) throw std::invalid_argument("run_experiment: missing env factory");
    std::vector<RunResult> results;
    for (const Variant variant : variants) {
        for (const std::uint64_t seed : seeds) {
            ExploreConfig cfg = base;
            cfg.variant = variant;
            ExploreRun run(cfg, make_env(seed), seed);
            RunResult rr;
            rr.variant = variant;
            rr.seed = seed;
            rr.iterations.reserve(cfg.iterations);
            for (int i = 0; i < cfg.iterations; ++i) {
                rr.iterations.push_back(run.iterate());
                if (on_iteration) on_iteration(run, rr);
            }
            results.push_back(std::move(rr));
        }
    }
    return results;
}

}  // namespace toma
