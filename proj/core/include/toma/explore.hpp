#pragma once

#include "toma/agent.hpp"
#include "toma/embed.hpp"
#include "toma/env.hpp"
#include "toma/graph.hpp"
#include "toma/planner.hpp"
#include "toma/replay.hpp"

#include <deque>
#include <functional>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace toma {

enum class Variant { Toma, TomaVm, HerBaseline };
enum class GoalRule { LeastVisited, FurthestVertex };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);
GoalRule goal_rule_from_string(const std::string& name);
std::string to_string(GoalRule r);

struct ExploreConfig {
    Variant variant = Variant::TomaVm;
    GoalRule goal_rule = GoalRule::LeastVisited;
    int iterations = 300;
    int steps_per_iteration = 1000;
    double random_tail = 0.9;            // from this fraction on, act uniformly
    int td_updates_per_iteration = 25;
    int replan_period = kReplanPeriod;
    EmbedConfig embed;
    QConfig q;
    GraphConfig graph;
};

struct IterationResult {
    int iteration = 0;          // 1-based
    double iter_max_reached = 0.0;
    double max_reached = 0.0;   // running max over the run
    double mean_reached_10 = 0.0;  // mean of per-iteration maxima, trailing 10
    int vertices = 0;
    int edges = 0;
    double embed_loss = 0.0;
    double td_loss = 0.0;
    bool goal_attained = false;  // the iteration's pursued goal was reached
    double seconds = 0.0;
};

// One exploration run: per iteration the agent acts for a fixed number of
// steps toward a self-chosen goal (subgoal-guided through the landmark graph
// for the graph variants), then the embedding, graph, replay buffers, and
// Q-network are updated.
class ExploreRun {
public:
    ExploreRun(ExploreConfig cfg, std::unique_ptr<Env> env, std::uint64_t seed);

    const ExploreConfig& config() const { return cfg_; }
    int iteration() const { return iteration_; }
    double max_reached() const { return max_reached_; }
    bool uses_graph() const { return cfg_.variant != Variant::HerBaseline; }
    const LandmarkGraph& graph() const { return graph_; }
    const EmbeddingEnsemble& embedding() const { return *ensemble_; }
    const QAgent& agent() const { return *agent_; }

    IterationResult iterate();

    // Everything needed to inspect a run later: embedding, graph, agent.
    nlohmann::json snapshot() const;

private:
    int select_goal_vertex(const Observation& start_obs);
    GoalTest goal_test() const;
    std::vector<Transition> compose_batch(const std::vector<int>& path_vertices, Rng& rng);

    ExploreConfig cfg_;
    std::unique_ptr<Env> env_;
    std::uint64_t seed_;

    std::unique_ptr<EmbeddingEnsemble> ensemble_;
    std::unique_ptr<QAgent> agent_;
    LandmarkGraph graph_;
    PairPool pool_;
    HerBuffer her_;
    VertexMemory vm_;

    Rng reset_rng_, act_rng_, pair_rng_, embed_rng_, her_rng_, td_rng_;
    int iteration_ = 0;
    double max_reached_ = 0.0;
    std::deque<double> recent_maxima_;
};

// ---------------------------------------------------------------------------
// Multi-run driver

using EnvFactory = std::function<std::unique_ptr<Env>(std::uint64_t seed)>;

struct RunResult {
    Variant variant = Variant::TomaVm;
    std::uint64_t seed = 0;
    std::vector<IterationResult> iterations;
};

// Runs every (variant, seed) combination to completion, invoking
// `on_iteration` (when set) after each iteration — snapshots and progress
// logging hang off that hook.
std::vector<RunResult> run_experiment(
    const ExploreConfig& base, const std::vector<Variant>& variants,
    const std::vector<std::uint64_t>& seeds, const EnvFactory& make_env,
    const std::function<void(const ExploreRun&, const RunResult&)>& on_iteration = {});

}  // namespace toma
