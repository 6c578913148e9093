#pragma once

#include "toma/graph.hpp"

#include <functional>
#include <map>
#include <vector>

namespace toma {

// A vertex path toward a goal vertex. The cursor marks the subgoal currently
// pursued; localization drives it forward.
struct Plan {
    int goal_vertex = -1;
    std::vector<int> path;  // start vertex .. goal vertex
    std::size_t cursor = 0;

    bool valid() const { return !path.empty(); }
    int subgoal() const;
};

// Hop counts to the goal vertex over unit edge weights; unreachable vertices
// are absent from the map.
std::map<int, int> hops_to_goal(const LandmarkGraph& g, int goal_vertex);

// Minimum-hop path from start to goal, ties broken toward the smaller next
// vertex id. Invalid (empty path) when the goal is unreachable.
Plan make_plan(const LandmarkGraph& g, int start_vertex, int goal_vertex);

// Seeing the agent localized at path[i] with i >= cursor moves the cursor to
// the next hop (capped at the goal).
void advance_plan(Plan& plan, int localized_vertex);

// Skips intermediate subgoals the current state already attains (the final
// goal is held). Directional attainment tests otherwise leave the agent
// conditioned on an already-satisfied goal, which guides nothing.
void advance_plan_attained(Plan& plan, const std::function<bool(int)>& attained);

inline constexpr int kReplanPeriod = 10;  // environment steps between replans

}  // namespace toma
