#include "toma/planner.hpp"

#include <deque>
#include <stdexcept>

namespace toma {

int Plan::subgoal() const {
    if (!valid()) throw std::logic_error("Plan::subgoal on an invalid plan");
    return path[cursor];
}

std::map<int, int> hops_to_goal(const LandmarkGraph& g, int goal_vertex) {
    g.vertex(goal_vertex);  // existence check
    std::map<int, int> dist;
    std::deque<int> queue;
    dist[goal_vertex] = 0;
    queue.push_back(goal_vertex);
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        const int d = dist.at(v);
        for (int nb : g.neighbors(v))
            if (!dist.count(nb)) {
                dist[nb] = d + 1;
                queue.push_back(nb);
            }
    }
    return dist;
}

Plan make_plan(const LandmarkGraph& g, int start_vertex, int goal_vertex) {
    g.vertex(start_vertex);
    Plan plan;
    plan.goal_vertex = goal_vertex;
    const std::map<int, int> dist = hops_to_goal(g, goal_vertex);
    const auto at_start = dist.find(start_vertex);
    if (at_start == dist.end()) return plan;  // unreachable

    // Walk the hop gradient; neighbor sets iterate in ascending id order, so
    // among equal-hop successors the smallest id wins.
    std::vector<int> path{start_vertex};
    int current = start_vertex;
    int remaining = at_start->second;
    while (current != goal_vertex) {
        int next = -1;
        for (int nb : g.neighbors(current)) {
            const auto it = dist.find(nb);
            if (it != dist.end() && it->second == remaining - 1) {
                next = nb;
                break;
            }
        }
        if (next < 0) return plan;  // defensive; gradient cannot dead-end
        path.push_back(next);
        current = next;
        --remaining;
    }
    plan.path = std::move(path);
    return plan;
}

void advance_plan(Plan& plan, int localized_vertex) {
    if (!plan.valid()) return;
    for (std::size_t i = plan.cursor; i < plan.path.size(); ++i) {
        if (plan.path[i] == localized_vertex) {
            plan.cursor = std::min(i + 1, plan.path.size() - 1);
            return;
        }
    }
}

void advance_plan_attained(Plan& plan, const std::function<bool(int)>& attained) {
    if (!plan.valid()) return;
    // An intermediate subgoal the agent already attains is passed for
    // guidance purposes: conditioning on it gives the policy a constant
    // value function and no preferred action. The final goal is always held.
    while (plan.cursor + 1 < plan.path.size() && attained(plan.path[plan.cursor])) plan.cursor += 1;
}

}  // namespace toma
