#pragma once

#include "toma/env.hpp"
#include "toma/rng.hpp"
#include "toma/types.hpp"

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <tuple>
#include <vector>

namespace toma {

// One episode, stored once and shared by every transition that references it.
// Image observations make copies expensive; everything downstream holds
// (episode, index) pairs instead. The trajectory lives inside so graph
// ingestion can alias it without copying observation storage.
struct EpisodeRecord {
    Trajectory traj;
    Observation goal;  // goal pursued when acting

    int steps() const { return traj.steps(); }
    void check() const;
};

using EpisodePtr = std::shared_ptr<const EpisodeRecord>;

inline std::shared_ptr<const Trajectory> trajectory_of(const EpisodePtr& ep) {
    return {ep, &ep->traj};
}

struct Transition {
    EpisodePtr ep;
    int t = 0;
    int goal_index = -1;   // >= 0: relabeled to observation[goal_index]
    ObsPtr goal_override;  // vertex-memory entries carry the landmark here
    double reward = 0.0;
    bool done = false;

    const Observation& obs() const { return ep->traj.observations[t]; }
    const Observation& next_obs() const { return ep->traj.observations[t + 1]; }
    int action() const { return ep->traj.actions[t]; }
    const Observation& goal() const {
        if (goal_override) return *goal_override;
        return goal_index >= 0 ? ep->traj.observations[goal_index] : ep->goal;
    }
};

class HerBuffer {
public:
    explicit HerBuffer(int capacity);

    int capacity() const { return capacity_; }
    int size() const { return static_cast<int>(buf_.size()); }
    void push(Transition t);
    const Transition& sample(Rng& rng) const;

private:
    int capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> buf_;
};

// Pushes every transition of `ep` once with the episode goal and `k` more
// times relabeled to a future observation (index uniform in [t+1, T]).
// Rewards are 0/1 under `reached`, and done marks goal attainment.
void her_append_episode(HerBuffer& buffer, const EpisodePtr& ep, int k, const GoalTest& reached,
                        Rng& rng);

// Per-vertex ring buffers of (episode, t) transition references whose next
// state was labeled to the vertex. Replayed with the vertex landmark as the
// goal, reward 1, done true.
class VertexMemory {
public:
    explicit VertexMemory(int per_vertex_capacity);

    void add(int vertex, EpisodePtr ep, int t);
    int size(int vertex) const;
    long total_size() const;

    // Graph merges fold the absorbed vertex's entries into the survivor.
    void apply_merges(const std::map<int, int>& merged_into);

    // Uniform draw over the union of the listed vertices' entries.
    std::optional<std::tuple<int, EpisodePtr, int>> sample_union(const std::vector<int>& vertices,
                                                                Rng& rng) const;

private:
    int cap_;
    std::map<int, std::deque<std::pair<EpisodePtr, int>>> mem_;
};

}  // namespace toma
