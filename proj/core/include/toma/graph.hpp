#pragma once

#include "toma/embed.hpp"
#include "toma/types.hpp"

#include <deque>
#include <iosfwd>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <set>
#include <vector>

namespace toma {

inline constexpr int kNullLabel = -1;

struct Vertex {
    int id = -1;
    ObsPtr landmark;
    long visits = 0;
};

struct GraphConfig {
    double label_max = 1.5;       // embedding distance for direct labeling
    double cand_min = 2.0;        // candidate band for new landmarks
    double cand_max = 3.0;
    double merge_below = 1.5;     // vertex check: merge closer pairs
    double edge_cut_above = 3.0;  // edge check: cut longer edges
    int add_budget = 8;           // candidate pops per ingested trajectory
    int fifo_capacity = 1024;     // oldest candidates fall off beyond this
};

struct LabeledTrajectory {
    std::shared_ptr<const Trajectory> traj;
    std::vector<int> labels;  // one per state; kNullLabel where unassigned
};

struct IngestStats {
    int labeled = 0;
    int added = 0;
    int merged = 0;
    int edges_added = 0;
    int edges_cut = 0;
};

// Landmark graph over the embedding space. The update pipeline per
// trajectory: label states against the nearest landmark (vote of the
// ensemble), enqueue mid-range states as landmark candidates, pop a budget of
// candidates into new vertices, connect consecutive distinct labels, then
// merge vertices that drifted together and cut edges that drifted apart.
class LandmarkGraph {
public:
    explicit LandmarkGraph(GraphConfig cfg = {});

    const GraphConfig& config() const { return cfg_; }
    bool initialized() const { return !verts_.empty(); }
    int vertex_count() const { return static_cast<int>(verts_.size()); }
    const std::map<int, Vertex>& vertices() const { return verts_; }
    const Vertex& vertex(int id) const;
    const std::set<int>& neighbors(int id) const;
    bool has_edge(int a, int b) const;
    std::vector<std::pair<int, int>> edges() const;  // each once, low id first
    int edge_count() const;

    // Seeds the graph with the first observed state as vertex 0.
    void initialize(const EmbeddingEnsemble& ens, ObsPtr s0);

    // The index must be rebuilt after any embedding train step.
    void rebuild_index(const EmbeddingEnsemble& ens);
    const LandmarkIndex& index() const { return index_; }

    VoteResult nearest(const EmbeddingEnsemble& ens, const Observation& obs) const;

    // Visit accounting for goal selection: the exploration loop records the
    // vertex the agent is localized at on every step.
    void visit(int id) { verts_.at(id).visits += 1; }

    // Full per-trajectory update. Appends any merges (absorbed id ->
    // surviving id) to `merges` so callers can move per-vertex state.
    LabeledTrajectory ingest(const EmbeddingEnsemble& ens,
                             std::shared_ptr<const Trajectory> traj, IngestStats* stats = nullptr,
                             std::map<int, int>* merges = nullptr);

    // Vertex check: merges every group connected by pairwise landmark
    // distance < merge_below down to its lowest id. Returns absorbed id ->
    // survivor. A second run right after is always a no-op.
    std::map<int, int> check_vertices();
    // Edge check: cuts edges with landmark distance > edge_cut_above.
    int check_edges();

    // Embeddings are included per member when an ensemble with a fresh index
    // is supplied.
    nlohmann::json to_json(const EmbeddingEnsemble* ens = nullptr) const;
    static LandmarkGraph from_json(const nlohmann::json& j);
    void write_dot(std::ostream& out) const;

private:
    struct Candidate {
        ObsPtr obs;
        std::uint64_t tag = 0;  // which ingest call it came from
        int state_index = 0;
    };

    int add_vertex(const EmbeddingEnsemble& ens, ObsPtr landmark);
    void add_edge(int a, int b, IngestStats* stats);

    GraphConfig cfg_;
    std::map<int, Vertex> verts_;
    std::map<int, std::set<int>> adj_;
    int next_id_ = 0;
    std::uint64_t ingest_count_ = 0;
    std::deque<Candidate> fifo_;
    LandmarkIndex index_;
};

int connected_components(const LandmarkGraph& g);

}  // namespace toma
