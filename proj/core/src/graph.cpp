#include "toma/graph.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace toma {

LandmarkGraph::LandmarkGraph(GraphConfig cfg) : cfg_(cfg) {
    if (cfg_.label_max <= 0 || cfg_.cand_min < cfg_.label_max || cfg_.cand_max < cfg_.cand_min ||
        cfg_.add_budget < 0 || cfg_.fifo_capacity <= 0)
        throw std::invalid_argument("GraphConfig: inconsistent thresholds");
}

const Vertex& LandmarkGraph::vertex(int id) const {
    const auto it = verts_.find(id);
    if (it == verts_.end())
        throw std::invalid_argument("LandmarkGraph: no vertex " + std::to_string(id));
    return it->second;
}

const std::set<int>& LandmarkGraph::neighbors(int id) const {
    const auto it = adj_.find(id);
    if (it == adj_.end())
        throw std::invalid_argument("LandmarkGraph: no vertex " + std::to_string(id));
    return it->second;
}

bool LandmarkGraph::has_edge(int a, int b) const {
    const auto it = adj_.find(a);
    return it != adj_.end() && it->second.count(b) > 0;
}

std::vector<std::pair<int, int>> LandmarkGraph::edges() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& [a, nbs] : adj_)
        for (int b : nbs)
            if (a < b) out.emplace_back(a, b);
    return out;
}

int LandmarkGraph::edge_count() const {
    int n = 0;
    for (const auto& [a, nbs] : adj_) n += static_cast<int>(nbs.size());
    return n / 2;
}

void LandmarkGraph::initialize(const EmbeddingEnsemble& ens, ObsPtr s0) {
    if (initialized()) throw std::logic_error("LandmarkGraph: already initialized");
    if (!s0) throw std::invalid_argument("LandmarkGraph: null initial state");
    verts_[0] = Vertex{0, std::move(s0), 1};
    adj_[0] = {};
    next_id_ = 1;
    rebuild_index(ens);
}

void LandmarkGraph::rebuild_index(const EmbeddingEnsemble& ens) {
    std::vector<std::pair<int, ObsPtr>> landmarks;
    landmarks.reserve(verts_.size());
    for (const auto& [id, v] : verts_) landmarks.emplace_back(id, v.landmark);
    index_.build(ens, landmarks);
}

VoteResult LandmarkGraph::nearest(const EmbeddingEnsemble& ens, const Observation& obs) const {
    return index_.vote_nearest(ens, obs);
}

int LandmarkGraph::add_vertex(const EmbeddingEnsemble& ens, ObsPtr landmark) {
    const int id = next_id_++;
    index_.add(ens, id, landmark);
    verts_[id] = Vertex{id, std::move(landmark), 1};
    adj_[id] = {};
    return id;
}

void LandmarkGraph::add_edge(int a, int b, IngestStats* stats) {
    if (a == b) return;
    if (adj_.at(a).insert(b).second) {
        adj_.at(b).insert(a);
        if (stats) stats->edges_added += 1;
    }
}

LabeledTrajectory LandmarkGraph::ingest(const EmbeddingEnsemble& ens,
                                        std::shared_ptr<const Trajectory> traj,
                                        IngestStats* stats, std::map<int, int>* merges) {
    if (!initialized()) throw std::logic_error("LandmarkGraph::ingest before initialize");
    if (!traj) throw std::invalid_argument("LandmarkGraph::ingest: null trajectory");
    traj->check();
    ingest_count_ += 1;
    const std::uint64_t tag = ingest_count_;

    LabeledTrajectory out;
    out.traj = traj;
    out.labels.assign(traj->states(), kNullLabel);

    // Label pass: assign close states, queue mid-range ones as candidates.
    for (int k = 0; k < traj->states(); ++k) {
        const Observation& obs = traj->observations[k];
        const VoteResult v = index_.vote_nearest(ens, obs);
        if (v.distance <= cfg_.label_max) {
            out.labels[k] = v.id;
        } else if (v.distance >= cfg_.cand_min && v.distance <= cfg_.cand_max) {
            if (static_cast<int>(fifo_.size()) >= cfg_.fifo_capacity) fifo_.pop_front();
            fifo_.push_back({ObsPtr(traj, &traj->observations[k]), tag, k});
        }
    }

    // Vertex addition: pop candidates, keep the ones whose distance still
    // falls in the band (earlier additions may have covered them), spend the
    // budget on new vertices. A candidate from this trajectory relabels its
    // own state.
    int budget = cfg_.add_budget;
    while (budget > 0 && !fifo_.empty()) {
        const Candidate c = fifo_.front();
        fifo_.pop_front();
        const VoteResult v = index_.vote_nearest(ens, *c.obs);
        if (v.distance < cfg_.cand_min || v.distance > cfg_.cand_max) continue;
        const int id = add_vertex(ens, c.obs);
        if (c.tag == tag) out.labels[c.state_index] = id;
        budget -= 1;
        if (stats) stats->added += 1;
    }

    // Edge addition: consecutive distinct labels, skipping unlabeled states.
    int prev = kNullLabel;
    for (int label : out.labels) {
        if (label == kNullLabel) continue;
        if (prev != kNullLabel && label != prev) add_edge(prev, label, stats);
        prev = label;
    }

    // Checks. Labels and the caller's per-vertex state follow the merges.
    const std::map<int, int> merged = check_vertices();
    for (int& label : out.labels)
        if (label != kNullLabel) {
            const auto it = merged.find(label);
            if (it != merged.end()) label = it->second;
        }
    if (merges) merges->insert(merged.begin(), merged.end());
    if (stats) {
        stats->merged += static_cast<int>(merged.size());
        stats->edges_cut += check_edges();
        for (int label : out.labels)
            if (label != kNullLabel) stats->labeled += 1;
    } else {
        check_edges();
    }
    return out;
}

std::map<int, int> LandmarkGraph::check_vertices() {
    const int n = vertex_count();
    std::vector<int> ids;
    ids.reserve(n);
    for (const auto& [id, v] : verts_) ids.push_back(id);

    // Union-find over the "closer than merge_below" relation; groups merge as
    // a whole, so survivors are pairwise >= merge_below apart afterwards.
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (index_.mean_pair_distance(ids[i], ids[j]) < cfg_.merge_below) {
                const int ri = find(i), rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }

    std::map<int, int> result;  // absorbed id -> surviving id
    for (int i = 0; i < n; ++i) {
        const int rep = ids[find(i)];  // lowest id: ids ascend and unions keep the smaller root
        if (rep != ids[i]) result[ids[i]] = rep;
    }
    if (result.empty()) return result;

    // Rewire edges through the merge map, then drop absorbed vertices.
    const auto resolve = [&](int id) {
        const auto it = result.find(id);
        return it == result.end() ? id : it->second;
    };
    std::map<int, std::set<int>> new_adj;
    for (const auto& [id, v] : verts_) new_adj[resolve(id)];
    for (const auto& [a, b] : edges()) {
        const int ra = resolve(a), rb = resolve(b);
        if (ra != rb) {
            new_adj[ra].insert(rb);
            new_adj[rb].insert(ra);
        }
    }
    adj_ = std::move(new_adj);
    for (const auto& [old_id, rep] : result) {
        verts_.at(rep).visits += verts_.at(old_id).visits;
        verts_.erase(old_id);
        index_.remove(old_id);
    }
    return result;
}

int LandmarkGraph::check_edges() {
    int cut = 0;
    for (const auto& [a, b] : edges()) {
        if (index_.mean_pair_distance(a, b) > cfg_.edge_cut_above) {
            adj_.at(a).erase(b);
            adj_.at(b).erase(a);
            cut += 1;
        }
    }
    return cut;
}

nlohmann::json LandmarkGraph::to_json(const EmbeddingEnsemble* ens) const {
    nlohmann::json j;
    j["next_id"] = next_id_;
    j["config"] = {{"label_max", cfg_.label_max},         {"cand_min", cfg_.cand_min},
                   {"cand_max", cfg_.cand_max},           {"merge_below", cfg_.merge_below},
                   {"edge_cut_above", cfg_.edge_cut_above}, {"add_budget", cfg_.add_budget},
                   {"fifo_capacity", cfg_.fifo_capacity}};
    j["vertices"] = nlohmann::json::array();
    for (const auto& [id, v] : verts_) {
        nlohmann::json jv;
        jv["id"] = id;
        jv["visits"] = v.visits;
        jv["landmark"] = std::vector<double>(v.landmark->data(),
                                             v.landmark->data() + v.landmark->size());
        if (ens) {
            nlohmann::json embeds = nlohmann::json::array();
            for (int m = 0; m < ens->members(); ++m) {
                const Eigen::VectorXd e = ens->embed(m, *v.landmark);
                embeds.push_back(std::vector<double>(e.data(), e.data() + e.size()));
            }
            jv["embed"] = std::move(embeds);
        }
        j["vertices"].push_back(std::move(jv));
    }
    j["edges"] = nlohmann::json::array();
    for (const auto& [a, b] : edges()) j["edges"].push_back({a, b});
    return j;
}

LandmarkGraph LandmarkGraph::from_json(const nlohmann::json& j) {
    GraphConfig cfg;
    const auto& jc = j.at("config");
    cfg.label_max = jc.at("label_max").get<double>();
    cfg.cand_min = jc.at("cand_min").get<double>();
    cfg.cand_max = jc.at("cand_max").get<double>();
    cfg.merge_below = jc.at("merge_below").get<double>();
    cfg.edge_cut_above = jc.at("edge_cut_above").get<double>();
    cfg.add_budget = jc.at("add_budget").get<int>();
    cfg.fifo_capacity = jc.at("fifo_capacity").get<int>();

    LandmarkGraph g(cfg);
    g.next_id_ = j.at("next_id").get<int>();
    for (const auto& jv : j.at("vertices")) {
        Vertex v;
        v.id = jv.at("id").get<int>();
        v.visits = jv.at("visits").get<long>();
        const auto data = jv.at("landmark").get<std::vector<double>>();
        auto obs = std::make_shared<Observation>(
            Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size())));
        v.landmark = std::move(obs);
        g.adj_[v.id] = {};
        g.verts_[v.id] = std::move(v);
    }
    for (const auto& je : j.at("edges")) {
        const int a = je.at(0).get<int>(), b = je.at(1).get<int>();
        if (!g.verts_.count(a) || !g.verts_.count(b))
            throw std::runtime_error("graph json: edge references missing vertex");
        g.adj_[a].insert(b);
        g.adj_[b].insert(a);
    }
    return g;
}

int connected_components(const LandmarkGraph& g) {
    std::set<int> seen;
    int components = 0;
    for (const auto& [start, v] : g.vertices()) {
        if (seen.count(start)) continue;
        components += 1;
        std::deque<int> queue{start};
        seen.insert(start);
        while (!queue.empty()) {
            const int cur = queue.front();
            queue.pop_front();
            for (int nb : g.neighbors(cur))
                if (seen.insert(nb).second) queue.push_back(nb);
        }
    }
    return components;
}

void LandmarkGraph::write_dot(std::ostream& out) const {
    out << "graph landmarks {\n  node [shape=circle];\n";
    for (const auto& [id, v] : verts_)
        out << "  v" << id << " [label=\"" << id << "\\n" << v.visits << "\"];\n";
    for (const auto& [a, b] : edges()) out << "  v" << a << " -- v" << b << ";\n";
    out << "}\n";
}

}  // namespace toma
