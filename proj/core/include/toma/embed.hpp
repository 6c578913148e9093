#pragma once

#include "toma/kdtree.hpp"
#include "toma/nn.hpp"
#include "toma/types.hpp"

#include <map>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <vector>

namespace toma {

// ---------------------------------------------------------------------------
// Locality loss
//
// A state pair (i, j) from one trajectory has scaled temporal distance
// d = |j-i| / radius, which places it in one of three regions:
//   1: d in [0,1]   -> embedding distance x is pushed into [0,1]  (ReLU(x-1))
//   2: d in (1,3]   -> x pushed into [1,3]  (ReLU(-x+1) + ReLU(x-3))
//   3: d > 3        -> x pushed above 3     (ReLU(-x+3))
// and the total is  chi1*L1 + lambda1*chi2*L2 + lambda2*chi3*L3.

int pair_region(double gap, double radius);
double anti_bump(double x, double a, double b);  // ReLU(-x+a) + ReLU(x-b)
double pair_loss(double x, int region, double lambda1, double lambda2);
// Subgradient in x; ReLU contributes 0 at its kink.
double pair_loss_grad(double x, int region, double lambda1, double lambda2);

// ---------------------------------------------------------------------------
// Pair sampling and pool

struct StatePair {
    ObsPtr a, b;
    double gap = 0.0;  // |j - i| in environment steps
};

// Strata: near gaps are 1..4r, far gaps are > 4r. Each draw picks the near
// stratum with probability alpha (falling back to the other stratum when one
// is empty) and then a pair uniformly within the stratum, i.e. gap g gets
// weight (#states - g). Observations are aliased into `traj`, not copied.
std::vector<StatePair> sample_pairs(const std::shared_ptr<const Trajectory>& traj, double radius,
                                    double alpha, int count, Rng& rng);

class PairPool {
public:
    explicit PairPool(int capacity);

    int capacity() const { return capacity_; }
    int size() const { return static_cast<int>(buf_.size()); }
    void push(StatePair p);  // overwrites the oldest entry once full
    const StatePair& sample(Rng& rng) const;

private:
    int capacity_;
    std::size_t head_ = 0;
    std::vector<StatePair> buf_;
};

// ---------------------------------------------------------------------------
// Ensemble of embedding networks

struct EmbedConfig {
    int dim = 8;
    int members = 1;
    double radius = 20.0;
    double lambda1 = 0.5;
    double lambda2 = 0.2;
    double alpha = 0.5;
    int pool_capacity = 100000;
    int pairs_per_trajectory = 400;
    int batch = 64;
    int steps_per_iteration = 40;
    std::vector<int> hidden{64, 64};
    InputTransform input;
    AdamConfig adam{};  // lr 1e-4
};

class EmbeddingEnsemble {
public:
    EmbeddingEnsemble(EmbedConfig cfg, int obs_dim, Rng& rng);

    const EmbedConfig& config() const { return cfg_; }
    int members() const { return static_cast<int>(nets_.size()); }
    int obs_dim() const { return obs_dim_; }
    // Bumped by every train step; index structures check it for staleness.
    std::uint64_t params_version() const { return version_; }

    Eigen::VectorXd embed(int member, const Observation& obs) const;
    Eigen::MatrixXd embed_batch(int member, const Eigen::MatrixXd& obs_cols) const;
    double member_distance(int member, const Observation& a, const Observation& b) const;
    // Ensemble distance: mean over members of || phi_m(a) - phi_m(b) ||.
    double distance(const Observation& a, const Observation& b) const;

    // One Adam step per member, each on its own batch. Returns the mean pair
    // loss over everything touched; no-op returning 0 on an empty pool.
    double train_step(const PairPool& pool, Rng& rng);

    nlohmann::json to_json() const;
    static EmbeddingEnsemble from_json(const nlohmann::json& j);

    const MlpParams& member_params(int m) const { return nets_[m]; }

private:
    EmbeddingEnsemble() = default;

    EmbedConfig cfg_;
    int obs_dim_ = 0;
    std::uint64_t version_ = 0;
    std::vector<MlpParams> nets_;
    std::vector<AdamState> adam_;
};

// ---------------------------------------------------------------------------
// Nearest-landmark lookup with ensemble voting

struct VoteResult {
    int id = -1;           // -1 when the index is empty
    double distance = 0.0; // mean over members of distance to the winner
    int votes = 0;
};

// Per-member exact kd-trees over the embedded landmarks, with a linear-scan
// overflow list for landmarks added after the last build and tombstones for
// removals. Any query against parameters newer than the build throws.
class LandmarkIndex {
public:
    LandmarkIndex() = default;

    void build(const EmbeddingEnsemble& ens, const std::vector<std::pair<int, ObsPtr>>& landmarks);
    void add(const EmbeddingEnsemble& ens, int id, const ObsPtr& landmark);
    void remove(int id);
    bool contains(int id) const;
    int active_count() const;
    std::uint64_t built_version() const { return version_; }

    // Plurality vote over members' nearest landmarks. Ties go to the lower
    // mean distance, then the lower id. Distances are ensemble means.
    VoteResult vote_nearest(const EmbeddingEnsemble& ens, const Observation& obs) const;
    // Mean distance from obs to one specific landmark.
    double mean_distance_to(const EmbeddingEnsemble& ens, int id, const Observation& obs) const;
    // Mean distance between two stored landmarks, from the cached embeddings.
    double mean_pair_distance(int id_a, int id_b) const;

private:
    void check_version(const EmbeddingEnsemble& ens) const;
    int slot_of(int id) const;

    std::uint64_t version_ = 0;
    int members_ = 0;
    std::vector<int> ids_;                   // slot -> vertex id
    std::map<int, int> slot_;                // vertex id -> slot
    std::vector<char> alive_;
    int tree_count_ = 0;                     // slots covered by the kd-trees
    std::vector<KdTree> trees_;              // one per member
    std::vector<Eigen::MatrixXd> embedded_;  // per member, dim x slots
};

}  // namespace toma
