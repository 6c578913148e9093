#include "toma/embed.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace toma {

// ---------------------------------------------------------------------------
// Loss pieces

int pair_region(double gap, double radius) {
    if (gap < 0.0 || radius <= 0.0) throw std::invalid_argument("pair_region: bad gap/radius");
    const double d = gap / radius;
    if (d <= 1.0) return 1;
    if (d <= 3.0) return 2;
    return 3;
}

double anti_bump(double x, double a, double b) {
    return std::max(0.0, -x + a) + std::max(0.0, x - b);
}

double pair_loss(double x, int region, double lambda1, double lambda2) {
    switch (region) {
        case 1: return std::max(0.0, x - 1.0);
        case 2: return lambda1 * anti_bump(x, 1.0, 3.0);
        case 3: return lambda2 * std::max(0.0, -x + 3.0);
        default: throw std::invalid_argument("pair_loss: bad region");
    }
}

double pair_loss_grad(double x, int region, double lambda1, double lambda2) {
    switch (region) {
        case 1: return x > 1.0 ? 1.0 : 0.0;
        case 2: return lambda1 * ((x < 1.0 ? -1.0 : 0.0) + (x > 3.0 ? 1.0 : 0.0));
        case 3: return x < 3.0 ? -lambda2 : 0.0;
        default: throw std::invalid_argument("pair_loss_grad: bad region");
    }
}

// ---------------------------------------------------------------------------
// Pair sampling

namespace {

// Total pair count and gap pick for gaps in [lo, hi], where gap g contributes
// (states - g) pairs.
long stratum_total(int states, int lo, int hi) {
    long total = 0;
    for (int g = lo; g <= hi; ++g) total += states - g;
    return total;
}

int pick_gap(int states, int lo, int hi, long u) {
    for (int g = lo; g <= hi; ++g) {
        const long w = states - g;
        if (u < w) return g;
        u -= w;
    }
    throw std::logic_error("pick_gap: index out of range");
}

}  // namespace

std::vector<StatePair> sample_pairs(const std::shared_ptr<const Trajectory>& traj, double radius,
                                    double alpha, int count, Rng& rng) {
    if (!traj) throw std::invalid_argument("sample_pairs: null trajectory");
    traj->check();
    const int states = traj->states();
    const int max_gap = states - 1;
    std::vector<StatePair> out;
    if (max_gap < 1 || count <= 0) return out;

    const int near_hi = std::min(max_gap, static_cast<int>(std::floor(4.0 * radius)));
    const long near_total = near_hi >= 1 ? stratum_total(states, 1, near_hi) : 0;
    const long far_total = near_hi < max_gap ? stratum_total(states, near_hi + 1, max_gap) : 0;

    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        bool near = uniform_real(rng, 0.0, 1.0) < alpha;
        if (near && near_total == 0) near = false;
        if (!near && far_total == 0) near = true;
        const int lo = near ? 1 : near_hi + 1;
        const int hi = near ? near_hi : max_gap;
        const long total = near ? near_total : far_total;
        const int g = pick_gap(states, lo, hi, uniform_int<long>(rng, 0, total - 1));
        const int i = uniform_int(rng, 0, states - 1 - g);
        out.push_back({ObsPtr(traj, &traj->observations[i]),
                       ObsPtr(traj, &traj->observations[i + g]), static_cast<double>(g)});
    }
    return out;
}

PairPool::PairPool(int capacity) : capacity_(capacity) {
    if (capacity <= 0) throw std::invalid_argument("PairPool: capacity must be positive");
    buf_.reserve(capacity);
}

void PairPool::push(StatePair p) {
    if (size() < capacity_) {
        buf_.push_back(std::move(p));
    } else {
        buf_[head_] = std::move(p);
        head_ = (head_ + 1) % capacity_;
    }
}

const StatePair& PairPool::sample(Rng& rng) const {
    if (buf_.empty()) throw std::out_of_range("PairPool::sample: empty pool");
    return buf_[uniform_int<std::size_t>(rng, 0, buf_.size() - 1)];
}

// ---------------------------------------------------------------------------
// EmbeddingEnsemble

EmbeddingEnsemble::EmbeddingEnsemble(EmbedConfig cfg, int obs_dim, Rng& rng)
    : cfg_(std::move(cfg)), obs_dim_(obs_dim) {
    if (cfg_.members <= 0) throw std::invalid_argument("EmbeddingEnsemble: members must be >= 1");
    MlpSpec spec;
    spec.widths.push_back(cfg_.input.out_dim(obs_dim));
    spec.widths.insert(spec.widths.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    spec.widths.push_back(cfg_.dim);
    for (int m = 0; m < cfg_.members; ++m) {
        nets_.push_back(MlpParams::glorot(spec, rng));
        adam_.push_back(AdamState::zeros(spec));
    }
}

Eigen::VectorXd EmbeddingEnsemble::embed(int member, const Observation& obs) const {
    return mlp_forward(nets_.at(member), cfg_.input.apply(obs));
}

Eigen::MatrixXd EmbeddingEnsemble::embed_batch(int member, const Eigen::MatrixXd& obs_cols) const {
    return mlp_forward_batch(nets_.at(member), cfg_.input.apply_batch(obs_cols));
}

double EmbeddingEnsemble::member_distance(int member, const Observation& a,
                                          const Observation& b) const {
    return (embed(member, a) - embed(member, b)).norm();
}

double EmbeddingEnsemble::distance(const Observation& a, const Observation& b) const {
    double sum = 0.0;
    for (int m = 0; m < members(); ++m) sum += member_distance(m, a, b);
    return sum / members();
}

double EmbeddingEnsemble::train_step(const PairPool& pool, Rng& rng) {
    if (pool.size() == 0) return 0.0;
    const int B = cfg_.batch;
    double total_loss = 0.0;
    for (size_t m = 0; m < nets_.size(); ++m) {
        Eigen::MatrixXd Xa(obs_dim_, B), Xb(obs_dim_, B);
        std::vector<int> regions(B);
        for (int k = 0; k < B; ++k) {
            const StatePair& p = pool.sample(rng);
            Xa.col(k) = *p.a;
            Xb.col(k) = *p.b;
            regions[k] = pair_region(p.gap, cfg_.radius);
        }
        ForwardTrace ta, tb;
        const Eigen::MatrixXd Ua = mlp_forward_batch(nets_[m], cfg_.input.apply_batch(Xa), &ta);
        const Eigen::MatrixXd Ub = mlp_forward_batch(nets_[m], cfg_.input.apply_batch(Xb), &tb);

        Eigen::MatrixXd up(cfg_.dim, B);
        for (int k = 0; k < B; ++k) {
            const Eigen::VectorXd diff = Ua.col(k) - Ub.col(k);
            const double x = diff.norm();
            total_loss += pair_loss(x, regions[k], cfg_.lambda1, cfg_.lambda2);
            const double g = pair_loss_grad(x, regions[k], cfg_.lambda1, cfg_.lambda2);
            up.col(k) = (x > 1e-12) ? Eigen::VectorXd((g / (B * x)) * diff)
                                    : Eigen::VectorXd::Zero(cfg_.dim);
        }
        MlpGrads grads = mlp_backward_batch(nets_[m], ta, up);
        grads.accumulate(mlp_backward_batch(nets_[m], tb, -up));
        adam_step(nets_[m], adam_[m], grads, cfg_.adam);
    }
    version_ += 1;
    return total_loss / (static_cast<double>(nets_.size()) * B);
}

namespace {

nlohmann::json embed_config_to_json(const EmbedConfig& c) {
    return {{"dim", c.dim},
            {"members", c.members},
            {"radius", c.radius},
            {"lambda1", c.lambda1},
            {"lambda2", c.lambda2},
            {"alpha", c.alpha},
            {"pool_capacity", c.pool_capacity},
            {"pairs_per_trajectory", c.pairs_per_trajectory},
            {"batch", c.batch},
            {"steps_per_iteration", c.steps_per_iteration},
            {"hidden", c.hidden},
            {"input_image_side", c.input.image_side},
            {"input_pool_steps", c.input.pool_steps},
            {"adam_lr", c.adam.lr},
            {"adam_beta1", c.adam.beta1},
            {"adam_beta2", c.adam.beta2},
            {"adam_eps", c.adam.eps}};
}

EmbedConfig embed_config_from_json(const nlohmann::json& j) {
    EmbedConfig c;
    c.dim = j.at("dim").get<int>();
    c.members = j.at("members").get<int>();
    c.radius = j.at("radius").get<double>();
    c.lambda1 = j.at("lambda1").get<double>();
    c.lambda2 = j.at("lambda2").get<double>();
    c.alpha = j.at("alpha").get<double>();
    c.pool_capacity = j.at("pool_capacity").get<int>();
    c.pairs_per_trajectory = j.at("pairs_per_trajectory").get<int>();
    c.batch = j.at("batch").get<int>();
    c.steps_per_iteration = j.at("steps_per_iteration").get<int>();
    c.hidden = j.at("hidden").get<std::vector<int>>();
    c.input.image_side = j.at("input_image_side").get<int>();
    c.input.pool_steps = j.at("input_pool_steps").get<int>();
    c.adam.lr = j.at("adam_lr").get<double>();
    c.adam.beta1 = j.at("adam_beta1").get<double>();
    c.adam.beta2 = j.at("adam_beta2").get<double>();
    c.adam.eps = j.at("adam_eps").get<double>();
    return c;
}

}  // namespace

nlohmann::json EmbeddingEnsemble::to_json() const {
    nlohmann::json j;
    j["config"] = embed_config_to_json(cfg_);
    j["obs_dim"] = obs_dim_;
    j["version"] = version_;
    j["members"] = nlohmann::json::array();
    j["adam"] = nlohmann::json::array();
    for (size_t m = 0; m < nets_.size(); ++m) {
        j["members"].push_back(params_to_json(nets_[m]));
        j["adam"].push_back(adam_to_json(adam_[m]));
    }
    return j;
}

EmbeddingEnsemble EmbeddingEnsemble::from_json(const nlohmann::json& j) {
    EmbeddingEnsemble e;
    e.cfg_ = embed_config_from_json(j.at("config"));
    e.obs_dim_ = j.at("obs_dim").get<int>();
    e.version_ = j.at("version").get<std::uint64_t>();
    for (const auto& p : j.at("members")) e.nets_.push_back(params_from_json(p));
    for (const auto& a : j.at("adam")) e.adam_.push_back(adam_from_json(a));
    if (e.nets_.size() != static_cast<size_t>(e.cfg_.members) || e.adam_.size() != e.nets_.size())
        throw std::runtime_error("embedding checkpoint: member count mismatch");
    return e;
}

// ---------------------------------------------------------------------------
// LandmarkIndex

void LandmarkIndex::check_version(const EmbeddingEnsemble& ens) const {
    if (ens.params_version() != version_)
        throw std::runtime_error("LandmarkIndex: stale index (params version " +
                                 std::to_string(ens.params_version()) + " vs built " +
                                 std::to_string(version_) + "); rebuild first");
}

int LandmarkIndex::slot_of(int id) const {
    const auto it = slot_.find(id);
    if (it == slot_.end())
        throw std::invalid_argument("LandmarkIndex: unknown id " + std::to_string(id));
    return it->second;
}

bool LandmarkIndex::contains(int id) const {
    const auto it = slot_.find(id);
    return it != slot_.end() && alive_[it->second];
}

int LandmarkIndex::active_count() const {
    return static_cast<int>(std::count(alive_.begin(), alive_.end(), char(1)));
}

void LandmarkIndex::build(const EmbeddingEnsemble& ens,
                          const std::vector<std::pair<int, ObsPtr>>& landmarks) {
    version_ = ens.params_version();
    members_ = ens.members();
    auto sorted = landmarks;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    const int n = static_cast<int>(sorted.size());
    ids_.clear();
    slot_.clear();
    alive_.assign(n, 1);
    trees_.clear();
    embedded_.clear();
    tree_count_ = n;
    for (int i = 0; i < n; ++i) {
        ids_.push_back(sorted[i].first);
        slot_[sorted[i].first] = i;
    }
    for (int m = 0; m < members_; ++m) {
        Eigen::MatrixXd pts(ens.config().dim, n);
        for (int i = 0; i < n; ++i) pts.col(i) = ens.embed(m, *sorted[i].second);
        embedded_.push_back(pts);
        trees_.emplace_back(pts);
    }
}

void LandmarkIndex::add(const EmbeddingEnsemble& ens, int id, const ObsPtr& landmark) {
    check_version(ens);
    if (!ids_.empty() && id <= ids_.back())
        throw std::invalid_argument("LandmarkIndex::add: ids must increase");
    ids_.push_back(id);
    slot_[id] = static_cast<int>(ids_.size()) - 1;
    alive_.push_back(1);
    for (int m = 0; m < members_; ++m) {
        embedded_[m].conservativeResize(Eigen::NoChange, embedded_[m].cols() + 1);
        embedded_[m].col(embedded_[m].cols() - 1) = ens.embed(m, *landmark);
    }
}

void LandmarkIndex::remove(int id) {
    alive_[slot_of(id)] = 0;
}

double LandmarkIndex::mean_distance_to(const EmbeddingEnsemble& ens, int id,
                                       const Observation& obs) const {
    check_version(ens);
    const int s = slot_of(id);
    double sum = 0.0;
    for (int m = 0; m < members_; ++m) sum += (ens.embed(m, obs) - embedded_[m].col(s)).norm();
    return sum / members_;
}

double LandmarkIndex::mean_pair_distance(int id_a, int id_b) const {
    const int sa = slot_of(id_a), sb = slot_of(id_b);
    double sum = 0.0;
    for (int m = 0; m < members_; ++m) sum += (embedded_[m].col(sa) - embedded_[m].col(sb)).norm();
    return sum / members_;
}

VoteResult LandmarkIndex::vote_nearest(const EmbeddingEnsemble& ens, const Observation& obs) const {
    check_version(ens);
    VoteResult out;
    if (active_count() == 0) return out;

    std::vector<char> tree_alive(alive_.begin(), alive_.begin() + tree_count_);
    std::vector<Eigen::VectorXd> q(members_);
    std::map<int, int> votes;
    for (int m = 0; m < members_; ++m) {
        q[m] = ens.embed(m, obs);
        int best = -1;
        double best_d = 0.0;
        if (tree_count_ > 0) {
            const KdTree::Hit hit = trees_[m].nearest(q[m], &tree_alive);
            if (hit.index >= 0) {
                best = hit.index;
                best_d = hit.distance;
            }
        }
        for (int s = tree_count_; s < static_cast<int>(ids_.size()); ++s) {
            if (!alive_[s]) continue;
            const double d = (embedded_[m].col(s) - q[m]).norm();
            if (best < 0 || d < best_d || (d == best_d && s < best)) {
                best = s;
                best_d = d;
            }
        }
        votes[ids_[best]] += 1;
    }

    // Plurality; ties by mean distance, then by id. votes is id-ordered, so a
    // strict > keeps the lowest id among equal counts until distances decide.
    int top_count = 0;
    for (const auto& [id, n] : votes) top_count = std::max(top_count, n);
    int winner = -1;
    double winner_dist = 0.0;
    for (const auto& [id, n] : votes) {
        if (n != top_count) continue;
        double sum = 0.0;
        const int s = slot_.at(id);
        for (int m = 0; m < members_; ++m) sum += (embedded_[m].col(s) - q[m]).norm();
        const double mean = sum / members_;
        if (winner < 0 || mean < winner_dist) {
            winner = id;
            winner_dist = mean;
        }
    }
    out.id = winner;
    out.distance = winner_dist;
    out.votes = top_count;
    return out;
}

}  // namespace toma
