#include "toma/replay.hpp"

#include <stdexcept>

namespace toma {

void EpisodeRecord::check() const {
    traj.check();
    if (goal.size() == 0) throw std::invalid_argument("EpisodeRecord: missing goal");
}

HerBuffer::HerBuffer(int capacity) : capacity_(capacity) {
    if (capacity <= 0) throw std::invalid_argument("HerBuffer: capacity must be positive");
    buf_.reserve(capacity);
}

void HerBuffer::push(Transition t) {
    if (size() < capacity_) {
        buf_.push_back(std::move(t));
    } else {
        buf_[head_] = std::move(t);
        head_ = (head_ + 1) % capacity_;
    }
}

const Transition& HerBuffer::sample(Rng& rng) const {
    if (buf_.empty()) throw std::out_of_range("HerBuffer::sample: empty buffer");
    return buf_[uniform_int<std::size_t>(rng, 0, buf_.size() - 1)];
}

void her_append_episode(HerBuffer& buffer, const EpisodePtr& ep, int k, const GoalTest& reached,
                        Rng& rng) {
    if (!ep) throw std::invalid_argument("her_append_episode: null episode");
    ep->check();
    if (!reached) throw std::invalid_argument("her_append_episode: missing goal test");
    const int T = ep->steps();
    const auto& obs = ep->traj.observations;
    for (int t = 0; t < T; ++t) {
        Transition base{ep, t, -1, nullptr, 0.0, false};
        if (reached(obs[t + 1], ep->goal)) {
            base.reward = 1.0;
            base.done = true;
        }
        buffer.push(base);
        for (int i = 0; i < k; ++i) {
            Transition rel{ep, t, uniform_int(rng, t + 1, T), nullptr, 0.0, false};
            if (reached(obs[t + 1], obs[rel.goal_index])) {
                rel.reward = 1.0;
                rel.done = true;
            }
            buffer.push(rel);
        }
    }
}

VertexMemory::VertexMemory(int per_vertex_capacity) : cap_(per_vertex_capacity) {
    if (cap_ <= 0) throw std::invalid_argument("VertexMemory: capacity must be positive");
}

void VertexMemory::add(int vertex, EpisodePtr ep, int t) {
    auto& q = mem_[vertex];
    q.emplace_back(std::move(ep), t);
    if (static_cast<int>(q.size()) > cap_) q.pop_front();
}

int VertexMemory::size(int vertex) const {
    const auto it = mem_.find(vertex);
    return it == mem_.end() ? 0 : static_cast<int>(it->second.size());
}

long VertexMemory::total_size() const {
    long n = 0;
    for (const auto& [v, q] : mem_) n += static_cast<long>(q.size());
    return n;
}

void VertexMemory::apply_merges(const std::map<int, int>& merged_into) {
    for (const auto& [old_id, new_id] : merged_into) {
        const auto it = mem_.find(old_id);
        if (it == mem_.end()) continue;
        auto& dst = mem_[new_id];
        for (auto& entry : it->second) {
            dst.push_back(std::move(entry));
            if (static_cast<int>(dst.size()) > cap_) dst.pop_front();
        }
        mem_.erase(old_id);
    }
}

std::optional<std::tuple<int, EpisodePtr, int>> VertexMemory::sample_union(
    const std::vector<int>& vertices, Rng& rng) const {
    long total = 0;
    for (int v : vertices) total += size(v);
    if (total == 0) return std::nullopt;
    long u = uniform_int<long>(rng, 0, total - 1);
    for (int v : vertices) {
        const long n = size(v);
        if (u < n) {
            const auto& entry = mem_.at(v)[static_cast<std::size_t>(u)];
            return std::make_tuple(v, entry.first, entry.second);
        }
        u -= n;
    }
    return std::nullopt;  // unreachable
}

}  // namespace toma
