#pragma once

#include "toma/env.hpp"
#include "toma/explore.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace toma {

// Raised for malformed files, unknown keys, and type errors; the CLI turns it
// into a usage-style exit.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat typed key=value configuration. Every key is pre-registered with a
// default; setting an unregistered key is an error, as is a value that does
// not parse under the key's type. Files hold one `key = value` per line with
// '#' comments.
class Config {
public:
    Config();

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    bool was_set(const std::string& key) const;
    // Adjusts a default without marking the key as explicitly set; used for
    // observation-mode-dependent defaults.
    void set_default(const std::string& key, const std::string& value);

    long get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    const std::string& get_string(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;
    std::vector<std::uint64_t> get_u64_list(const std::string& key) const;

    // Sorted key=value dump of the full resolved configuration.
    std::string canonical() const;
    // FNV-1a 64 over canonical(); stamped into every artifact.
    std::uint64_t hash() const;

private:
    enum class Type { Int, Double, Bool, String };
    struct Entry {
        Type type = Type::String;
        std::string value;
        bool set = false;
    };

    void add(const std::string& key, Type type, const std::string& def);
    const Entry& entry(const std::string& key) const;
    static void validate(const std::string& key, Type type, const std::string& value);

    std::map<std::string, Entry> entries_;
};

std::uint64_t fnv1a64(const std::string& data);

// The typed bundle commands actually consume, resolved from a Config after
// mode-dependent defaults are applied.
struct RunSetup {
    std::string task;  // "grid" | "mountain_car"
    MapKind map_kind = MapKind::FourRooms;
    std::string map_file;
    ObsKind obs_kind = ObsKind::Sensor;
    ObsParams obs_params;

    ExploreConfig explore;
    std::vector<Variant> variants;
    std::vector<std::uint64_t> seeds;
    int snapshot_every = 50;

    int gen_episodes = 100;
    int gen_warmup = 20;         // episodes that only train the embedding
    int gen_warmup_steps = 800;  // train steps per warmup episode
    double gen_min_edge_accuracy = 0.0;  // below this, generate-graph exits 3
    int gen_steps = 1000;
    bool gen_random_spawn = true;
    int gen_replay_passes = 1;      // consolidation passes over stored episodes
    int gen_replay_memory_mb = 512;  // trajectory retention cap for replay

    int plan_tasks = 100;
    double plan_min_success = 0.0;  // below this, plan-eval exits 3
    int plan_step_budget = 2000;
    double plan_controller_range = 0.0;  // 0 resolves to 4 * radius
    std::string plan_graph;
    std::string plan_embedding;

    std::string export_graph;
    std::string export_embedding;
    int export_stride = 1;

    std::uint64_t base_seed = 1;
    int threads = 1;
    std::uint64_t config_hash = 0;

    GridMap make_map() const;
    std::unique_ptr<Env> make_grid_env(std::uint64_t seed, bool random_spawn) const;
    EnvFactory env_factory() const;
};

// Applies observation/task defaults to unset keys, then extracts everything.
RunSetup resolve_setup(Config& cfg);

}  // namespace toma
