#include "toma/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace toma {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not an integer: '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': not a number: '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("key '" + key + "': not a bool: '" + value + "'");
}

}  // namespace

void Config::add(const std::string& key, Type type, const std::string& def) {
    validate(key, type, def);
    entries_[key] = Entry{type, def, false};
}

Config::Config() {
    add("run.task", Type::String, "grid");
    add("run.seeds", Type::String, "");
    add("run.threads", Type::Int, "1");

    add("map.kind", Type::String, "four_rooms");
    add("map.file", Type::String, "");

    add("obs.kind", Type::String, "sensor");
    add("obs.mnist_idx", Type::String, "");
    add("obs.noisy_features", Type::Int, "8");
    add("obs.topdown_dot_radius", Type::Int, "0");

    add("embed.dim", Type::Int, "8");
    add("embed.members", Type::Int, "1");
    add("embed.radius", Type::Double, "20");
    add("embed.lambda1", Type::Double, "0.5");
    add("embed.lambda2", Type::Double, "0.2");
    add("embed.alpha", Type::Double, "0.5");
    add("embed.pool_capacity", Type::Int, "100000");
    add("embed.pairs_per_trajectory", Type::Int, "400");
    add("embed.batch", Type::Int, "64");
    add("embed.steps_per_iteration", Type::Int, "40");
    add("embed.lr", Type::Double, "1e-4");
    add("embed.hidden", Type::String, "64,64");

    add("graph.label_max", Type::Double, "1.5");
    add("graph.cand_min", Type::Double, "2");
    add("graph.cand_max", Type::Double, "3");
    add("graph.merge_below", Type::Double, "1.5");
    add("graph.edge_cut_above", Type::Double, "3");
    add("graph.add_budget", Type::Int, "8");
    add("graph.fifo_capacity", Type::Int, "1024");

    add("q.hidden", Type::String, "64,64");
    add("q.lr", Type::Double, "3e-4");
    add("q.gamma", Type::Double, "0.95");
    add("q.eps_greedy", Type::Double, "0.9");
    add("q.batch", Type::Int, "256");
    add("q.target_sync_every", Type::Int, "500");
    add("q.target_clip", Type::Double, "20");
    add("q.her_k", Type::Int, "4");
    add("q.her_capacity", Type::Int, "100000");
    add("q.vm_capacity", Type::Int, "1000");

    add("explore.variants", Type::String, "toma_vm");
    add("explore.goal_rule", Type::String, "least_visited");
    add("explore.iterations", Type::Int, "300");
    add("explore.steps_per_iteration", Type::Int, "1000");
    add("explore.random_tail", Type::Double, "0.9");
    add("explore.td_updates_per_iteration", Type::Int, "25");
    add("explore.replan_period", Type::Int, "10");
    add("explore.snapshot_every", Type::Int, "50");

    add("gen.episodes", Type::Int, "100");
    add("gen.warmup_episodes", Type::Int, "20");
    add("gen.warmup_steps", Type::Int, "800");
    add("gen.min_edge_accuracy", Type::Double, "0");
    add("gen.steps", Type::Int, "1000");
    add("gen.random_spawn", Type::Bool, "true");
    add("gen.replay_passes", Type::Int, "1");
    add("gen.replay_memory_mb", Type::Int, "512");

    add("plan.tasks", Type::Int, "100");
    add("plan.min_success", Type::Double, "0");
    add("plan.step_budget", Type::Int, "2000");
    add("plan.controller_range", Type::Double, "0");
    add("plan.graph", Type::String, "");
    add("plan.embedding", Type::String, "");

    add("export.graph", Type::String, "");
    add("export.embedding", Type::String, "");
    add("export.stride", Type::Int, "1");
}

void Config::validate(const std::string& key, Type type, const std::string& value) {
    switch (type) {
        case Type::Int:
            parse_int(key, value);
            break;
        case Type::Double:
            parse_double(key, value);
            break;
        case Type::Bool:
            parse_bool(key, value);
            break;
        case Type::String:
            break;
    }
}

const Config::Entry& Config::entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("unknown key '" + key + "'");
    return it->second;
}

void Config::set(const std::string& key, const std::string& value) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("unknown key '" + key + "'");
    validate(key, it->second.type, value);
    it->second.value = value;
    it->second.set = true;
}

bool Config::was_set(const std::string& key) const {
    return entry(key).set;
}

void Config::set_default(const std::string& key, const std::string& value) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("unknown key '" + key + "'");
    if (it->second.set) return;
    validate(key, it->second.type, value);
    it->second.value = value;
}

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

long Config::get_int(const std::string& key) const {
    return parse_int(key, entry(key).value);
}

double Config::get_double(const std::string& key) const {
    return parse_double(key, entry(key).value);
}

bool Config::get_bool(const std::string& key) const {
    return parse_bool(key, entry(key).value);
}

const std::string& Config::get_string(const std::string& key) const {
    return entry(key).value;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : split_commas(entry(key).value))
        out.push_back(static_cast<int>(parse_int(key, item)));
    return out;
}

std::vector<std::uint64_t> Config::get_u64_list(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_commas(entry(key).value)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': not an unsigned integer: '" + item + "'");
        }
    }
    return out;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [key, e] : entries_) {
        out += key;
        out += '=';
        out += e.value;
        out += '\n';
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t Config::hash() const {
    return fnv1a64(canonical());
}

// ---------------------------------------------------------------------------
// RunSetup

namespace {

InputTransform transform_for(ObsKind kind, int topdown_size) {
    InputTransform t;
    if (kind == ObsKind::TopDown) {
        t.image_side = topdown_size;
        t.pool_steps = 1;
    }
    return t;
}

}  // namespace

GridMap RunSetup::make_map() const {
    return map_file.empty() ? GridMap::builtin(map_kind) : GridMap::load_file(map_file);
}

std::unique_ptr<Env> RunSetup::make_grid_env(std::uint64_t seed, bool random_spawn) const {
    return std::make_unique<GridEnv>(make_map(), obs_kind, obs_params, seed, random_spawn);
}

EnvFactory RunSetup::env_factory() const {
    if (task == "mountain_car")
        return [](std::uint64_t) { return std::make_unique<MountainCarEnv>(); };
    const RunSetup self = *this;
    return [self](std::uint64_t seed) { return self.make_grid_env(seed, false); };
}

RunSetup resolve_setup(Config& cfg) {
    RunSetup s;
    s.task = cfg.get_string("run.task");
    if (s.task != "grid" && s.task != "mountain_car")
        throw ConfigError("run.task must be 'grid' or 'mountain_car'");

    try {
        s.obs_kind = obs_kind_from_string(cfg.get_string("obs.kind"));
        s.map_kind = map_kind_from_string(cfg.get_string("map.kind"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    // Observation- and task-dependent defaults for keys not explicitly set.
    const bool image = s.obs_kind == ObsKind::MnistDigit || s.obs_kind == ObsKind::TopDown;
    if (s.task == "grid") {
        cfg.set_default("q.hidden", "300,200");
        cfg.set_default("q.her_k", "16");
        cfg.set_default("explore.goal_rule", "furthest_vertex");
        if (s.obs_kind == ObsKind::MnistDigit) cfg.set_default("q.hidden", "256,128");
        if (s.obs_kind == ObsKind::TopDown) {
            cfg.set_default("embed.members", "8");
            cfg.set_default("embed.hidden", "256,128");
            cfg.set_default("q.hidden", "512,256");
        }
        if (image) {
            // Image episodes are heavy; keep resident episode count bounded.
            cfg.set_default("embed.pool_capacity", "30000");
            cfg.set_default("q.her_capacity", "30000");
        }
    } else {
        cfg.set_default("explore.iterations", "20");
        cfg.set_default("explore.steps_per_iteration", "200");
        // Short iterations leave few samples per iteration; train harder on
        // each one so the metric spreads and the agent picks up goal-reaching
        // within the first few iterations.
        cfg.set_default("embed.steps_per_iteration", "400");
        cfg.set_default("explore.td_updates_per_iteration", "200");
    }

    s.map_file = cfg.get_string("map.file");
    s.obs_params.noisy_feature_count = static_cast<int>(cfg.get_int("obs.noisy_features"));
    s.obs_params.topdown_dot_radius = static_cast<int>(cfg.get_int("obs.topdown_dot_radius"));
    s.obs_params.mnist_idx_path = cfg.get_string("obs.mnist_idx");

    ExploreConfig& e = s.explore;
    e.embed.dim = static_cast<int>(cfg.get_int("embed.dim"));
    e.embed.members = static_cast<int>(cfg.get_int("embed.members"));
    e.embed.radius = cfg.get_double("embed.radius");
    e.embed.lambda1 = cfg.get_double("embed.lambda1");
    e.embed.lambda2 = cfg.get_double("embed.lambda2");
    e.embed.alpha = cfg.get_double("embed.alpha");
    e.embed.pool_capacity = static_cast<int>(cfg.get_int("embed.pool_capacity"));
    e.embed.pairs_per_trajectory = static_cast<int>(cfg.get_int("embed.pairs_per_trajectory"));
    e.embed.batch = static_cast<int>(cfg.get_int("embed.batch"));
    e.embed.steps_per_iteration = static_cast<int>(cfg.get_int("embed.steps_per_iteration"));
    e.embed.adam.lr = cfg.get_double("embed.lr");
    e.embed.hidden = cfg.get_int_list("embed.hidden");
    if (e.embed.hidden.empty()) throw ConfigError("embed.hidden must list at least one width");
    e.embed.input = transform_for(s.obs_kind, s.obs_params.topdown_size);

    e.graph.label_max = cfg.get_double("graph.label_max");
    e.graph.cand_min = cfg.get_double("graph.cand_min");
    e.graph.cand_max = cfg.get_double("graph.cand_max");
    e.graph.merge_below = cfg.get_double("graph.merge_below");
    e.graph.edge_cut_above = cfg.get_double("graph.edge_cut_above");
    e.graph.add_budget = static_cast<int>(cfg.get_int("graph.add_budget"));
    e.graph.fifo_capacity = static_cast<int>(cfg.get_int("graph.fifo_capacity"));

    e.q.hidden = cfg.get_int_list("q.hidden");
    if (e.q.hidden.empty()) throw ConfigError("q.hidden must list at least one width");
    e.q.adam.lr = cfg.get_double("q.lr");
    e.q.gamma = cfg.get_double("q.gamma");
    e.q.eps_greedy = cfg.get_double("q.eps_greedy");
    e.q.batch = static_cast<int>(cfg.get_int("q.batch"));
    e.q.target_sync_every = static_cast<int>(cfg.get_int("q.target_sync_every"));
    e.q.target_clip = cfg.get_double("q.target_clip");
    e.q.her_k = static_cast<int>(cfg.get_int("q.her_k"));
    e.q.her_capacity = static_cast<int>(cfg.get_int("q.her_capacity"));
    e.q.vm_capacity = static_cast<int>(cfg.get_int("q.vm_capacity"));
    e.q.input = transform_for(s.obs_kind, s.obs_params.topdown_size);

    try {
        e.goal_rule = goal_rule_from_string(cfg.get_string("explore.goal_rule"));
        for (const auto& name : split_commas(cfg.get_string("explore.variants")))
            s.variants.push_back(variant_from_string(name));
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    if (s.variants.empty()) throw ConfigError("explore.variants must list at least one variant");
    e.iterations = static_cast<int>(cfg.get_int("explore.iterations"));
    e.steps_per_iteration = static_cast<int>(cfg.get_int("explore.steps_per_iteration"));
    e.random_tail = cfg.get_double("explore.random_tail");
    e.td_updates_per_iteration = static_cast<int>(cfg.get_int("explore.td_updates_per_iteration"));
    e.replan_period = static_cast<int>(cfg.get_int("explore.replan_period"));
    s.snapshot_every = static_cast<int>(cfg.get_int("explore.snapshot_every"));

    s.gen_episodes = static_cast<int>(cfg.get_int("gen.episodes"));
    s.gen_warmup = static_cast<int>(cfg.get_int("gen.warmup_episodes"));
    s.gen_warmup_steps = static_cast<int>(cfg.get_int("gen.warmup_steps"));
    s.gen_min_edge_accuracy = cfg.get_double("gen.min_edge_accuracy");
    s.gen_steps = static_cast<int>(cfg.get_int("gen.steps"));
    s.gen_random_spawn = cfg.get_bool("gen.random_spawn");
    s.gen_replay_passes = static_cast<int>(cfg.get_int("gen.replay_passes"));
    s.gen_replay_memory_mb = static_cast<int>(cfg.get_int("gen.replay_memory_mb"));

    s.plan_tasks = static_cast<int>(cfg.get_int("plan.tasks"));
    s.plan_min_success = cfg.get_double("plan.min_success");
    s.plan_step_budget = static_cast<int>(cfg.get_int("plan.step_budget"));
    s.plan_controller_range = cfg.get_double("plan.controller_range");
    if (s.plan_controller_range <= 0.0) s.plan_controller_range = 4.0 * e.embed.radius;
    s.plan_graph = cfg.get_string("plan.graph");
    s.plan_embedding = cfg.get_string("plan.embedding");

    s.export_graph = cfg.get_string("export.graph");
    s.export_embedding = cfg.get_string("export.embedding");
    s.export_stride = static_cast<int>(cfg.get_int("export.stride"));

    s.seeds = cfg.get_u64_list("run.seeds");
    if (s.seeds.empty()) s.seeds = {1};
    s.base_seed = s.seeds.front();
    s.threads = static_cast<int>(cfg.get_int("run.threads"));
    s.config_hash = cfg.hash();
    return s;
}

}  // namespace toma
