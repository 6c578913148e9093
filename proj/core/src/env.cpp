#include "toma/env.hpp"

#include "toma/mnist.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace toma {

// ---------------------------------------------------------------------------
// MapKind / ObsKind names

MapKind map_kind_from_string(const std::string& name) {
    if (name == "empty") return MapKind::Empty;
    if (name == "lines") return MapKind::Lines;
    if (name == "four_rooms") return MapKind::FourRooms;
    if (name == "snake_maze") return MapKind::SnakeMaze;
    throw std::invalid_argument("unknown map kind: " + name);
}

std::string to_string(MapKind kind) {
    switch (kind) {
        case MapKind::Empty: return "empty";
        case MapKind::Lines: return "lines";
        case MapKind::FourRooms: return "four_rooms";
        case MapKind::SnakeMaze: return "snake_maze";
    }
    throw std::invalid_argument("bad MapKind");
}

ObsKind obs_kind_from_string(const std::string& name) {
    if (name == "sensor") return ObsKind::Sensor;
    if (name == "noisy_sensor") return ObsKind::NoisySensor;
    if (name == "mnist") return ObsKind::MnistDigit;
    if (name == "top_down") return ObsKind::TopDown;
    throw std::invalid_argument("unknown observation kind: " + name);
}

std::string to_string(ObsKind kind) {
    switch (kind) {
        case ObsKind::Sensor: return "sensor";
        case ObsKind::NoisySensor: return "noisy_sensor";
        case ObsKind::MnistDigit: return "mnist";
        case ObsKind::TopDown: return "top_down";
    }
    throw std::invalid_argument("bad ObsKind");
}

// ---------------------------------------------------------------------------
// GridMap

namespace {

constexpr int kSide = 100;

struct MapBuilder {
    int w, h;
    std::vector<std::uint8_t> walls;

    MapBuilder(int w_, int h_) : w(w_), h(h_), walls(static_cast<size_t>(w_) * h_, 0) {}

    void wall_at(int x, int y) { walls[static_cast<size_t>(y) * w + x] = 1; }

    void hline(int y, int x0, int x1, const std::vector<int>& doors = {}) {
        for (int x = x0; x <= x1; ++x)
            if (std::find(doors.begin(), doors.end(), x) == doors.end()) wall_at(x, y);
    }
    void vline(int x, int y0, int y1, const std::vector<int>& doors = {}) {
        for (int y = y0; y <= y1; ++y)
            if (std::find(doors.begin(), doors.end(), y) == doors.end()) wall_at(x, y);
    }
};

}  // namespace

GridMap GridMap::builtin(MapKind kind) {
    MapBuilder b(kSide, kSide);
    Cell start{0, 0}, goal{kSide - 1, kSide - 1};
    switch (kind) {
        case MapKind::Empty:
            start = {49, 49};
            goal = {99, 99};
            break;
        case MapKind::Lines:
            b.vline(25, 20, 85);
            b.vline(75, 15, 80);
            b.hline(50, 40, 60);
            start = {0, 0};
            goal = {99, 99};
            break;
        case MapKind::FourRooms:
            // One doorway in each half-wall.
            b.vline(49, 0, 99, {24, 74});
            b.hline(49, 0, 99, {24, 74});
            start = {24, 24};
            goal = {74, 74};
            break;
        case MapKind::SnakeMaze:
            // Two full-width walls with openings at opposite ends force a
            // serpentine path from the top-left to the bottom-right corner.
            b.hline(66, 0, 97);
            b.hline(33, 2, 99);
            start = {0, 99};
            goal = {99, 0};
            break;
    }
    GridMap m;
    m.width_ = kSide;
    m.height_ = kSide;
    m.kind_ = kind;
    m.walls_ = std::move(b.walls);
    m.start_ = start;
    m.goal_ = goal;
    if (!m.free_cell(start) || !m.free_cell(goal))
        throw std::runtime_error("builtin map start/goal blocked");
    return m;
}

GridMap GridMap::parse(std::istream& in) {
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == EOF) break;
        rows.push_back(line);
    }
    if (rows.empty()) throw std::runtime_error("empty map");
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows[0].size());

    GridMap m;
    m.width_ = w;
    m.height_ = h;
    m.walls_.assign(static_cast<size_t>(w) * h, 0);
    bool has_start = false, has_goal = false;
    for (int r = 0; r < h; ++r) {
        if (static_cast<int>(rows[r].size()) != w)
            throw std::runtime_error("ragged map: row " + std::to_string(r));
        const int y = h - 1 - r;  // first line is the top row
        for (int x = 0; x < w; ++x) {
            switch (rows[r][x]) {
                case '#': m.walls_[static_cast<size_t>(y) * w + x] = 1; break;
                case '.': break;
                case 'S':
                    m.start_ = {x, y};
                    has_start = true;
                    break;
                case 'G':
                    m.goal_ = {x, y};
                    has_goal = true;
                    break;
                default:
                    throw std::runtime_error(std::string("bad map char '") + rows[r][x] + "'");
            }
        }
    }
    if (!has_start || !has_goal) throw std::runtime_error("map needs both S and G");
    return m;
}

GridMap GridMap::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open map file: " + path);
    return parse(in);
}

void GridMap::save(std::ostream& out) const {
    for (int r = 0; r < height_; ++r) {
        const int y = height_ - 1 - r;
        for (int x = 0; x < width_; ++x) {
            Cell c{x, y};
            char ch = wall(c) ? '#' : '.';
            if (c == start_) ch = 'S';
            else if (c == goal_) ch = 'G';
            out.put(ch);
        }
        out.put('\n');
    }
}

void GridMap::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write map file: " + path);
    save(out);
}

std::vector<Cell> GridMap::free_cells() const {
    std::vector<Cell> cells;
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            if (!wall({x, y})) cells.push_back({x, y});
    return cells;
}

Cell GridMap::random_free_cell(Rng& rng) const {
    for (;;) {
        Cell c{uniform_int(rng, 0, width_ - 1), uniform_int(rng, 0, height_ - 1)};
        if (!wall(c)) return c;
    }
}

// ---------------------------------------------------------------------------
// BFS oracle

std::vector<int> distance_field(const GridMap& map, Cell from) {
    if (!map.free_cell(from)) throw std::invalid_argument("distance_field: source blocked");
    const int w = map.width(), h = map.height();
    std::vector<int> dist(static_cast<size_t>(w) * h, kUnreachable);
    std::deque<Cell> frontier;
    dist[static_cast<size_t>(from.y) * w + from.x] = 0;
    frontier.push_back(from);
    static constexpr int dx[4] = {0, 0, -1, 1};
    static constexpr int dy[4] = {1, -1, 0, 0};
    while (!frontier.empty()) {
        Cell c = frontier.front();
        frontier.pop_front();
        const int d = dist[static_cast<size_t>(c.y) * w + c.x];
        for (int a = 0; a < 4; ++a) {
            Cell n{c.x + dx[a], c.y + dy[a]};
            if (!map.free_cell(n)) continue;
            int& slot = dist[static_cast<size_t>(n.y) * w + n.x];
            if (slot == kUnreachable) {
                slot = d + 1;
                frontier.push_back(n);
            }
        }
    }
    return dist;
}

int true_grid_distance(const GridMap& map, Cell a, Cell b) {
    if (!map.free_cell(b)) throw std::invalid_argument("true_grid_distance: target blocked");
    const auto dist = distance_field(map, a);
    return dist[static_cast<size_t>(b.y) * map.width() + b.x];
}

// ---------------------------------------------------------------------------
// GridWorld

void GridWorld::reset(Cell at) {
    if (!map_.free_cell(at)) throw std::invalid_argument("GridWorld::reset: blocked cell");
    pos_ = at;
}

Cell GridWorld::step(int action) {
    static constexpr int dx[4] = {0, 0, -1, 1};
    static constexpr int dy[4] = {1, -1, 0, 0};
    if (action < 0 || action >= kGridActions)
        throw std::invalid_argument("GridWorld::step: bad action " + std::to_string(action));
    Cell next{pos_.x + dx[action], pos_.y + dy[action]};
    if (map_.free_cell(next)) pos_ = next;
    return pos_;
}

// ---------------------------------------------------------------------------
// Rendering

Observation render_sensor(Cell pos, int width, int height) {
    Observation o(2);
    o << 2.0 * pos.x / (width - 1) - 1.0, 2.0 * pos.y / (height - 1) - 1.0;
    return o;
}

Observation render_mnist_mixture(Cell pos, const std::vector<AnchorImage>& anchors) {
    if (anchors.empty()) throw std::invalid_argument("mnist mixture needs anchors");
    const auto& first = anchors.front().first;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(first.rows(), first.cols());
    double total = 0.0;
    for (const auto& [img, at] : anchors) {
        const double d = std::hypot(double(pos.x - at.x), double(pos.y - at.y));
        const double w = std::exp(-0.01 * d);
        acc += w * img;
        total += w;
    }
    acc /= total;
    return Eigen::Map<const Eigen::VectorXd>(acc.data(), acc.size());
}

Observation render_topdown(Cell pos, int width, int height, int out_size, int dot_radius) {
    Eigen::MatrixXd img = Eigen::MatrixXd::Constant(out_size, out_size, -1.0);
    const int sx = pos.x * out_size / width;
    const int sy = pos.y * out_size / height;
    const int row = out_size - 1 - sy;  // row 0 renders the top of the map
    for (int dr = -dot_radius; dr <= dot_radius; ++dr)
        for (int dc = -dot_radius; dc <= dot_radius; ++dc) {
            const int r = row + dr, c = sx + dc;
            if (r >= 0 && r < out_size && c >= 0 && c < out_size) img(r, c) = 1.0;
        }
    return Eigen::Map<const Eigen::VectorXd>(img.data(), img.size());
}

ObservationRenderer::ObservationRenderer(ObsKind kind, const GridMap& map, ObsParams params,
                                         std::uint64_t run_seed)
    : kind_(kind), width_(map.width()), height_(map.height()), params_(std::move(params)) {
    switch (kind_) {
        case ObsKind::Sensor:
            dim_ = 2;
            break;
        case ObsKind::NoisySensor: {
            dim_ = 2 + params_.noisy_feature_count;
            Rng rng = make_rng(run_seed, 0xfea7);
            noise_features_.resize(params_.noisy_feature_count);
            for (int i = 0; i < params_.noisy_feature_count; ++i)
                noise_features_[i] = uniform_real(rng, -1.0, 1.0);
            break;
        }
        case ObsKind::MnistDigit: {
            if (params_.anchors.empty()) {
                Rng rng = make_rng(run_seed, 0xd161);
                auto imgs = pick_anchor_images(params_.mnist_idx_path, params_.digit_size, 4, rng);
                const Cell spots[4] = {{10, 10}, {10, 90}, {90, 10}, {90, 90}};
                for (int i = 0; i < 4; ++i)
                    params_.anchors.emplace_back(std::move(imgs[i]), spots[i]);
            }
            dim_ = params_.digit_size * params_.digit_size;
            break;
        }
        case ObsKind::TopDown:
            dim_ = params_.topdown_size * params_.topdown_size;
            break;
    }
}

Observation ObservationRenderer::render(Cell pos) const {
    switch (kind_) {
        case ObsKind::Sensor:
            return render_sensor(pos, width_, height_);
        case ObsKind::NoisySensor: {
            Observation o(dim_);
            o.head(2) = render_sensor(pos, width_, height_);
            o.tail(params_.noisy_feature_count) = noise_features_;
            return o;
        }
        case ObsKind::MnistDigit:
            return render_mnist_mixture(pos, params_.anchors);
        case ObsKind::TopDown:
            return render_topdown(pos, width_, height_, params_.topdown_size,
                                  params_.topdown_dot_radius);
    }
    throw std::logic_error("bad ObsKind");
}

std::optional<Cell> ObservationRenderer::cell_of(const Observation& obs) const {
    if (kind_ != ObsKind::Sensor && kind_ != ObsKind::NoisySensor) return std::nullopt;
    if (obs.size() < 2) throw std::invalid_argument("cell_of: observation too small");
    const int x = static_cast<int>(std::lround((obs[0] + 1.0) * (width_ - 1) / 2.0));
    const int y = static_cast<int>(std::lround((obs[1] + 1.0) * (height_ - 1) / 2.0));
    return Cell{std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1)};
}

// ---------------------------------------------------------------------------
// MountainCar

void MountainCar::reset(Rng& rng) {
    position_ = uniform_real(rng, -0.6, -0.4);
    velocity_ = 0.0;
}

void MountainCar::step(int action) {
    if (action < 0 || action >= kActions)
        throw std::invalid_argument("MountainCar::step: bad action " + std::to_string(action));
    velocity_ += (action - 1) * kForce - std::cos(3.0 * position_) * kGravity;
    velocity_ = std::clamp(velocity_, -kMaxVelocity, kMaxVelocity);
    position_ += velocity_;
    position_ = std::clamp(position_, kMinPosition, kMaxPosition);
    if (position_ <= kMinPosition && velocity_ < 0.0) velocity_ = 0.0;
}

Observation MountainCar::observe() const {
    Observation o(2);
    o << 2.0 * (position_ - kMinPosition) / (kMaxPosition - kMinPosition) - 1.0,
        velocity_ / kMaxVelocity;
    return o;
}

double MountainCar::position_of(const Observation& obs) {
    if (obs.size() < 1) throw std::invalid_argument("position_of: empty observation");
    return (obs[0] + 1.0) / 2.0 * (kMaxPosition - kMinPosition) + kMinPosition;
}

// ---------------------------------------------------------------------------
// Env handles

GridEnv::GridEnv(GridMap map, ObsKind kind, ObsParams params, std::uint64_t run_seed,
                 bool random_spawn)
    : world_(std::move(map)),
      renderer_(kind, world_.map(), std::move(params), run_seed),
      dist_from_start_(distance_field(world_.map(), world_.map().start())),
      random_spawn_(random_spawn) {}

Observation GridEnv::reset(Rng& rng) {
    world_.reset(random_spawn_ ? world_.map().random_free_cell(rng) : world_.map().start());
    return renderer_.render(world_.pos());
}

Observation GridEnv::reset_at(Cell c) {
    world_.reset(c);
    return renderer_.render(world_.pos());
}

Observation GridEnv::step(int action) {
    return renderer_.render(world_.step(action));
}

double GridEnv::reached_value() const {
    const Cell c = world_.pos();
    const int d = dist_from_start_[static_cast<size_t>(c.y) * map().width() + c.x];
    return d == kUnreachable ? 0.0 : static_cast<double>(d);
}

Observation GridEnv::goal_observation() const {
    return renderer_.render(map().goal());
}

std::optional<GoalTest> GridEnv::exact_goal_test() const {
    if (renderer_.kind() == ObsKind::MnistDigit || renderer_.kind() == ObsKind::TopDown)
        return std::nullopt;
    ObservationRenderer r = renderer_;
    return GoalTest{[r](const Observation& achieved, const Observation& goal) {
        return r.cell_of(achieved) == r.cell_of(goal);
    }};
}

Trajectory random_rollout(Env& env, int steps, Rng& reset_rng, Rng& act_rng) {
    Trajectory t;
    t.observations.reserve(steps + 1);
    t.actions.reserve(steps);
    t.observations.push_back(env.reset(reset_rng));
    for (int i = 0; i < steps; ++i) {
        const int a = uniform_int(act_rng, 0, env.num_actions() - 1);
        t.observations.push_back(env.step(a));
        t.actions.push_back(a);
    }
    return t;
}

Observation MountainCarEnv::reset(Rng& rng) {
    car_.reset(rng);
    return car_.observe();
}

Observation MountainCarEnv::step(int action) {
    car_.step(action);
    return car_.observe();
}

Observation MountainCarEnv::goal_observation() const {
    Observation o(2);
    o << 2.0 * (MountainCar::kGoalPosition - MountainCar::kMinPosition) /
             (MountainCar::kMaxPosition - MountainCar::kMinPosition) -
             1.0,
        0.0;
    return o;
}

std::optional<GoalTest> MountainCarEnv::exact_goal_test() const {
    return GoalTest{[](const Observation& achieved, const Observation& goal) {
        return MountainCar::position_of(achieved) >= MountainCar::position_of(goal);
    }};
}

}  // namespace toma
