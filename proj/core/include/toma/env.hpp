#pragma once

#include "toma/rng.hpp"
#include "toma/types.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace toma {

// ---------------------------------------------------------------------------
// Maps

enum class MapKind { Empty, Lines, FourRooms, SnakeMaze };

MapKind map_kind_from_string(const std::string& name);
std::string to_string(MapKind kind);

// 100x100 grid with blocked cells. Text format: one row per line, '#' wall,
// '.' free, 'S' start, 'G' goal; the first line is the top row (y = height-1).
class GridMap {
public:
    GridMap() = default;

    static GridMap builtin(MapKind kind);
    static GridMap parse(std::istream& in);
    static GridMap load_file(const std::string& path);
    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;

    int width() const { return width_; }
    int height() const { return height_; }
    MapKind kind() const { return kind_; }
    Cell start() const { return start_; }
    Cell goal() const { return goal_; }

    bool in_bounds(Cell c) const {
        return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
    }
    bool wall(Cell c) const { return walls_[index(c)] != 0; }
    bool free_cell(Cell c) const { return in_bounds(c) && !wall(c); }

    std::vector<Cell> free_cells() const;
    Cell random_free_cell(Rng& rng) const;

private:
    int index(Cell c) const { return c.y * width_ + c.x; }

    int width_ = 0;
    int height_ = 0;
    MapKind kind_ = MapKind::Empty;
    std::vector<std::uint8_t> walls_;
    Cell start_{0, 0};
    Cell goal_{0, 0};
};

// ---------------------------------------------------------------------------
// BFS shortest-path oracle (wall-aware)

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

// Steps from `from` to every cell; kUnreachable for walls and separated cells.
std::vector<int> distance_field(const GridMap& map, Cell from);

// Throws std::invalid_argument if either endpoint is blocked or out of bounds.
int true_grid_distance(const GridMap& map, Cell a, Cell b);

// ---------------------------------------------------------------------------
// Grid dynamics

// Actions: 0 = up (+y), 1 = down (-y), 2 = left (-x), 3 = right (+x).
inline constexpr int kGridActions = 4;

class GridWorld {
public:
    explicit GridWorld(GridMap map) : map_(std::move(map)), pos_(map_.start()) {}

    const GridMap& map() const { return map_; }
    Cell pos() const { return pos_; }

    void reset(Cell at);
    // Moves one unit; a move into a wall or out of bounds leaves pos unchanged.
    Cell step(int action);

private:
    GridMap map_;
    Cell pos_;
};

// ---------------------------------------------------------------------------
// Observation rendering

enum class ObsKind { Sensor, NoisySensor, MnistDigit, TopDown };

ObsKind obs_kind_from_string(const std::string& name);
std::string to_string(ObsKind kind);

using AnchorImage = std::pair<Eigen::MatrixXd, Cell>;  // image in [-1,1], center

struct ObsParams {
    int noisy_feature_count = 8;
    int digit_size = 25;
    int topdown_size = 50;
    int topdown_dot_radius = 0;           // 0 = single pixel
    std::vector<AnchorImage> anchors;     // MnistDigit; default glyphs if empty
    std::string mnist_idx_path;           // optional IDX source for anchors
};

Observation render_sensor(Cell pos, int width, int height);
Observation render_mnist_mixture(Cell pos, const std::vector<AnchorImage>& anchors);
Observation render_topdown(Cell pos, int width, int height, int out_size, int dot_radius);

// Binds a kind + params + run seed into a pure cell -> observation map. The
// noisy-sensor nuisance features are drawn once from the run seed.
class ObservationRenderer {
public:
    ObservationRenderer(ObsKind kind, const GridMap& map, ObsParams params, std::uint64_t run_seed);

    ObsKind kind() const { return kind_; }
    int dim() const { return dim_; }
    Observation render(Cell pos) const;
    // Inverse of the coordinate encoding; empty for image observations.
    std::optional<Cell> cell_of(const Observation& obs) const;

private:
    ObsKind kind_;
    int width_;
    int height_;
    int dim_ = 0;
    ObsParams params_;
    Eigen::VectorXd noise_features_;
};

// ---------------------------------------------------------------------------
// MountainCar (sparse: environment reward is identically 0)

class MountainCar {
public:
    static constexpr double kMinPosition = -1.2;
    static constexpr double kMaxPosition = 0.6;
    static constexpr double kMaxVelocity = 0.07;
    static constexpr double kForce = 0.001;
    static constexpr double kGravity = 0.0025;
    static constexpr double kGoalPosition = 0.5;
    static constexpr int kActions = 3;  // 0 = push left, 1 = idle, 2 = push right

    void reset(Rng& rng);  // position uniform in [-0.6, -0.4], velocity 0
    void step(int action);

    double position() const { return position_; }
    double velocity() const { return velocity_; }
    Observation observe() const;  // (position, velocity) normalized to [-1, 1]

    static double position_of(const Observation& obs);

private:
    double position_ = -0.5;
    double velocity_ = 0.0;
};

// ---------------------------------------------------------------------------
// Uniform environment handle for the exploration loop

// Decides whether an achieved observation attains a goal observation. Exact
// where coordinates are recoverable; image observations use the embedding
// instead (wired by the caller).
using GoalTest = std::function<bool(const Observation& achieved, const Observation& goal)>;

class Env {
public:
    virtual ~Env() = default;
    virtual int num_actions() const = 0;
    virtual int obs_dim() const = 0;
    virtual Observation reset(Rng& rng) = 0;
    virtual Observation step(int action) = 0;
    // Exploration progress of the current state: BFS distance from the start
    // cell for grids, raw position for MountainCar.
    virtual double reached_value() const = 0;
    virtual Observation goal_observation() const = 0;
    virtual std::optional<GoalTest> exact_goal_test() const = 0;
    virtual std::optional<Cell> agent_cell() const = 0;
};

class GridEnv final : public Env {
public:
    GridEnv(GridMap map, ObsKind kind, ObsParams params, std::uint64_t run_seed,
            bool random_spawn = false);

    int num_actions() const override { return kGridActions; }
    int obs_dim() const override { return renderer_.dim(); }
    Observation reset(Rng& rng) override;
    Observation reset_at(Cell c);
    Observation step(int action) override;
    double reached_value() const override;
    Observation goal_observation() const override;
    std::optional<GoalTest> exact_goal_test() const override;
    std::optional<Cell> agent_cell() const override { return world_.pos(); }

    const GridMap& map() const { return world_.map(); }
    const ObservationRenderer& renderer() const { return renderer_; }

private:
    GridWorld world_;
    ObservationRenderer renderer_;
    std::vector<int> dist_from_start_;
    bool random_spawn_;
};

// Uniform-random policy rollout of a fixed length.
Trajectory random_rollout(Env& env, int steps, Rng& reset_rng, Rng& act_rng);

class MountainCarEnv final : public Env {
public:
    MountainCarEnv() = default;

    int num_actions() const override { return MountainCar::kActions; }
    int obs_dim() const override { return 2; }
    Observation reset(Rng& rng) override;
    Observation step(int action) override;
    double reached_value() const override { return car_.position(); }
    Observation goal_observation() const override;
    std::optional<GoalTest> exact_goal_test() const override;
    std::optional<Cell> agent_cell() const override { return std::nullopt; }

    const MountainCar& car() const { return car_; }

private:
    MountainCar car_;
};

}  // namespace toma
