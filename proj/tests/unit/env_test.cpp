#include <doctest.h>

#include "toma/env.hpp"

#include <cmath>
#include <queue>
#include <sstream>

using namespace toma;

namespace {

// Independent BFS, structured differently from the library's distance_field.
int bfs_steps(const GridMap& map, Cell from, Cell to) {
    std::vector<int> dist(static_cast<size_t>(map.width()) * map.height(), -1);
    const auto at = [&](Cell c) -> int& {
        return dist[static_cast<size_t>(c.y) * map.width() + c.x];
    };
    std::queue<Cell> q;
    at(from) = 0;
    q.push(from);
    while (!q.empty()) {
        const Cell c = q.front();
        q.pop();
        if (c == to) return at(c);
        const Cell around[4] = {{c.x, c.y + 1}, {c.x, c.y - 1}, {c.x - 1, c.y}, {c.x + 1, c.y}};
        for (const Cell n : around)
            if (map.free_cell(n) && at(n) < 0) {
                at(n) = at(c) + 1;
                q.push(n);
            }
    }
    return -1;
}

}  // namespace

TEST_CASE("grid step moves, blocks, and clamps") {
    GridWorld w(GridMap::builtin(MapKind::Empty));
    w.reset({5, 5});
    CHECK(w.step(0) == Cell{5, 6});   // up
    CHECK(w.step(3) == Cell{6, 6});   // right
    w.reset({0, 0});
    CHECK(w.step(2) == Cell{0, 0});   // left off the edge
    CHECK(w.step(1) == Cell{0, 0});   // down off the edge

    // A wall blocks without moving the agent.
    const GridMap rooms = GridMap::builtin(MapKind::FourRooms);
    bool checked = false;
    for (const Cell c : rooms.free_cells()) {
        const Cell right{c.x + 1, c.y};
        if (rooms.in_bounds(right) && rooms.wall(right)) {
            GridWorld v(rooms);
            v.reset(c);
            CHECK(v.step(3) == c);
            checked = true;
            break;
        }
    }
    CHECK(checked);
}

TEST_CASE("sensor rendering normalizes corners") {
    const Observation lo = render_sensor({0, 0}, 100, 100);
    CHECK(lo[0] == -1.0);
    CHECK(lo[1] == -1.0);
    const Observation hi = render_sensor({99, 99}, 100, 100);
    CHECK(hi[0] == 1.0);
    CHECK(hi[1] == 1.0);
    const Observation mid = render_sensor({49, 49}, 100, 100);
    CHECK(mid[0] == doctest::Approx(2.0 * 49 / 99 - 1.0).epsilon(1e-12));
    CHECK(mid[1] == doctest::Approx(-1.0 / 99).epsilon(1e-9));
}

TEST_CASE("mnist mixture weights and convexity") {
    const int n = 25;
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, -1.0);
    a(3, 7) = 1.0;
    Eigen::MatrixXd b = Eigen::MatrixXd::Constant(n, n, 0.25);

    // On top of a lone anchor the weight cancels out.
    const Observation solo = render_mnist_mixture({10, 10}, {{a, Cell{10, 10}}});
    CHECK(solo.size() == n * n);
    CHECK((solo - Eigen::Map<const Eigen::VectorXd>(a.data(), a.size())).cwiseAbs().maxCoeff() ==
          0.0);

    // Two anchors: recompute the weighted sum by hand.
    const Observation mix =
        render_mnist_mixture({10, 10}, {{a, Cell{10, 10}}, {b, Cell{90, 90}}});
    const double w_far = std::exp(-0.01 * std::sqrt(80.0 * 80.0 + 80.0 * 80.0));
    CHECK(w_far == doctest::Approx(0.32263).epsilon(1e-4));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double want = (1.0 * a(i, j) + w_far * b(i, j)) / (1.0 + w_far);
            CHECK(mix[j * n + i] == doctest::Approx(want).epsilon(1e-12));
            CHECK(mix[j * n + i] >= std::min(a(i, j), b(i, j)) - 1e-12);
            CHECK(mix[j * n + i] <= std::max(a(i, j), b(i, j)) + 1e-12);
        }

    // Equidistant identical anchors reproduce the image.
    const Observation twin =
        render_mnist_mixture({50, 50}, {{a, Cell{10, 10}}, {a, Cell{90, 90}}});
    CHECK((twin - Eigen::Map<const Eigen::VectorXd>(a.data(), a.size())).cwiseAbs().maxCoeff() <
          1e-12);

    CHECK_THROWS(render_mnist_mixture({0, 0}, {}));
}

TEST_CASE("topdown dot lands on the scaled cell") {
    const Observation at00 = render_topdown({0, 0}, 100, 100, 50, 0);
    CHECK(at00.size() == 2500);
    CHECK(at00.sum() == doctest::Approx(-2499.0 + 1.0));
    CHECK((at00.array() == 1.0).count() == 1);
    // (0,0) scales to pixel column 0, bottom row; rows are stored top-first.
    CHECK(at00[49] == 1.0);

    const Observation at99 = render_topdown({99, 99}, 100, 100, 50, 0);
    CHECK((at99.array() == 1.0).count() == 1);
    CHECK(at99[49 * 50 + 0] == 1.0);  // column 49, top row
}

TEST_CASE("true grid distance agrees with an independent BFS") {
    const GridMap empty = GridMap::builtin(MapKind::Empty);
    CHECK(true_grid_distance(empty, {0, 0}, {3, 0}) == 3);
    CHECK(true_grid_distance(empty, {7, 7}, {7, 7}) == 0);

    const GridMap rooms = GridMap::builtin(MapKind::FourRooms);
    Rng rng = make_rng(7);
    for (int i = 0; i < 50; ++i) {
        const Cell a = rooms.random_free_cell(rng);
        const Cell b = rooms.random_free_cell(rng);
        CHECK(true_grid_distance(rooms, a, b) == bfs_steps(rooms, a, b));
    }

    // Blocked endpoints are rejected; separated cells are unreachable.
    Cell wall_cell{-1, -1};
    for (int y = 0; y < rooms.height() && wall_cell.x < 0; ++y)
        for (int x = 0; x < rooms.width(); ++x)
            if (rooms.wall({x, y})) {
                wall_cell = {x, y};
                break;
            }
    CHECK_THROWS(true_grid_distance(rooms, wall_cell, {0, 0}));

    std::istringstream split(".#.\n.#.\n.#.\n");
    const GridMap two = GridMap::parse(split);
    CHECK(true_grid_distance(two, {0, 0}, {2, 0}) == kUnreachable);
}

TEST_CASE("map text round-trips") {
    const GridMap maze = GridMap::builtin(MapKind::SnakeMaze);
    std::stringstream buf;
    maze.save(buf);
    const GridMap back = GridMap::parse(buf);
    REQUIRE(back.width() == maze.width());
    REQUIRE(back.height() == maze.height());
    CHECK(back.start() == maze.start());
    CHECK(back.goal() == maze.goal());
    for (int y = 0; y < maze.height(); ++y)
        for (int x = 0; x < maze.width(); ++x)
            CHECK(back.wall({x, y}) == maze.wall({x, y}));
}

TEST_CASE("snake maze needs a long optimal path") {
    const GridMap maze = GridMap::builtin(MapKind::SnakeMaze);
    CHECK(true_grid_distance(maze, maze.start(), maze.goal()) >= 300);
}

TEST_CASE("noisy sensor features are fixed within a run") {
    const GridMap empty = GridMap::builtin(MapKind::Empty);
    ObsParams params;
    const ObservationRenderer r1(ObsKind::NoisySensor, empty, params, 42);
    const ObservationRenderer r2(ObsKind::NoisySensor, empty, params, 42);
    const ObservationRenderer r3(ObsKind::NoisySensor, empty, params, 43);
    REQUIRE(r1.dim() == 10);

    const Observation a = r1.render({3, 4});
    const Observation b = r1.render({90, 17});
    CHECK(a.tail(8) == b.tail(8));                       // constant nuisance
    CHECK(a.tail(8) == r2.render({3, 4}).tail(8));       // same seed, same draw
    CHECK(a.tail(8) != r3.render({3, 4}).tail(8));
    CHECK(a.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(*r1.cell_of(a) == Cell{3, 4});
}

TEST_CASE("grid env is deterministic per seed and action sequence") {
    const GridMap rooms = GridMap::builtin(MapKind::FourRooms);
    GridEnv e1(rooms, ObsKind::Sensor, {}, 5);
    GridEnv e2(rooms, ObsKind::Sensor, {}, 5);
    Rng r1 = make_rng(5, 1), r2 = make_rng(5, 1);
    Observation o1 = e1.reset(r1), o2 = e2.reset(r2);
    Rng act = make_rng(5, 2);
    for (int t = 0; t < 200; ++t) {
        CHECK(o1 == o2);
        const int a = uniform_int(act, 0, kGridActions - 1);
        o1 = e1.step(a);
        o2 = e2.step(a);
    }
    CHECK(o1 == o2);
}

TEST_CASE("grid env measures progress as BFS distance from start") {
    GridEnv env(GridMap::builtin(MapKind::Empty), ObsKind::Sensor, {}, 1);
    Rng rng = make_rng(1);
    env.reset(rng);
    CHECK(env.reached_value() == 0.0);
    env.step(3);
    env.step(3);
    env.step(0);
    CHECK(env.reached_value() == 3.0);
    env.step(2);  // stepping back shrinks the instantaneous value
    CHECK(env.reached_value() == 2.0);
}

TEST_CASE("mountain car follows the classic deterministic update") {
    MountainCar car;
    Rng rng = make_rng(11);
    car.reset(rng);
    CHECK(car.position() >= -0.6);
    CHECK(car.position() <= -0.4);
    CHECK(car.velocity() == 0.0);

    double p = car.position(), v = car.velocity();
    for (int t = 0; t < 500; ++t) {
        const int a = t % 3;
        car.step(a);
        v += (a - 1) * 0.001 + std::cos(3 * p) * (-0.0025);
        v = std::clamp(v, -0.07, 0.07);
        p += v;
        if (p < -1.2) {
            p = -1.2;
            v = 0.0;
        }
        if (p > 0.6) p = 0.6;
        CHECK(car.position() == doctest::Approx(p).epsilon(1e-12));
        CHECK(car.velocity() == doctest::Approx(v).epsilon(1e-12));
    }

    const Observation obs = car.observe();
    CHECK(obs.size() == 2);
    CHECK(obs.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(MountainCar::position_of(obs) == doctest::Approx(car.position()).epsilon(1e-12));
}

TEST_CASE("mountain car goal test is the position threshold") {
    MountainCarEnv env;
    Rng rng = make_rng(3);
    env.reset(rng);
    const auto reached = *env.exact_goal_test();
    const Observation goal = env.goal_observation();
    CHECK(MountainCar::position_of(goal) == doctest::Approx(0.5));
    CHECK_FALSE(reached(env.step(1), goal));
    MountainCar top;
    // Position responds within bounds; fabricate a summit observation.
    Observation summit(2);
    summit << 2.0 * (0.55 - -1.2) / (0.6 - -1.2) - 1.0, 0.0;
    CHECK(reached(summit, goal));
}
