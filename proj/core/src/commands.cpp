#include "toma/commands.hpp"

#include "toma/planner.hpp"
#include "toma/version.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>

namespace toma {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

Config load_config(const CommandArgs& args) {
    Config cfg;
    if (!args.config_file.empty()) cfg.load_file(args.config_file);
    if (args.seed) cfg.set("run.seeds", std::to_string(*args.seed));
    if (args.threads) cfg.set("run.threads", std::to_string(*args.threads));
    return cfg;
}

void ensure_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir);
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(1) << '\n';
}

nlohmann::json read_artifact(const std::string& path, const char* what) {
    if (path.empty())
        throw ArtifactError(std::string(what) + ": no input path configured");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError(std::string(what) + ": cannot open " + path);
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const std::exception& e) {
        throw ArtifactError(path + ": " + e.what());
    }
}

nlohmann::json base_artifact(const RunSetup& setup, std::uint64_t seed) {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = hash_hex(setup.config_hash);
    j["seed"] = seed;
    return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// generate-graph

GraphBuild build_graph_from_random_walks(const RunSetup& setup, std::uint64_t seed) {
    if (setup.task != "grid")
        throw ConfigError("generate-graph requires run.task = grid");
    auto env = setup.make_grid_env(seed, setup.gen_random_spawn);
    Rng init_rng = make_rng(seed, 10);
    GraphBuild out;
    out.ensemble =
        std::make_unique<EmbeddingEnsemble>(setup.explore.embed, env->obs_dim(), init_rng);
    out.graph = std::make_unique<LandmarkGraph>(setup.explore.graph);
    PairPool pool(setup.explore.embed.pool_capacity);

    Rng reset_rng = make_rng(seed, 1), act_rng = make_rng(seed, 2);
    Rng pair_rng = make_rng(seed, 3), embed_rng = make_rng(seed, 4);
    const EmbedConfig& ec = setup.explore.embed;

    // Episodes retained for the consolidation replay, newest kept first when
    // the memory cap bites (late vertices are the ones that still need edges).
    std::deque<std::shared_ptr<const Trajectory>> kept;
    std::size_t kept_bytes = 0;
    const std::size_t kept_cap =
        static_cast<std::size_t>(std::max(0, setup.gen_replay_memory_mb)) << 20;

    for (int episode = 0; episode < setup.gen_episodes; ++episode) {
        auto traj = std::make_shared<const Trajectory>(
            random_rollout(*env, setup.gen_steps, reset_rng, act_rng));
        for (auto& p : sample_pairs(traj, ec.radius, ec.alpha, ec.pairs_per_trajectory, pair_rng))
            pool.push(std::move(p));
        if (setup.gen_replay_passes > 0) {
            const std::size_t bytes =
                static_cast<std::size_t>(traj->states()) * env->obs_dim() * sizeof(double);
            kept.push_back(traj);
            kept_bytes += bytes;
            while (kept_bytes > kept_cap && !kept.empty()) {
                kept_bytes -= static_cast<std::size_t>(kept.front()->states()) * env->obs_dim() *
                              sizeof(double);
                kept.pop_front();
            }
        }
        // The first episodes only train the embedding, and train it hard;
        // landmarks placed and judged while the metric is still finding its
        // scale end up stranded once it settles.
        const bool warm = episode < setup.gen_warmup;
        const int steps = warm ? setup.gen_warmup_steps : ec.steps_per_iteration;
        for (int s = 0; s < steps; ++s) out.ensemble->train_step(pool, embed_rng);
        if (warm) continue;
        if (!out.graph->initialized())
            out.graph->initialize(*out.ensemble, ObsPtr(traj, &traj->observations[0]));
        else
            out.graph->rebuild_index(*out.ensemble);
        out.graph->ingest(*out.ensemble, traj, &out.totals, nullptr);
    }

    // Consolidation: replay the stored episodes against the final embedding.
    // A single online pass leaves the graph ragged at this episode budget —
    // a vertex born from an excursion gets its only edge cut when the
    // temporal neighbor is remote, and late births never see a second visit.
    // Replaying lets those states label into the now-existing balls, which
    // stitches short edge chains and fills the last coverage gaps.
    for (int pass = 0; pass < setup.gen_replay_passes && out.graph->initialized(); ++pass) {
        out.graph->rebuild_index(*out.ensemble);
        for (const auto& traj : kept) out.graph->ingest(*out.ensemble, traj, &out.totals, nullptr);
    }
    return out;
}

// Map-oracle quality report for a built graph: what fraction of edges join
// landmarks that really are close on the grid, and how much of the free space
// the landmarks cover. Only possible when landmark cells are recoverable.
struct GraphReport {
    int edges = 0;
    int edges_within = 0;   // true distance <= 4r
    int edges_far = 0;      // true distance > 8r
    double coverage = 0.0;  // free cells within 2r of a landmark
    bool available = false;
};

static GraphReport grid_graph_report(const RunSetup& setup, const GridMap& map,
                                     const LandmarkGraph& graph) {
    GraphReport rep;
    if (setup.obs_kind != ObsKind::Sensor && setup.obs_kind != ObsKind::NoisySensor) return rep;
    const ObservationRenderer renderer(setup.obs_kind, map, setup.obs_params, 0);
    std::map<int, Cell> cells;
    for (const auto& [id, v] : graph.vertices()) {
        const auto c = renderer.cell_of(*v.landmark);
        if (c && map.free_cell(*c)) cells[id] = *c;
    }
    const double r = setup.explore.embed.radius;
    for (const auto& [a, b] : graph.edges()) {
        if (!cells.count(a) || !cells.count(b)) continue;
        ++rep.edges;
        const int d = true_grid_distance(map, cells.at(a), cells.at(b));
        if (d <= 4 * r) ++rep.edges_within;
        if (d > 8 * r) ++rep.edges_far;
    }
    // Multi-source BFS from all landmarks.
    std::vector<int> dist(static_cast<std::size_t>(map.width()) * map.height(), kUnreachable);
    std::deque<Cell> queue;
    for (const auto& [id, c] : cells) {
        dist[static_cast<std::size_t>(c.y) * map.width() + c.x] = 0;
        queue.push_back(c);
    }
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        const int d = dist[static_cast<std::size_t>(c.y) * map.width() + c.x];
        const Cell around[4] = {{c.x, c.y + 1}, {c.x, c.y - 1}, {c.x - 1, c.y}, {c.x + 1, c.y}};
        for (const Cell n : around)
            if (map.free_cell(n) &&
                dist[static_cast<std::size_t>(n.y) * map.width() + n.x] == kUnreachable) {
                dist[static_cast<std::size_t>(n.y) * map.width() + n.x] = d + 1;
                queue.push_back(n);
            }
    }
    long covered = 0, free_total = 0;
    for (const Cell c : map.free_cells()) {
        ++free_total;
        if (dist[static_cast<std::size_t>(c.y) * map.width() + c.x] <= 2 * r) ++covered;
    }
    rep.coverage = free_total ? static_cast<double>(covered) / free_total : 0.0;
    rep.available = true;
    return rep;
}

int cmd_generate_graph(const CommandArgs& args) {
    Config cfg = load_config(args);
    const RunSetup setup = resolve_setup(cfg);
    ensure_out(args.out_dir);
    const GridMap map = setup.make_map();

    std::string csv =
        "seed,vertices,edges,components,labeled,added,merged,edges_added,edges_cut,"
        "edge_accuracy,edges_beyond_8r,coverage\n";
    double worst_accuracy = 1.0;
    for (const std::uint64_t seed : setup.seeds) {
        GraphBuild b = build_graph_from_random_walks(setup, seed);
        const std::string tag = "_seed" + std::to_string(seed);

        nlohmann::json jg = base_artifact(setup, seed);
        jg["graph"] = b.graph->to_json(b.ensemble.get());
        write_json_file(args.out_dir + "/graph" + tag + ".json", jg);

        nlohmann::json je = base_artifact(setup, seed);
        je["ensemble"] = b.ensemble->to_json();
        write_json_file(args.out_dir + "/embedding" + tag + ".json", je);

        std::ofstream dot(args.out_dir + "/graph" + tag + ".dot");
        b.graph->write_dot(dot);

        const int comps = connected_components(*b.graph);
        const GraphReport rep = grid_graph_report(setup, map, *b.graph);
        const double accuracy =
            rep.edges ? static_cast<double>(rep.edges_within) / rep.edges : 1.0;
        if (rep.available) worst_accuracy = std::min(worst_accuracy, accuracy);
        csv += std::to_string(seed) + ',' + std::to_string(b.graph->vertex_count()) + ',' +
               std::to_string(b.graph->edge_count()) + ',' + std::to_string(comps) + ',' +
               std::to_string(b.totals.labeled) + ',' + std::to_string(b.totals.added) + ',' +
               std::to_string(b.totals.merged) + ',' + std::to_string(b.totals.edges_added) +
               ',' + std::to_string(b.totals.edges_cut) + ',' +
               (rep.available ? fmt_double(accuracy) : std::string("")) + ',' +
               (rep.available ? std::to_string(rep.edges_far) : std::string("")) + ',' +
               (rep.available ? fmt_double(rep.coverage) : std::string("")) + '\n';
        std::printf("seed %" PRIu64 ": %d vertices, %d edges, %d component%s", seed,
                    b.graph->vertex_count(), b.graph->edge_count(), comps, comps == 1 ? "" : "s");
        if (rep.available)
            std::printf(", edge accuracy %.3f, coverage %.3f", accuracy, rep.coverage);
        std::printf("\n");
    }
    write_file(args.out_dir + "/summary.csv", csv);
    write_file(args.out_dir + "/config_resolved.txt", cfg.canonical());
    if (setup.gen_min_edge_accuracy > 0 && worst_accuracy < setup.gen_min_edge_accuracy) {
        std::fprintf(stderr, "edge accuracy %.3f below required %.3f\n", worst_accuracy,
                     setup.gen_min_edge_accuracy);
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// plan-eval

int cmd_plan_eval(const CommandArgs& args) {
    Config cfg = load_config(args);
    const RunSetup setup = resolve_setup(cfg);
    if (setup.task != "grid") throw ConfigError("plan-eval requires run.task = grid");
    if (setup.obs_kind != ObsKind::Sensor && setup.obs_kind != ObsKind::NoisySensor)
        throw ConfigError("plan-eval requires a coordinate observation kind");
    ensure_out(args.out_dir);

    const nlohmann::json jg = read_artifact(setup.plan_graph, "plan.graph");
    const nlohmann::json je = read_artifact(setup.plan_embedding, "plan.embedding");
    LandmarkGraph graph = [&] {
        try {
            return LandmarkGraph::from_json(jg.at("graph"));
        } catch (const ArtifactError&) {
            throw;
        } catch (const std::exception& e) {
            throw ArtifactError(setup.plan_graph + ": " + e.what());
        }
    }();
    const EmbeddingEnsemble ens = [&] {
        try {
            return EmbeddingEnsemble::from_json(je.at("ensemble"));
        } catch (const std::exception& e) {
            throw ArtifactError(setup.plan_embedding + ": " + e.what());
        }
    }();
    graph.rebuild_index(ens);
    if (graph.vertex_count() == 0) throw ArtifactError("plan.graph: empty graph");

    const GridMap map = setup.make_map();
    // The renderer must reproduce the observations the graph was built from
    // (the noisy kind bakes run-constant features in), hence the stored seed.
    const std::uint64_t artifact_seed = jg.value("seed", setup.base_seed);
    const ObservationRenderer renderer(setup.obs_kind, map, setup.obs_params, artifact_seed);

    Rng task_rng = make_rng(setup.base_seed, 20);
    Rng walk_rng = make_rng(setup.base_seed, 21);
    const double range = setup.plan_controller_range;

    std::string tasks_csv =
        "task,start_x,start_y,goal_x,goal_y,bfs,success,steps,plan_hops,unreachable\n";
    std::vector<double> latencies_ms;
    int successes = 0;
    long hop_sum = 0, hop_count = 0;

    std::vector<int> field;
    Cell field_target{-1, -1};
    const auto field_for = [&](Cell target) -> const std::vector<int>& {
        if (!(target == field_target)) {
            field = distance_field(map, target);
            field_target = target;
        }
        return field;
    };
    const auto cell_dist = [&](const std::vector<int>& f, Cell c) {
        return f[static_cast<std::size_t>(c.y) * map.width() + c.x];
    };

    for (int task = 0; task < setup.plan_tasks; ++task) {
        const Cell start = map.random_free_cell(task_rng);
        const Cell goal = map.random_free_cell(task_rng);
        const int bfs = true_grid_distance(map, start, goal);

        const Observation start_obs = renderer.render(start);
        const Observation goal_obs = renderer.render(goal);

        const auto t0 = std::chrono::steady_clock::now();
        const VoteResult vs = graph.nearest(ens, start_obs);
        const VoteResult vg = graph.nearest(ens, goal_obs);
        Plan plan = make_plan(graph, vs.id, vg.id);
        latencies_ms.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count());
        const bool unreachable = !plan.valid();
        const int plan_hops = static_cast<int>(plan.path.size());
        if (!unreachable) {
            hop_sum += plan_hops;
            ++hop_count;
        }
        advance_plan(plan, vs.id);

        GridWorld world(map);
        world.reset(start);
        bool success = world.pos() == goal;
        int steps = 0;
        // Current target: next landmark on the plan; the true goal cell on
        // the final leg or when there is no plan.
        const auto target_of = [&](const Plan& p) -> Cell {
            if (p.valid() && p.cursor + 1 < p.path.size()) {
                const auto c = renderer.cell_of(*graph.vertex(p.subgoal()).landmark);
                if (c && map.free_cell(*c)) return *c;
            }
            return goal;
        };
        Cell bound_target{-1, -1};
        int bound_here = std::numeric_limits<int>::max();
        for (; steps < setup.plan_step_budget && !success; ++steps) {
            Cell target = target_of(plan);
            int here = cell_dist(field_for(target), world.pos());
            // Replanning is drift recovery, checked on a fixed cadence: if the
            // agent closed in on its target since the last check (or the leg
            // changed), the plan is working and stands. Replanning while a
            // long leg is still in progress would route back through a
            // landmark the controller has effectively passed.
            if (steps % setup.explore.replan_period == 0) {
                const bool progress = !(target == bound_target) || here < bound_here;
                if (steps > 0 && !progress) {
                    const int loc = graph.nearest(ens, renderer.render(world.pos())).id;
                    plan = make_plan(graph, loc, vg.id);
                    advance_plan(plan, loc);
                    target = target_of(plan);
                    here = cell_dist(field_for(target), world.pos());
                }
                bound_target = target;
                bound_here = here;
            }
            const auto& f = field_for(target);
            int action;
            if (here == kUnreachable || here > range) {
                action = uniform_int(walk_rng, 0, kGridActions - 1);  // out of local range
            } else {
                action = 0;
                int best = here;
                for (int a = 0; a < kGridActions; ++a) {
                    GridWorld probe = world;
                    const Cell next = probe.step(a);
                    const int d = cell_dist(f, next);
                    if (d < best) {
                        best = d;
                        action = a;
                    }
                }
            }
            world.step(action);
            if (world.pos() == goal) success = true;
            advance_plan(plan, graph.nearest(ens, renderer.render(world.pos())).id);
        }
        if (success) ++successes;
        tasks_csv += std::to_string(task) + ',' + std::to_string(start.x) + ',' +
                     std::to_string(start.y) + ',' + std::to_string(goal.x) + ',' +
                     std::to_string(goal.y) + ',' + std::to_string(bfs) + ',' +
                     (success ? "1" : "0") + ',' + std::to_string(steps) + ',' +
                     std::to_string(plan_hops) + ',' + (unreachable ? "1" : "0") + '\n';
    }

    const double rate = static_cast<double>(successes) / setup.plan_tasks;
    const double mean_hops = hop_count ? static_cast<double>(hop_sum) / hop_count : 0.0;
    write_file(args.out_dir + "/tasks.csv", tasks_csv);
    write_file(args.out_dir + "/summary.csv",
               "tasks,successes,success_rate,mean_path_hops\n" +
                   std::to_string(setup.plan_tasks) + ',' + std::to_string(successes) + ',' +
                   fmt_double(rate) + ',' + fmt_double(mean_hops) + '\n');
    write_file(args.out_dir + "/config_resolved.txt", cfg.canonical());

    std::sort(latencies_ms.begin(), latencies_ms.end());
    const auto pct = [&](double p) {
        const std::size_t i =
            std::min(latencies_ms.size() - 1,
                     static_cast<std::size_t>(p * static_cast<double>(latencies_ms.size())));
        return latencies_ms[i];
    };
    const double mean_ms =
        std::accumulate(latencies_ms.begin(), latencies_ms.end(), 0.0) / latencies_ms.size();
    char lat[256];
    std::snprintf(lat, sizeof lat,
                  "plan latency ms: mean %.4f p50 %.4f p95 %.4f max %.4f over %zu tasks\n",
                  mean_ms, pct(0.50), pct(0.95), latencies_ms.back(), latencies_ms.size());
    write_file(args.out_dir + "/latency.txt", lat);
    std::printf("%s", lat);
    std::printf("success %d/%d (%.1f%%)\n", successes, setup.plan_tasks, 100.0 * rate);
    if (setup.plan_min_success > 0 && rate < setup.plan_min_success) {
        std::fprintf(stderr, "success rate %.3f below required %.3f\n", rate,
                     setup.plan_min_success);
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// explore

int cmd_explore(const CommandArgs& args) {
    Config cfg = load_config(args);
    // Online exploration runs at a finer abstraction than offline graph
    // generation: with a small radius the landmark balls stay within the
    // agent's short-horizon reach, so subgoals are attainable from the start.
    cfg.set_default("embed.radius", "8");
    const RunSetup setup = resolve_setup(cfg);
    ensure_out(args.out_dir);
    ensure_out(args.out_dir + "/runs");
    ensure_out(args.out_dir + "/snapshots");
    ensure_out(args.out_dir + "/mean");
    write_file(args.out_dir + "/config_resolved.txt", cfg.canonical());

    {
        nlohmann::json info = base_artifact(setup, setup.base_seed);
        info["seeds"] = setup.seeds;
        nlohmann::json vars = nlohmann::json::array();
        for (const Variant v : setup.variants) vars.push_back(to_string(v));
        info["variants"] = std::move(vars);
        info["task"] = setup.task;
        write_json_file(args.out_dir + "/run_info.json", info);
    }

    const char* header =
        "iteration,iter_max_reached,max_reached,mean_reached_10,vertices,edges,embed_loss,"
        "td_loss,goal_attained\n";
    std::ofstream row_out;
    std::string open_key;
    const auto on_iteration = [&](const ExploreRun& run, const RunResult& rr) {
        const std::string key = to_string(rr.variant) + "_seed" + std::to_string(rr.seed);
        if (key != open_key) {
            if (row_out.is_open()) row_out.close();
            row_out.open(args.out_dir + "/runs/" + key + ".csv", std::ios::binary);
            row_out << header;
            open_key = key;
        }
        const IterationResult& it = rr.iterations.back();
        row_out << it.iteration << ',' << fmt_double(it.iter_max_reached) << ','
                << fmt_double(it.max_reached) << ',' << fmt_double(it.mean_reached_10) << ','
                << it.vertices << ',' << it.edges << ',' << fmt_double(it.embed_loss) << ','
                << fmt_double(it.td_loss) << ',' << (it.goal_attained ? 1 : 0) << '\n';
        row_out.flush();
        std::printf("%s iter %4d reached %.3f max %.3f |V| %d |E| %d (%.1fs)\n", key.c_str(),
                    it.iteration, it.iter_max_reached, it.max_reached, it.vertices, it.edges,
                    it.seconds);
        std::fflush(stdout);
        if (it.iteration == run.config().iterations)
            write_json_file(args.out_dir + "/snapshots/" + key + "_final.json", run.snapshot());
        else if (it.iteration % std::max(1, setup.snapshot_every) == 0)
            write_json_file(args.out_dir + "/snapshots/" + key + "_latest.json", run.snapshot());
    };

    const std::vector<RunResult> results =
        run_experiment(setup.explore, setup.variants, setup.seeds, setup.env_factory(),
                       on_iteration);
    if (row_out.is_open()) row_out.close();

    // Seed means per variant, aligned by iteration.
    for (const Variant variant : setup.variants) {
        std::vector<const RunResult*> runs;
        for (const auto& rr : results)
            if (rr.variant == variant) runs.push_back(&rr);
        if (runs.empty()) continue;
        std::string csv = "iteration,mean_iter_max_reached,mean_max_reached,mean_reached_10,seeds\n";
        for (int i = 0; i < setup.explore.iterations; ++i) {
            double sum_iter = 0, sum_max = 0, sum_mean10 = 0;
            int n = 0;
            for (const RunResult* rr : runs)
                if (i < static_cast<int>(rr->iterations.size())) {
                    sum_iter += rr->iterations[i].iter_max_reached;
                    sum_max += rr->iterations[i].max_reached;
                    sum_mean10 += rr->iterations[i].mean_reached_10;
                    ++n;
                }
            if (n == 0) break;
            csv += std::to_string(i + 1) + ',' + fmt_double(sum_iter / n) + ',' +
                   fmt_double(sum_max / n) + ',' + fmt_double(sum_mean10 / n) + ',' +
                   std::to_string(n) + '\n';
        }
        write_file(args.out_dir + "/mean/" + to_string(variant) + ".csv", csv);
    }

    std::string summary = "variant,seed,iterations,final_max_reached,final_mean_reached_10,goal_attained_any\n";
    for (const auto& rr : results) {
        if (rr.iterations.empty()) continue;
        bool any_goal = false;
        for (const auto& it : rr.iterations) any_goal = any_goal || it.goal_attained;
        const auto& last = rr.iterations.back();
        summary += to_string(rr.variant) + ',' + std::to_string(rr.seed) + ',' +
                   std::to_string(last.iteration) + ',' + fmt_double(last.max_reached) + ',' +
                   fmt_double(last.mean_reached_10) + ',' + (any_goal ? "1" : "0") + '\n';
    }
    write_file(args.out_dir + "/summary.csv", summary);
    return 0;
}

// ---------------------------------------------------------------------------
// export-embeddings

int cmd_export_embeddings(const CommandArgs& args) {
    Config cfg = load_config(args);
    const RunSetup setup = resolve_setup(cfg);
    ensure_out(args.out_dir);

    const nlohmann::json je = read_artifact(setup.export_embedding, "export.embedding");
    const EmbeddingEnsemble ens = [&] {
        try {
            return EmbeddingEnsemble::from_json(je.at("ensemble"));
        } catch (const std::exception& e) {
            throw ArtifactError(setup.export_embedding + ": " + e.what());
        }
    }();

    const int dim = ens.config().dim;
    std::string head = "member";
    long rows = 0;
    std::string csv;
    if (setup.task == "grid") {
        const GridMap map = setup.make_map();
        const std::uint64_t artifact_seed = je.value("seed", setup.base_seed);
        const ObservationRenderer renderer(setup.obs_kind, map, setup.obs_params, artifact_seed);
        head += ",x,y";
        for (int d = 0; d < dim; ++d) head += ",embed_" + std::to_string(d);
        csv = head + '\n';
        const int stride = std::max(1, setup.export_stride);
        for (int m = 0; m < ens.members(); ++m)
            for (int y = 0; y < map.height(); y += stride)
                for (int x = 0; x < map.width(); x += stride) {
                    const Cell c{x, y};
                    if (!map.free_cell(c)) continue;
                    const Eigen::VectorXd e = ens.embed(m, renderer.render(c));
                    csv += std::to_string(m) + ',' + std::to_string(x) + ',' + std::to_string(y);
                    for (int d = 0; d < dim; ++d) csv += ',' + fmt_double(e[d]);
                    csv += '\n';
                    ++rows;
                }
    } else {
        head += ",position,velocity";
        for (int d = 0; d < dim; ++d) head += ",embed_" + std::to_string(d);
        csv = head + '\n';
        const int pos_steps = 61, vel_steps = 15;
        for (int m = 0; m < ens.members(); ++m)
            for (int pi = 0; pi < pos_steps; ++pi)
                for (int vi = 0; vi < vel_steps; ++vi) {
                    const double pos = MountainCar::kMinPosition +
                                       (MountainCar::kMaxPosition - MountainCar::kMinPosition) *
                                           pi / (pos_steps - 1);
                    const double vel = -MountainCar::kMaxVelocity +
                                       2.0 * MountainCar::kMaxVelocity * vi / (vel_steps - 1);
                    Observation o(2);
                    o << 2.0 * (pos - MountainCar::kMinPosition) /
                             (MountainCar::kMaxPosition - MountainCar::kMinPosition) -
                             1.0,
                        vel / MountainCar::kMaxVelocity;
                    const Eigen::VectorXd e = ens.embed(m, o);
                    csv += std::to_string(m) + ',' + fmt_double(pos) + ',' + fmt_double(vel);
                    for (int d = 0; d < dim; ++d) csv += ',' + fmt_double(e[d]);
                    csv += '\n';
                    ++rows;
                }
    }
    write_file(args.out_dir + "/embeddings.csv", csv);
    std::printf("wrote %ld embedding rows (%d members)\n", rows, ens.members());
    return 0;
}

// ---------------------------------------------------------------------------
// export-graph

int cmd_export_graph(const CommandArgs& args) {
    Config cfg = load_config(args);
    const RunSetup setup = resolve_setup(cfg);
    ensure_out(args.out_dir);

    const nlohmann::json jg = read_artifact(setup.export_graph, "export.graph");
    const LandmarkGraph graph = [&] {
        try {
            return LandmarkGraph::from_json(jg.at("graph"));
        } catch (const std::exception& e) {
            throw ArtifactError(setup.export_graph + ": " + e.what());
        }
    }();

    std::ofstream dot(args.out_dir + "/graph.dot");
    graph.write_dot(dot);

    const bool coords = setup.task == "grid" &&
                        (setup.obs_kind == ObsKind::Sensor || setup.obs_kind == ObsKind::NoisySensor);
    std::string verts_csv = coords ? "id,visits,degree,x,y\n" : "id,visits,degree\n";
    std::unique_ptr<ObservationRenderer> renderer;
    std::unique_ptr<GridMap> map;
    if (coords) {
        map = std::make_unique<GridMap>(setup.make_map());
        renderer = std::make_unique<ObservationRenderer>(
            setup.obs_kind, *map, setup.obs_params, jg.value("seed", setup.base_seed));
    }
    for (const auto& [id, v] : graph.vertices()) {
        verts_csv += std::to_string(id) + ',' + std::to_string(v.visits) + ',' +
                     std::to_string(graph.neighbors(id).size());
        if (coords) {
            const auto c = renderer->cell_of(*v.landmark);
            verts_csv += ',' + std::to_string(c->x) + ',' + std::to_string(c->y);
        }
        verts_csv += '\n';
    }
    write_file(args.out_dir + "/vertices.csv", verts_csv);

    std::string edges_csv = "a,b\n";
    for (const auto& [a, b] : graph.edges())
        edges_csv += std::to_string(a) + ',' + std::to_string(b) + '\n';
    write_file(args.out_dir + "/edges.csv", edges_csv);

    std::printf("graph: %d vertices, %d edges, %d components\n", graph.vertex_count(),
                graph.edge_count(), connected_components(graph));
    return 0;
}

}  // namespace toma
