// toma CLI: graph construction, planning evaluation, exploration runs, and
// artifact exports, all driven by a key=value config file.

#include "toma/commands.hpp"
#include "toma/version.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <string>

namespace {

void add_common(CLI::App* cmd, toma::CommandArgs& args, bool config_required = true) {
    auto* opt = cmd->add_option("-c,--config", args.config_file, "key = value config file");
    if (config_required) opt->required();
    cmd->add_option("-o,--out", args.out_dir, "output directory")->capture_default_str();
    cmd->add_option("-s,--seed", args.seed, "override run.seeds with a single seed");
    cmd->add_option("-t,--threads", args.threads, "override run.threads");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"topological landmark maps for sparse-reward exploration"};
    app.set_version_flag("--version", toma::kToolVersion);
    app.require_subcommand(1);

    toma::CommandArgs args;
    std::function<int(const toma::CommandArgs&)> run;

    auto* gen = app.add_subcommand("generate-graph",
                                   "build a landmark graph from random-walk episodes");
    add_common(gen, args);
    gen->callback([&] { run = toma::cmd_generate_graph; });

    auto* plan = app.add_subcommand("plan-eval",
                                    "evaluate point-to-point planning over a saved graph");
    add_common(plan, args);
    plan->callback([&] { run = toma::cmd_plan_eval; });

    auto* explore = app.add_subcommand("explore", "run goal-driven exploration");
    add_common(explore, args);
    explore->callback([&] { run = toma::cmd_explore; });

    auto* exp_emb = app.add_subcommand("export-embeddings",
                                       "dump a saved embedding over the state space as CSV");
    add_common(exp_emb, args);
    exp_emb->callback([&] { run = toma::cmd_export_embeddings; });

    auto* exp_graph = app.add_subcommand("export-graph",
                                         "dump a saved graph as DOT and CSV");
    add_common(exp_graph, args);
    exp_graph->callback([&] { run = toma::cmd_export_graph; });

    // Exit codes: 0 ok, 1 usage, 2 runtime, 3 acceptance threshold missed.
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        return run(args);
    } catch (const toma::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const toma::ArtifactError& e) {
        std::fprintf(stderr, "artifact error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
