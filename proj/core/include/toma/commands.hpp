#pragma once

#include "toma/config.hpp"
#include "toma/graph.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace toma {

// Bad or missing input artifact (graph/embedding files); distinct from config
// errors so the CLI can report it with its own exit code.
struct ArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommandArgs {
    std::string config_file;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

// Commands return 0 on success and 3 when a configured acceptance threshold
// is missed; they throw on failure — ConfigError for configuration problems
// (usage), ArtifactError or anything else for runtime errors. The CLI maps
// those onto exit codes 1 and 2.
int cmd_generate_graph(const CommandArgs& args);
int cmd_plan_eval(const CommandArgs& args);
int cmd_explore(const CommandArgs& args);
int cmd_export_embeddings(const CommandArgs& args);
int cmd_export_graph(const CommandArgs& args);

// The generate-graph pipeline, exposed for in-process reuse: random-walk
// episodes feed the embedding pool and the graph in lockstep.
struct GraphBuild {
    std::unique_ptr<EmbeddingEnsemble> ensemble;
    std::unique_ptr<LandmarkGraph> graph;
    IngestStats totals;
};

GraphBuild build_graph_from_random_walks(const RunSetup& setup, std::uint64_t seed);

// Deterministic shortest round-trip-safe double formatting for CSV cells.
std::string fmt_double(double v);

}  // namespace toma
