#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "pollmster/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitBackend = 4;

struct CliOptions {
  std::string config_path;
  std::string out_dir;     // overrides the config's output_dir when set
  std::string family;      // empty: all families from the config
  bool use_mock = false;
};

pollmster::PipelineConfig load_config(const CliOptions& opts) {
  pollmster::PipelineConfig config = pollmster::PipelineConfig::load(opts.config_path);
  if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
  return config;
}

int dispatch(const std::string& command, const CliOptions& opts) {
  pollmster::PipelineConfig config = load_config(opts);
  pollmster::RunLayout layout = pollmster::make_layout(config);
  if (command == "ingest") {
    pollmster::cmd_ingest(config, layout);
  } else if (command == "annotate") {
    pollmster::cmd_annotate(config, layout, opts.use_mock, opts.family);
  } else if (command == "extract") {
    pollmster::cmd_extract(config, layout, opts.family);
  } else if (command == "aggregate") {
    pollmster::cmd_aggregate(config, layout, opts.family);
  } else if (command == "polls") {
    pollmster::cmd_polls(config, layout);
  } else if (command == "compare") {
    pollmster::cmd_compare(config, layout);
  } else {
    pollmster::run_all(config, layout, opts.use_mock, opts.family);
  }
  std::printf("%s: ok, outputs in %s\n", command.c_str(), layout.run_dir.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"social-post sentiment to vote-share forecasting pipeline"};
  app.require_subcommand(1);

  CliOptions opts;
  std::string chosen;
  auto add_common = [&](CLI::App* sub, bool with_family, bool with_mock) {
    sub->add_option("--config", opts.config_path, "pipeline config file (json)")
        ->required();
    sub->add_option("--out", opts.out_dir, "override the config's output directory");
    if (with_family)
      sub->add_option("--family", opts.family, "prompt family to run (llama2|zephyr)");
    if (with_mock)
      sub->add_flag("--mock", opts.use_mock, "use the scripted mock backend instead of HTTP");
    sub->callback([&, sub] { chosen = sub->get_name(); });
  };

  add_common(app.add_subcommand("ingest", "load, deduplicate, and query-filter the corpus"),
             false, false);
  add_common(app.add_subcommand("annotate", "send prompts to the completion backend"), true,
             true);
  add_common(app.add_subcommand("extract", "recover mentions from checkpointed model output"),
             true, false);
  add_common(app.add_subcommand("aggregate", "aggregate sentiment and compute vote shares"), true,
             false);
  add_common(app.add_subcommand("polls", "convert pollster ranges into consensus tables"), false,
             false);
  add_common(app.add_subcommand("compare", "score predictions against actual results"), false,
             false);
  add_common(app.add_subcommand("run-all", "run the full pipeline"), true, true);

  CLI11_PARSE(app, argc, argv);

  try {
    return dispatch(chosen, opts);
  } catch (const pollmster::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const pollmster::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const pollmster::BackendError& e) {
    std::fprintf(stderr, "backend error: %s\n", e.what());
    return kExitBackend;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
