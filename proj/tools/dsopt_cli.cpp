#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "dsopt/cli.hpp"

namespace {

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace dsopt::cli;

  CLI::App app{"dsopt: objective-driven search over feature-value combinations of a trained classifier"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<double> omega;
  std::optional<std::size_t> zeta;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode, labels, out_dir;

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const RunConfig&, std::ostream&);
  };
  const Command commands[] = {
      {"generate", "write a synthetic dataset with a planted optimum", cmd_generate},
      {"train", "train the classifier M and write metrics and the split manifest", cmd_train},
      {"distill", "train the sensitivity surrogate DS from oracle scores", cmd_distill},
      {"optimize", "run the beam search and write SN, trace and top features", cmd_optimize},
      {"baseline", "run exhaustive and sequential baselines", cmd_baseline},
      {"compare", "merge search and baseline traces by stage", cmd_compare},
      {"sweep-omega", "run the search for each omega in the sweep grid", cmd_sweep_omega},
  };

  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--omega", omega, "blend weight in [0, 1]");
    sub->add_option("--zeta", zeta, "beam width");
    sub->add_option("--seed", seed, "global seed");
    sub->add_option("--mode", mode, "sensitivity source: oracle or surrogate");
    sub->add_option("--labels", labels, "comma-separated label column names");
    sub->add_option("--out", out_dir, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (omega) cfg.omega = *omega;
    if (zeta) cfg.zeta = *zeta;
    if (seed) cfg.seed = *seed;
    if (mode) cfg.mode = parse_mode(*mode);
    if (labels) cfg.labels = split_names(*labels);
    if (out_dir) cfg.out_dir = *out_dir;
    cfg.validate();
    for (const auto& c : commands)
      if (app.got_subcommand(c.name)) c.run(cfg, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
