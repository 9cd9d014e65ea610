// Command-line front end for the ospca shared library. Deliberately thin: all
// argument handling happens here, all computation behind the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "ospca.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;       // validation / configuration / IO problems
constexpr int kExitNumerical = 2;   // solver or pipeline numerics failed

int exit_code_for(ospca_status status) {
  switch (status) {
    case OSPCA_OK:
      return kExitOk;
    case OSPCA_ERR_NUMERICAL:
      return kExitNumerical;
    default:
      return kExitUsage;
  }
}

int fail(ospca_status status) {
  std::fprintf(stderr, "error: %s\n", ospca_last_error());
  return exit_code_for(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"objective-sensitive spectral decomposition experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seed;
  std::string out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "configuration file (flat key=value lines)");
  app.add_option("--set", overrides, "override one configuration key (repeatable)")->type_name("KEY=VALUE");
  app.add_option("--seed", seed, "master seed, shorthand for --set seed=...");
  app.add_option("--out", out_dir, "output directory, shorthand for --set out.dir=...");

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"generate", "write the train/test datasets"},
      {"pca", "fit the plain second-moment basis"},
      {"gspca", "fit the gradient-weighted basis"},
      {"agspca", "first-order gradient-weighted refit"},
      {"egspca", "gradient-ranked basis extension"},
      {"simulate", "solve the forward model for one field"},
      {"gradient", "compute both objective gradients at the trial point"},
      {"train-scores", "training-set encoding scores for all algorithms"},
      {"test-scores", "held-out truncation scores for all algorithms"},
      {"descend", "gradient descent restricted to the selected subspace"},
  };
  // fallthrough() lets global options (--config, --set, ...) appear after the
  // stage name, which is how the commands read most naturally.
  for (const auto& [name, description] : stages) app.add_subcommand(name, description)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n\n%s", e.what(), app.help().c_str());
    return kExitUsage;
  }

  ospca_config* config = nullptr;
  ospca_status status = config_path.empty() ? ospca_config_create(&config)
                                            : ospca_config_load(config_path.c_str(), &config);
  if (status != OSPCA_OK) return fail(status);

  // --seed/--out are shorthands and win over --set entries.
  for (const std::string& assignment : overrides) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects KEY=VALUE, got '%s'\n", assignment.c_str());
      ospca_config_free(config);
      return kExitUsage;
    }
    status = ospca_config_set(config, assignment.substr(0, eq).c_str(), assignment.substr(eq + 1).c_str());
    if (status != OSPCA_OK) {
      const int code = fail(status);
      ospca_config_free(config);
      return code;
    }
  }
  if (!seed.empty()) status = ospca_config_set(config, "seed", seed.c_str());
  if (status == OSPCA_OK && !out_dir.empty()) status = ospca_config_set(config, "out.dir", out_dir.c_str());
  if (status != OSPCA_OK) {
    const int code = fail(status);
    ospca_config_free(config);
    return code;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  if (stage == "generate") {
    status = ospca_run_generate(config);
  } else if (stage == "pca") {
    status = ospca_run_pca(config);
  } else if (stage == "gspca") {
    status = ospca_run_gspca(config);
  } else if (stage == "agspca") {
    status = ospca_run_agspca(config);
  } else if (stage == "egspca") {
    status = ospca_run_egspca(config);
  } else if (stage == "simulate") {
    status = ospca_run_simulate(config);
  } else if (stage == "gradient") {
    status = ospca_run_gradient(config);
  } else if (stage == "train-scores") {
    status = ospca_run_train_scores(config, nullptr);
  } else if (stage == "test-scores") {
    status = ospca_run_test_scores(config, nullptr);
  } else {
    status = ospca_run_descend(config);
  }

  int code = kExitOk;
  if (status != OSPCA_OK) {
    code = fail(status);
  } else {
    char dir[4096];
    if (ospca_config_get(config, "out.dir", dir, sizeof dir, nullptr) == OSPCA_OK)
      std::printf("%s: wrote %s\n", stage.c_str(), dir);
  }
  ospca_config_free(config);
  return code;
}
