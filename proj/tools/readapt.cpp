// readapt: data generation, training and evaluation driver.
//
//   readapt <command> [--config PATH] [--seed N] [--out DIR] [--<key> VALUE ...]
//
// Settings resolve as defaults < config file < command-line flags. Every
// config key is also a flag. Errors print one line to stderr:
//   error: <kind>: <message>
// and exit nonzero.

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "readapt/cli/commands.hpp"

namespace {

using namespace readapt;

struct Command {
  const char* name;
  const char* help;
  std::function<std::string(const RunConfig&, const fs::path&)> run;
};

const Command kCommands[] = {
    {"gen-synth", "generate a synthetic corpus", cmd_gen_synth},
    {"resplit", "balanced five-way split of a corpus", cmd_resplit},
    {"train", "train one model variant", cmd_train},
    {"eval", "relation detection metrics of a checkpoint", cmd_eval},
    {"kbqa", "end-to-end question answering with exact-match linking", cmd_kbqa},
    {"ablate", "unseen accuracy against the number of training relations", cmd_ablate},
    {"pca", "2-D projection of relation representations", cmd_pca},
    {"crossval", "repeated seeded resplits with mean and std", cmd_crossval},
};

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

int fail(const char* kind, const std::string& msg, int code) {
  std::fprintf(stderr, "error: %s: %s\n", kind, one_line(msg).c_str());
  return code;
}

struct Parsed {
  std::string config;
  std::string seed;
  std::string out;
  std::map<std::string, std::string> overrides;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relation detection with representation adapters"};
  app.require_subcommand(1);
  const auto keys = RunConfig{}.to_map();
  std::map<std::string, Parsed> parsed;
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : kCommands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    auto& p = parsed[c.name];
    sub->add_option("--config", p.config, "key=value config file");
    sub->add_option("--seed", p.seed, "random seed");
    sub->add_option("--out", p.out, "output directory (default: content-addressed under runs_dir)");
    for (const auto& [key, def] : keys) {
      if (key == "seed") continue;
      sub->add_option("--" + key, p.overrides[key], "default: " + (def.empty() ? std::string("none") : def));
    }
    subs[c.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  for (const auto& c : kCommands) {
    auto* sub = subs[c.name];
    if (!sub->parsed()) continue;
    const auto& p = parsed[c.name];
    try {
      RunConfig cfg;
      if (!p.config.empty()) load_config_file(cfg, p.config);
      for (const auto& [key, value] : p.overrides)
        if (sub->count("--" + key)) cfg.set(key, value);
      if (sub->count("--seed")) cfg.set("seed", p.seed);
      cfg.train.validate();
      const fs::path out = p.out.empty() ? content_addressed_dir(c.name, cfg) : fs::path(p.out);
      fs::create_directories(out);
      write_resolved_config(c.name, cfg, out);
      const std::string summary = c.run(cfg, out);
      std::printf("%s: %s\n", out.string().c_str(), summary.c_str());
      return 0;
    } catch (const ParseError& e) {
      return fail("parse", e.what(), 3);
    } catch (const IoError& e) {
      return fail("io", e.what(), 4);
    } catch (const InfeasibleError& e) {
      return fail("infeasible", e.what(), 5);
    } catch (const DegeneracyError& e) {
      return fail("degenerate", e.what(), 6);
    } catch (const DimensionError& e) {
      return fail("dimension", e.what(), 7);
    } catch (const ContractError& e) {
      return fail("contract", e.what(), 2);
    } catch (const fs::filesystem_error& e) {
      return fail("io", e.what(), 4);
    } catch (const std::exception& e) {
      return fail("internal", e.what(), 1);
    }
  }
  return fail("usage", "no command given", 2);
}
