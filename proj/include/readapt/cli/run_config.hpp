#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "readapt/data/io.hpp"
#include "readapt/data/resplit.hpp"
#include "readapt/data/synthetic.hpp"
#include "readapt/training/config.hpp"

namespace readapt {

/// Every knob of every subcommand, resolved from defaults, then a flat
/// key=value file, then command-line overrides. Unknown keys are errors.
struct RunConfig {
  TrainConfig train;
  SyntheticConfig synth;
  std::string seen_fraction = "0.6";  // a share in (0,1), or "reference"
  double resplit_tolerance = 0.03;
  std::size_t resplit_retries = 1000;

  std::string corpus;      // corpus directory (gen-synth output)
  std::string split;       // split directory (resplit output)
  std::string checkpoint;  // model checkpoint file
  std::string baseline;    // baseline-finetune checkpoint supplying pseudo targets
  std::string variant = "adversarial-adapter-recon";
  std::string variants = "all";  // comma list or "all"
  std::size_t folds = 10;
  std::string counts;      // comma list of relation counts; empty = quarters of the seen set
  std::size_t budget = 0;  // training-sample cap for the ablation; 0 = none
  std::string kbqa_part = "all";  // test_seen | test_unseen | all
  std::string runs_dir = "runs";

  std::uint64_t seed() const { return train.seed; }

  ResplitOptions resplit_options() const {
    ResplitOptions o;
    if (seen_fraction == "reference") {
      o.targets = SplitTargets::reference();
    } else {
      double f = 0;
      if (!parse_real(seen_fraction, f)) throw ContractError("config: 'seen_fraction' expects a number or 'reference'");
      o.targets = SplitTargets::with_seen_fraction(f);
    }
    o.tolerance = resplit_tolerance;
    o.max_retries = resplit_retries;
    return o;
  }

  std::vector<ModelVariant> variant_list() const {
    if (variants == "all") return {kAllVariants.begin(), kAllVariants.end()};
    std::vector<ModelVariant> out;
    for (auto v : split_on(variants, ',')) out.push_back(parse_variant(v));
    require(!out.empty(), "config: 'variants' is empty");
    return out;
  }

  std::vector<std::size_t> count_list() const {
    std::vector<std::size_t> out;
    if (counts.empty()) return out;
    for (auto c : split_on(counts, ',')) {
      std::size_t n = 0;
      if (!parse_size(c, n)) throw ContractError("config: 'counts' expects comma-separated counts");
      out.push_back(n);
    }
    return out;
  }

  std::map<std::string, std::string> to_map() const {
    auto m = train.to_map();
    auto real = [](double v) { return format_real(v); };
    auto count = [](std::size_t v) { return std::to_string(v); };
    m["synth_relations"] = count(synth.relations);
    m["synth_entities"] = count(synth.entities);
    m["synth_samples"] = count(synth.samples);
    m["synth_dim"] = count(synth.dim);
    m["synth_relation_dim"] = count(synth.relation_dim);
    m["synth_properties_per_type"] = count(synth.properties_per_type);
    m["synth_property_vocabulary"] = count(synth.property_vocabulary);
    m["synth_shared_cues"] = synth.shared_cues ? "1" : "0";
    m["synth_question_noise"] = real(synth.question_noise);
    m["synth_relation_noise"] = real(synth.relation_noise);
    m["synth_name_noise"] = real(synth.name_noise);
    m["synth_cue_noise"] = real(synth.cue_noise);
    m["synth_ambiguous_alias_rate"] = real(synth.ambiguous_alias_rate);
    m["seen_fraction"] = seen_fraction;
    m["resplit_tolerance"] = real(resplit_tolerance);
    m["resplit_retries"] = count(resplit_retries);
    m["corpus"] = corpus;
    m["split"] = split;
    m["checkpoint"] = checkpoint;
    m["baseline"] = baseline;
    m["variant"] = variant;
    m["variants"] = variants;
    m["folds"] = count(folds);
    m["counts"] = counts;
    m["budget"] = count(budget);
    m["kbqa_part"] = kbqa_part;
    m["runs_dir"] = runs_dir;
    return m;
  }

  /// Sets one key; throws ContractError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value) {
    if (train.set(key, value)) return;
    auto real = [&](double& f) {
      if (!parse_real(value, f)) throw ContractError("config: '" + key + "' expects a number");
    };
    auto count = [&](std::size_t& f) {
      if (!parse_size(value, f)) throw ContractError("config: '" + key + "' expects a count");
    };
    auto flag = [&](bool& f) {
      if (value != "0" && value != "1" && value != "true" && value != "false")
        throw ContractError("config: '" + key + "' expects 0/1");
      f = value == "1" || value == "true";
    };
    if (key == "synth_relations") count(synth.relations);
    else if (key == "synth_entities") count(synth.entities);
    else if (key == "synth_samples") count(synth.samples);
    else if (key == "synth_dim") count(synth.dim);
    else if (key == "synth_relation_dim") count(synth.relation_dim);
    else if (key == "synth_properties_per_type") count(synth.properties_per_type);
    else if (key == "synth_property_vocabulary") count(synth.property_vocabulary);
    else if (key == "synth_shared_cues") flag(synth.shared_cues);
    else if (key == "synth_question_noise") real(synth.question_noise);
    else if (key == "synth_relation_noise") real(synth.relation_noise);
    else if (key == "synth_name_noise") real(synth.name_noise);
    else if (key == "synth_cue_noise") real(synth.cue_noise);
    else if (key == "synth_ambiguous_alias_rate") real(synth.ambiguous_alias_rate);
    else if (key == "seen_fraction") seen_fraction = value;
    else if (key == "resplit_tolerance") real(resplit_tolerance);
    else if (key == "resplit_retries") count(resplit_retries);
    else if (key == "corpus") corpus = value;
    else if (key == "split") split = value;
    else if (key == "checkpoint") checkpoint = value;
    else if (key == "baseline") baseline = value;
    else if (key == "variant") variant = value;
    else if (key == "variants") variants = value;
    else if (key == "folds") count(folds);
    else if (key == "counts") counts = value;
    else if (key == "budget") count(budget);
    else if (key == "kbqa_part") kbqa_part = value;
    else if (key == "runs_dir") runs_dir = value;
    else throw ContractError("config: unknown key '" + key + "'");
  }

  /// Canonical text: sorted key=value lines. Hashing and the echoed
  /// resolved config both use this form.
  std::string to_text() const {
    std::string s;
    for (const auto& [k, v] : to_map()) s += k + "=" + v + "\n";
    return s;
  }
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Reads a key=value file into `cfg`. Blank lines and lines starting with
/// '#' are skipped; a key may appear once.
inline void load_config_file(RunConfig& cfg, const fs::path& path) {
  auto in = open_in(path);
  std::map<std::string, std::size_t> where;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), lineno, "expected key=value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ParseError(path.string(), lineno, "empty key");
    if (auto [it, fresh] = where.emplace(key, lineno); !fresh)
      throw ParseError(path.string(), lineno, "key '" + key + "' already set on line " + std::to_string(it->second));
    try {
      cfg.set(key, value);
    } catch (const ContractError& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// runs_dir/<command>-s<seed>-<16 hex digits of the config hash>.
inline fs::path content_addressed_dir(const std::string& command, const RunConfig& cfg) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a(command + "\n" + cfg.to_text())));
  return fs::path(cfg.runs_dir) / (command + "-s" + std::to_string(cfg.seed()) + "-" + hex);
}

inline void write_resolved_config(const std::string& command, const RunConfig& cfg, const fs::path& dir) {
  auto out = open_out(dir / "config.resolved");
  out << "# command=" << command << '\n' << cfg.to_text();
  close_checked(out, dir / "config.resolved");
}

}  // namespace readapt
