// Command-line front end: data generation, training, evaluation, the
// ablation suite and post-hoc analyses.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "objreason/analysis.hpp"
#include "objreason/harness/ablation.hpp"
#include "objreason/scenes/vocab.hpp"

using namespace objreason;
namespace fs = std::filesystem;

namespace {

TrainConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  auto kv = KeyValueConfig::load(path);
  for (const auto& s : overrides) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv.set(s.substr(0, eq), s.substr(eq + 1));
  }
  return TrainConfig::from(kv);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

std::vector<int> first_n(const std::vector<int>& idx, int n) {
  return {idx.begin(), idx.begin() + std::min<std::ptrdiff_t>(n, static_cast<std::ptrdiff_t>(idx.size()))};
}

nlohmann::json attention_json(const Experiment& ex, const std::vector<int>& episodes, int layer, int head) {
  nlohmann::json out = nlohmann::json::array();
  for (int i : episodes) {
    const auto& ep = ex.episode(i);
    const auto trace = attention_trace(ex, ex.params, i);
    std::vector<int> heads;
    if (head >= 0) heads = {head};
    for (int h = 0; head < 0 && h < trace.heads(); ++h) heads.push_back(h);
    nlohmann::json e{{"episode", i}, {"category", to_string(ep.category)}};
    for (int h : heads) {
      nlohmann::json words = nlohmann::json::array(), frames = nlohmann::json::array();
      for (const auto& w : word_object_attention(trace, layer, h)) {
        words.push_back({{"position", w.position}, {"word", Vocab::token(w.word)}, {"frame", w.frame}, {"slot", w.slot},
                         {"weight", w.weight}});
      }
      for (const auto& f : cls_object_attention(trace, layer, h)) {
        nlohmann::json top = nlohmann::json::array();
        for (const auto& s : f) top.push_back({{"slot", s.slot}, {"weight", s.weight}});
        frames.push_back(top);
      }
      e["heads"].push_back({{"head", h}, {"word_to_object", words}, {"cls_top_objects", frames}});
    }
    out.push_back(e);
  }
  return out;
}

int run_analysis(const std::string& ckpt_path, const std::string& report, const std::string& out_dir,
                 const std::string& split, int layer, int head, int limit) {
  const auto ckpt = load_checkpoint(ckpt_path);
  const auto ex = experiment_from_checkpoint(ckpt);
  const auto& idx = ex.split(split);
  const fs::path out(out_dir);
  nlohmann::json j;
  if (report == "attention") {
    j = attention_json(ex, first_n(idx, limit), layer, head);
  } else if (report == "taxonomy") {
    if (ex.cfg.task != TaskKind::Collision) throw ConfigError("taxonomy report needs the collision task");
    const auto eval = evaluate(ex, ex.params, split, ckpt.step);
    j = counterfactual_taxonomy(ex.data->episodes, eval.predictions).to_json();
  } else if (report == "alignment") {
    std::vector<int> all(ex.data->episodes.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
    j = alignment_report(ex, ex.params, first_n(all, std::max(limit, 100)), ex.cfg.seed).to_json();
  } else if (report == "infill") {
    const auto eps = first_n(idx, limit);
    const auto probe = first_n(ex.splits.train, 1000);
    j["probe"] = infill_report(ex, ex.params, eps, probe, ex.cfg.seed).to_json();
    if (ex.cfg.aux.weight > 0) j["trained"] = infill_report(ex, ex.params, eps, {}, ex.cfg.seed).to_json();
    j["aux_weight"] = ex.cfg.aux.weight;
  } else {
    throw ConfigError("unknown report '" + report + "'");
  }
  write_json(out / (report + ".json"), j);
  std::cout << (out / (report + ".json")).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"object-embedding transformers for video reasoning"};
  app.require_subcommand(1);

  std::string config, ckpt, split = "test", out, report;
  std::vector<std::string> overrides;
  double selfsup_fraction = 0.5;
  int layer = -1, head = -1, limit = 50;

  auto* gen = app.add_subcommand("gen", "generate and save episodes");
  gen->add_option("--config", config, "key=value config")->required()->check(CLI::ExistingFile);
  gen->add_option("--set", overrides, "override key=value");
  gen->add_option("--out", out, "dataset directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train and write checkpoints and metrics");
  train_cmd->add_option("--config", config)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--set", overrides);
  train_cmd->add_option("--out", out, "overrides out=");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", split);

  auto* ablate = app.add_subcommand("ablate", "architecture and self-supervision ablations");
  ablate->add_option("--config", config)->required()->check(CLI::ExistingFile);
  ablate->add_option("--set", overrides);
  ablate->add_option("--selfsup-fraction", selfsup_fraction, "labeled fraction for the masking grid");
  ablate->add_option("--out", out, "write the table as JSON");

  auto* analyze = app.add_subcommand("analyze", "post-hoc analyses of a checkpoint");
  analyze->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  analyze->add_option("--report", report)->required()->check(CLI::IsMember({"attention", "taxonomy", "alignment", "infill"}));
  analyze->add_option("--out", out)->required();
  analyze->add_option("--split", split);
  analyze->add_option("--layer", layer, "negative counts from the last layer");
  analyze->add_option("--head", head, "-1 reports every head");
  analyze->add_option("--episodes", limit, "episodes to analyze");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const auto cfg = load_config(config, overrides);
      KeyValueConfig scene = cfg.scene;
      if (!scene.has("render")) scene.set("render", cfg.encoder == EncoderKind::Oracle ? "false" : "true");
      const auto eps = generate_episodes(cfg.task, scene, cfg.episodes, cfg.data_seed);
      write_dataset(out, eps, {{"task", to_string(cfg.task)}, {"episodes", cfg.episodes}, {"seed", cfg.data_seed},
                               {"scene", scene.serialize()}});
      std::cout << eps.size() << " episodes -> " << out << "\n";
    } else if (*train_cmd) {
      auto cfg = load_config(config, overrides);
      if (!out.empty()) cfg = cfg.with("out", out);
      const auto res = train(cfg, [](const MetricsRecord& r) { std::cout << r.to_line() << std::endl; });
      if (!cfg.out_dir.empty()) std::cerr << "checkpoint: " << (fs::path(cfg.out_dir) / "final.ckpt").string() << "\n";
      (void)res;
    } else if (*eval_cmd) {
      std::cout << evaluate_checkpoint(ckpt, split).metrics.to_line() << "\n";
    } else if (*ablate) {
      const auto cfg = load_config(config, overrides);
      const auto table = run_ablation_suite(cfg, selfsup_fraction, [](const AblationRow& row) {
        std::cerr << row.group << "/" << row.name << ": " << row.metrics.to_line() << "\n";
      });
      std::cout << table.to_text();
      if (!out.empty()) write_json(out, table.to_json());
    } else if (*analyze) {
      return run_analysis(ckpt, report, out, split, layer, head, limit);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
