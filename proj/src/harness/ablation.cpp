#include "objreason/harness/ablation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace objreason {

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::vector<AblationVariant> ablation_variants(const TrainConfig& base, int frames, double selfsup_fraction) {
  std::vector<AblationVariant> out;
  out.push_back({"reference", "full", base});
  out.push_back({"architecture", "mlp", base.with("model.attention", "mlp").with("aux.weight", "0")});
  out.push_back({"architecture", "hyperpixel", base.with("encoder", "hyperpixel")});
  out.push_back({"architecture", "hierarchical",
                 base.with("model.layers", std::to_string(std::max(2, base.model.layers)))
                     .with("model.attention", "hierarchical")});
  out.push_back({"architecture", "no-aux", base.with("aux.weight", "0")});

  const double weight = base.aux.weight > 0 ? base.aux.weight : 0.01;
  const int buffer = std::max(0, std::min(base.mask.buffer, (frames - 3) / 2));
  const auto cell_base = base.with("labeled_fraction", number(selfsup_fraction))
                             .with("aux.weight", number(weight))
                             .with("mask.buffer", std::to_string(buffer));
  for (auto scheme : kAllMaskSchemes) {
    for (const char* loss : {"l2", "contrastive"}) {
      out.push_back({"selfsup", to_string(scheme) + "/" + loss,
                     cell_base.with("mask.scheme", to_string(scheme)).with("aux.loss", loss)});
    }
  }
  return out;
}

AblationTable run_ablation_suite(const TrainConfig& base, double selfsup_fraction,
                                 const std::function<void(const AblationRow&)>& on_row) {
  std::map<bool, std::shared_ptr<const Dataset>> data;  // keyed by "needs rendering"
  auto dataset_for = [&](const TrainConfig& cfg) {
    const bool rendered = cfg.encoder != EncoderKind::Oracle;
    auto& slot = data[rendered];
    if (!slot) slot = load_dataset(cfg);
    return slot;
  };
  const int frames = dataset_for(base)->frames;
  AblationTable table;
  for (const auto& v : ablation_variants(base, frames, selfsup_fraction)) {
    const auto ex = make_experiment(v.cfg, dataset_for(v.cfg));
    const auto res = train(ex);
    AblationRow row{v.group, v.name, evaluate(ex, res.params, v.cfg.eval_split, res.step).metrics};
    if (on_row) on_row(row);
    table.rows.push_back(std::move(row));
  }
  return table;
}

nlohmann::json AblationTable::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) j.push_back({{"group", r.group}, {"name", r.name}, {"metrics", r.metrics.to_json()}});
  return j;
}

std::string AblationTable::to_text() const {
  std::string s = "group         variant         accuracy  detail\n";
  for (const auto& r : rows) {
    char line[256];
    std::string detail;
    if (r.metrics.by_category.count("counterfactual")) {
      detail = "counterfactual " + number(r.metrics.by_category.at("counterfactual"));
    } else if (r.metrics.top1 >= 0) {
      detail = "top5 " + number(r.metrics.top5) + " l1 " + number(r.metrics.mean_l1);
    }
    std::snprintf(line, sizeof line, "%-13s %-15s %8.4f  %s\n", r.group.c_str(), r.name.c_str(), r.metrics.accuracy,
                  detail.c_str());
    s += line;
  }
  return s;
}

}  // namespace objreason
