#include "objreason/analysis/reports.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include <Eigen/QR>

#include "objreason/encoder/slots.hpp"

namespace objreason {

namespace {

constexpr std::size_t kChunk = 32;

std::vector<std::vector<int>> chunks(const std::vector<int>& idx) {
  std::vector<std::vector<int>> out;
  for (std::size_t pos = 0; pos < idx.size(); pos += kChunk) {
    out.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                     idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), pos + kChunk)));
  }
  return out;
}

double max_abs_rows(const Matrix<float>& a, const Matrix<float>& b, int begin, int end) {
  return (a.middleRows(begin, end - begin) - b.middleRows(begin, end - begin)).cwiseAbs().template cast<double>().maxCoeff();
}

}  // namespace

nlohmann::json AlignmentReport::to_json() const {
  return {{"episodes", episodes},
          {"max_delta", max_delta},
          {"mean_delta", mean_delta},
          {"identity_delta", identity_delta},
          {"label_disagreements", label_disagreements}};
}

AlignmentReport alignment_report(const Experiment& ex, const ParamStore<float>& params, const std::vector<int>& episodes,
                                 std::uint64_t seed) {
  if (ex.cfg.encoder != EncoderKind::Oracle) throw ConfigError("alignment report needs the oracle encoder");
  AlignmentReport r;
  double delta_sum = 0.0;
  for (const auto& chunk : chunks(episodes)) {
    std::unordered_map<int, Matrix<float>> identity, shuffled;
    for (int i : chunk) {
      const auto& ep = ex.episode(i);
      auto st = oracle_encode(ep, ex.model.latent, false, 0, ex.slots);
      identity[i] = st.mu.cast<float>();
      shuffled[i] = permute_slots(st, random_permutations(st.frames, st.slots, derive_seed(seed, static_cast<std::uint64_t>(i))))
                        .mu.cast<float>();
    }
    auto from = [](const std::unordered_map<int, Matrix<float>>& rows) {
      return [&rows](Graph<float>& g, int i) { return g.constant(rows.at(i)); };
    };
    const auto a = predict_batch(ex, params, chunk, from(identity));
    const auto again = predict_batch(ex, params, chunk, from(identity));
    const auto b = predict_batch(ex, params, chunk, from(shuffled));
    r.identity_delta = std::max(r.identity_delta, (a.cls - again.cls).cwiseAbs().template cast<double>().maxCoeff());
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const int begin = a.first_row[k];
      const int end = k + 1 < chunk.size() ? a.first_row[k + 1] : static_cast<int>(a.cls.rows());
      const double d = max_abs_rows(a.cls, b.cls, begin, end);
      r.max_delta = std::max(r.max_delta, d);
      delta_sum += d;
      const auto& pa = a.predictions[k];
      const auto& pb = b.predictions[k];
      if (pa.predicted != pb.predicted || pa.choices != pb.choices) ++r.label_disagreements;
      ++r.episodes;
    }
  }
  r.mean_delta = r.episodes ? delta_sum / r.episodes : 0.0;
  return r;
}

nlohmann::json InfillReport::to_json() const {
  nlohmann::json j;
  j["readout"] = probe ? "least-squares probe" : "trained";
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rows) j["rows"].push_back({{"offset", row.offset}, {"targets", row.targets}, {"mean_l2", row.mean_l2}});
  return j;
}

std::vector<InfillRow> tabulate_infill(const Matrix<double>& predicted, const Matrix<double>& truth,
                                       const std::vector<MaskPlan>& plans) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols()) {
    throw ShapeError("tabulate_infill", -1, "predicted and true rows differ in shape");
  }
  std::map<int, std::pair<double, int>> acc;
  Eigen::Index base = 0;
  for (const auto& plan : plans) {
    for (int row : plan.target_rows()) {
      const int offset = row / plan.slots - std::max(plan.target_begin, 0);
      auto& [sum, count] = acc[offset];
      sum += (predicted.row(base + row) - truth.row(base + row)).squaredNorm();
      ++count;
    }
    base += static_cast<Eigen::Index>(plan.frames) * plan.slots;
  }
  if (base != truth.rows()) throw ShapeError("tabulate_infill", -1, "plans do not cover the stacked rows");
  std::vector<InfillRow> out;
  for (const auto& [offset, sc] : acc) out.push_back({offset, sc.second, sc.first / sc.second});
  return out;
}

namespace {

struct InfillPass {
  Matrix<double> outputs;
  Matrix<double> truth;
  std::vector<MaskPlan> plans;
  std::vector<int> target_rows;  // into the stacked rows
};

InfillPass infill_pass(const Experiment& ex, const ParamStore<float>& params, const std::vector<int>& episodes,
                       std::uint64_t seed) {
  std::vector<Matrix<double>> outs, truths;
  InfillPass pass;
  AssembleOptions detached;
  detached.detach_embeddings = true;
  Eigen::Index base = 0;
  for (const auto& chunk : chunks(episodes)) {
    Graph<float> g;
    std::vector<InputSequence<float>> seqs;
    for (int i : chunk) {
      const auto& ep = ex.episode(i);
      auto objects = encode_episode(g, ex, params, i, true);
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      pass.plans.push_back(sample_mask_plan(MaskScheme::PredictFrame, ep.num_frames, ex.slots, rng, ex.cfg.mask));
      for (int row : pass.plans.back().target_rows()) pass.target_rows.push_back(static_cast<int>(base) + row);
      base += objects.value().rows();
      truths.push_back(objects.value().cast<double>());
      seqs.push_back(assemble_inputs(g, params, apply_mask(objects, pass.plans.back()), ep.num_frames, ex.slots, {},
                                     detached));
    }
    outs.push_back(model_forward(g, params, ex.model, seqs).objects.value().cast<double>());
  }
  auto stack = [](const std::vector<Matrix<double>>& parts) {
    Eigen::Index rows = 0;
    for (const auto& p : parts) rows += p.rows();
    Matrix<double> m(rows, parts.empty() ? 0 : parts.front().cols());
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      m.middleRows(at, p.rows()) = p;
      at += p.rows();
    }
    return m;
  };
  pass.outputs = stack(outs);
  pass.truth = stack(truths);
  return pass;
}

Matrix<double> with_ones(const Matrix<double>& x) {
  Matrix<double> out(x.rows(), x.cols() + 1);
  out << x, Matrix<double>::Ones(x.rows(), 1);
  return out;
}

}  // namespace

InfillReport infill_report(const Experiment& ex, const ParamStore<float>& params, const std::vector<int>& episodes,
                           const std::vector<int>& probe_episodes, std::uint64_t seed) {
  if (ex.model.mode == AttentionMode::Mlp) throw ConfigError("infill report needs a transformer model");
  if (episodes.empty()) throw ConfigError("infill report: no episodes");
  InfillReport report;
  Matrix<double> readout;  // (D + 1) x d
  if (probe_episodes.empty()) {
    readout.resize(params.get("aux.weight").rows() + 1, params.get("aux.weight").cols());
    readout << params.get("aux.weight").cast<double>(), params.get("aux.bias").cast<double>();
  } else {
    report.probe = true;
    const auto fit = infill_pass(ex, params, probe_episodes, derive_seed(seed, 0x9b0));
    Matrix<double> x(static_cast<Eigen::Index>(fit.target_rows.size()), fit.outputs.cols());
    Matrix<double> y(x.rows(), fit.truth.cols());
    for (Eigen::Index k = 0; k < x.rows(); ++k) {
      x.row(k) = fit.outputs.row(fit.target_rows[static_cast<std::size_t>(k)]);
      y.row(k) = fit.truth.row(fit.target_rows[static_cast<std::size_t>(k)]);
    }
    readout = with_ones(x).colPivHouseholderQr().solve(y);
  }
  const auto pass = infill_pass(ex, params, episodes, seed);
  report.rows = tabulate_infill(with_ones(pass.outputs) * readout, pass.truth, pass.plans);
  return report;
}

}  // namespace objreason
