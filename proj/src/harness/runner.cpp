#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "objreason/encoder/image_encoders.hpp"
#include "objreason/harness/experiment.hpp"
#include "objreason/harness/step.hpp"
#include "objreason/scenes/vocab.hpp"

namespace objreason {

std::shared_ptr<const Dataset> load_dataset(const TrainConfig& cfg) {
  auto data = std::make_shared<Dataset>();
  if (!cfg.data_dir.empty()) {
    data->episodes = read_episodes(cfg.data_dir);
  } else {
    KeyValueConfig scene = cfg.scene;
    if (!scene.has("render")) scene.set("render", cfg.encoder == EncoderKind::Oracle ? "false" : "true");
    data->episodes = generate_episodes(cfg.task, scene, cfg.episodes, cfg.data_seed);
  }
  if (data->episodes.empty()) throw ConfigError("dataset is empty");
  data->frames = data->episodes.front().num_frames;
  data->slots = data->episodes.front().num_slots;
  for (const auto& ep : data->episodes) {
    if (ep.task != cfg.task) throw ConfigError("dataset task is " + to_string(ep.task) + ", config says " + to_string(cfg.task));
    if (ep.num_frames != data->frames || ep.num_slots != data->slots) {
      throw ConfigError("dataset episodes differ in frame or slot count");
    }
    if (cfg.encoder != EncoderKind::Oracle && !ep.rendered()) {
      throw ConfigError("encoder " + to_string(cfg.encoder) + " needs rendered episodes");
    }
  }
  return data;
}

const std::vector<int>& Experiment::split(const std::string& name) const {
  if (name == "train") return splits.train;
  if (name == "val") return splits.val;
  if (name == "test") return splits.test;
  if (name == "labeled") return splits.labeled;
  if (name == "unlabeled") return splits.unlabeled;
  throw ConfigError("unknown split '" + name + "'");
}

Experiment make_experiment(const TrainConfig& cfg, std::shared_ptr<const Dataset> data) {
  Experiment ex;
  ex.cfg = cfg;
  ex.data = data ? std::move(data) : load_dataset(cfg);
  ex.splits = make_splits(ex.data->episodes, cfg.labeled_fraction, cfg.split, cfg.val_fraction, cfg.test_fraction,
                          derive_seed(cfg.data_seed, 0x511));
  const auto& first = ex.data->episodes.front();
  ex.slots = cfg.encoder == EncoderKind::Hyperpixel ? hyperpixel_regions(first.height, first.width) : ex.data->slots;

  ex.model = cfg.model;
  ex.model.slots = ex.slots;
  switch (cfg.task) {
    case TaskKind::Collision: ex.heads = {HeadKind::Descriptive, HeadKind::Choice}; break;
    case TaskKind::Snitch:
      ex.heads = {HeadKind::Grid};
      ex.model.grid = first.annotations.grid;
      break;
    case TaskKind::Blicket: ex.heads = {HeadKind::Ternary}; break;
  }
  int words = 0;
  for (const auto& ep : ex.data->episodes) {
    int longest = 0;
    for (const auto& c : ep.choices) longest = std::max(longest, static_cast<int>(c.size()));
    words = std::max(words, static_cast<int>(ep.question.size()) + longest);
  }
  ex.model.max_position = std::max(ex.model.max_position, ex.data->frames + words + 1);
  if (ex.model.mode == AttentionMode::Mlp && ex.model.mlp_length == 0) {
    ex.model.mlp_length = ex.data->frames * ex.slots + words + 1;
  }
  ex.model.validate();

  if (cfg.encoder == EncoderKind::Oracle) {
    ex.oracle.reserve(ex.data->episodes.size());
    for (const auto& ep : ex.data->episodes) {
      ex.oracle.push_back(
          oracle_encode(ep, ex.model.latent, cfg.shuffle_slots, derive_seed(ep.seed, 0x5107), ex.slots).mu.cast<float>());
    }
  }
  ex.params = init_model<float>(ex.model, ex.heads, cfg.seed);
  std::mt19937_64 rng(derive_seed(cfg.seed, 1));
  if (cfg.encoder == EncoderKind::MaskedImage) init_masked_image_encoder(ex.params, cfg.image, rng);
  if (cfg.encoder == EncoderKind::Hyperpixel) init_hyperpixel_encoder(ex.params, cfg.image, rng);
  return ex;
}

Var<float> encode_episode(Graph<float>& g, const Experiment& ex, const ParamStore<float>& params, int episode,
                          bool detach) {
  const auto& ep = ex.episode(episode);
  switch (ex.cfg.encoder) {
    case EncoderKind::Oracle: return g.constant(ex.oracle[static_cast<std::size_t>(episode)]);
    case EncoderKind::MaskedImage: {
      auto v = masked_image_encode(g, params, ep, ex.cfg.image, ex.slots);
      return detach ? stop_gradient(v) : v;
    }
    case EncoderKind::Hyperpixel: {
      auto v = hyperpixel_encode(g, params, ep, ex.cfg.image);
      return detach ? stop_gradient(v) : v;
    }
  }
  throw Error("unknown encoder");
}

std::vector<InputSequence<float>> question_sequences(Graph<float>& g, const Experiment& ex,
                                                     const ParamStore<float>& params, int episode, Var<float> objects) {
  const auto& ep = ex.episode(episode);
  std::vector<InputSequence<float>> out;
  if (ep.multiple_choice()) {
    for (const auto& choice : ep.choices) {
      auto words = ep.question;
      words.insert(words.end(), choice.begin(), choice.end());
      out.push_back(assemble_inputs(g, params, objects, ep.num_frames, ex.slots, words));
    }
  } else {
    out.push_back(assemble_inputs(g, params, objects, ep.num_frames, ex.slots, ep.question));
  }
  return out;
}

namespace {

std::vector<int> sample_from(const std::vector<int>& pool, int n, Rng& rng) {
  std::vector<int> out;
  if (pool.empty()) return out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out.push_back(pool[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(pool.size()) - 1))]);
  return out;
}

}  // namespace

StepLoss build_step_loss(Graph<float>& g, const Experiment& ex, const ParamStore<float>& params, long step) {
  const auto& cfg = ex.cfg;
  Rng sup_rng(derive_seed(cfg.seed, 3 * static_cast<std::uint64_t>(step)));
  Rng unsup_rng(derive_seed(cfg.seed, 3 * static_cast<std::uint64_t>(step) + 1));
  std::mt19937_64 drop_rng(derive_seed(cfg.seed, 3 * static_cast<std::uint64_t>(step) + 2));
  ForwardOptions opts;
  opts.rng = &drop_rng;

  std::vector<int> chosen;
  if (cfg.task == TaskKind::Collision) {
    std::vector<int> desc, mc;
    for (int i : ex.splits.labeled) (ex.episode(i).multiple_choice() ? mc : desc).push_back(i);
    int n_desc = static_cast<int>(std::lround(cfg.descriptive_share * cfg.supervised_batch));
    if (desc.empty()) n_desc = 0;
    if (mc.empty()) n_desc = cfg.supervised_batch;
    chosen = sample_from(desc, n_desc, sup_rng);
    const auto more = sample_from(mc, cfg.supervised_batch - n_desc, sup_rng);
    chosen.insert(chosen.end(), more.begin(), more.end());
  } else {
    chosen = sample_from(ex.splits.labeled, cfg.supervised_batch, sup_rng);
  }
  if (chosen.empty()) throw ConfigError("no labeled training episodes");

  std::vector<InputSequence<float>> seqs;
  std::vector<int> single_rows, single_labels, choice_rows;
  std::vector<float> choice_targets;
  for (int i : chosen) {
    const auto& ep = ex.episode(i);
    auto qs = question_sequences(g, ex, params, i, encode_episode(g, ex, params, i, false));
    for (std::size_t k = 0; k < qs.size(); ++k) {
      const int row = static_cast<int>(seqs.size());
      if (ep.multiple_choice()) {
        choice_rows.push_back(row);
        choice_targets.push_back(static_cast<float>(ep.choice_answers[k]));
      } else {
        single_rows.push_back(row);
        single_labels.push_back(ep.answer);
      }
      seqs.push_back(std::move(qs[k]));
    }
  }
  auto cls = model_forward(g, params, ex.model, seqs, opts).cls;

  StepLoss out;
  std::vector<Var<float>> terms;
  if (!single_rows.empty()) {
    const HeadKind kind = ex.heads.front();
    auto logits = head_logits(g, params, kind, gather_rows(cls, single_rows));
    const float inv = 1.0f / static_cast<float>(single_rows.size());
    terms.push_back(scale(sum_all(cross_entropy_rows(logits, single_labels)), inv));
    if (kind == HeadKind::Grid && cfg.l1_weight > 0) {
      auto l1 = sum_all(expected_l1(softmax_rows(logits), single_labels, ex.model.grid));
      terms.push_back(scale(l1, inv * static_cast<float>(cfg.l1_weight)));
    }
  }
  if (!choice_rows.empty()) {
    auto logits = head_logits(g, params, HeadKind::Choice, gather_rows(cls, choice_rows));
    terms.push_back(scale(sum_all(bce_with_logits(logits, choice_targets)), 1.0f / static_cast<float>(choice_rows.size())));
  }
  out.task = terms.front();
  for (std::size_t k = 1; k < terms.size(); ++k) out.task = add(out.task, terms[k]);
  out.total = out.task;

  if (cfg.aux.weight > 0.0) {
    const auto picked = sample_from(ex.splits.unlabeled, cfg.unsupervised_batch, unsup_rng);
    std::vector<InputSequence<float>> useqs;
    std::vector<Var<float>> truths;
    std::vector<MaskPlan> plans;
    AssembleOptions detached;
    detached.detach_embeddings = true;
    for (int i : picked) {
      const auto& ep = ex.episode(i);
      auto objects = encode_episode(g, ex, params, i, true);
      plans.push_back(sample_mask_plan(cfg.scheme, ep.num_frames, ex.slots, unsup_rng, cfg.mask));
      truths.push_back(objects);
      useqs.push_back(assemble_inputs(g, params, apply_mask(objects, plans.back()), ep.num_frames, ex.slots, {}, detached));
    }
    auto outputs = model_forward(g, params, ex.model, useqs, opts).objects;
    auto aux = aux_loss(g, params, outputs, concat_rows(truths), plans, cfg.aux);
    out.aux = aux.value;
    out.aux_targets = aux.targets;
    out.total = combine_losses(out.task, out.aux, cfg.aux.weight);
  }
  return out;
}

StepGradients compute_step(const Experiment& ex, const ParamStore<float>& params, long step) {
  Graph<float> g;
  auto loss = build_step_loss(g, ex, params, step);
  StepGradients out;
  out.task = loss.task.value()(0, 0);
  out.aux = loss.aux.valid() ? loss.aux.value()(0, 0) : 0.0;
  out.total = loss.total.value()(0, 0);
  if (!std::isfinite(out.total)) throw NumericError("non-finite loss at step " + std::to_string(step));
  g.backward(loss.total);
  for (const auto& [name, id] : g.param_nodes()) {
    if (g.has_grad(id)) out.grads.emplace(name, g.param_grad(name, params));
  }
  return out;
}


BatchPrediction predict_batch(const Experiment& ex, const ParamStore<float>& params, const std::vector<int>& episodes,
                              const ObjectSource& objects) {
  Graph<float> g;
  std::vector<InputSequence<float>> seqs;
  BatchPrediction out;
  for (int i : episodes) {
    out.first_row.push_back(static_cast<int>(seqs.size()));
    auto rows = objects ? objects(g, i) : encode_episode(g, ex, params, i, true);
    for (auto& q : question_sequences(g, ex, params, i, rows)) seqs.push_back(std::move(q));
  }
  if (seqs.empty()) throw Error("predict_batch: no episodes");
  auto cls = model_forward(g, params, ex.model, seqs).cls;
  out.cls = cls.value();
  const Matrix<float> single = head_logits(g, params, ex.heads.front(), cls).value();
  Matrix<float> choice;
  if (ex.cfg.task == TaskKind::Collision) choice = head_logits(g, params, HeadKind::Choice, cls).value();

  for (std::size_t k = 0; k < episodes.size(); ++k) {
    const int i = episodes[k];
    const int row = out.first_row[k];
    const auto& ep = ex.episode(i);
    Prediction p;
    p.episode = i;
    if (ep.multiple_choice()) {
      for (std::size_t c = 0; c < ep.choices.size(); ++c) p.choices.push_back(choice(row + static_cast<int>(c), 0) > 0.0f);
    } else {
      const Matrix<float> r = single.row(row);
      p.predicted = argmax_rows<float>(r).front();
      if (ex.cfg.task == TaskKind::Snitch) {
        std::vector<int> order(static_cast<std::size_t>(r.cols()));
        for (std::size_t c = 0; c < order.size(); ++c) order[c] = static_cast<int>(c);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return r(0, a) > r(0, b); });
        p.top5.assign(order.begin(), order.begin() + std::min<std::size_t>(5, order.size()));
      }
    }
    out.predictions.push_back(std::move(p));
  }
  return out;
}

EvalOutput evaluate(const Experiment& ex, const ParamStore<float>& params, const std::string& split, long step) {
  std::vector<int> idx = ex.split(split);
  if (ex.cfg.eval_limit > 0 && static_cast<int>(idx.size()) > ex.cfg.eval_limit) idx.resize(static_cast<std::size_t>(ex.cfg.eval_limit));
  if (idx.empty()) throw ConfigError("split '" + split + "' is empty");

  EvalOutput out;
  constexpr std::size_t kChunk = 32;  // episodes per forward pass
  for (std::size_t pos = 0; pos < idx.size(); pos += kChunk) {
    const std::vector<int> chunk(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                                 idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), pos + kChunk)));
    auto batch = predict_batch(ex, params, chunk);
    for (auto& p : batch.predictions) out.predictions.push_back(std::move(p));
  }
  out.metrics = score_predictions(ex.data->episodes, out.predictions, ex.model.grid);
  out.metrics.step = step;
  out.metrics.split = split;
  return out;
}

std::string TrainResult::log_text() const {
  std::string s;
  for (const auto& r : log) s += r.to_line() + "\n";
  return s;
}

Checkpoint make_checkpoint(const Experiment& ex, const TrainResult& result) {
  Checkpoint c;
  c.config_text = ex.cfg.source.serialize();
  for (const auto& [name, value] : result.params) c.tensors[name] = value;
  export_state(result.opt, c);
  c.step = result.step;
  return c;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

}  // namespace

TrainResult train(const Experiment& ex, const ProgressFn& progress) {
  const auto& cfg = ex.cfg;
  TrainResult res;
  res.params = ex.params;
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
  double task_sum = 0, aux_sum = 0;
  int count = 0;
  auto record = [&](long s) {
    auto rec = evaluate(ex, res.params, cfg.eval_split, s).metrics;
    if (count > 0) {
      rec.losses["task"] = task_sum / count;
      if (cfg.aux.weight > 0) rec.losses["aux"] = aux_sum / count;
    }
    rec.losses["lr"] = cfg.schedule.lr_at(s);
    task_sum = aux_sum = 0;
    count = 0;
    res.log.push_back(rec);
    if (progress) progress(rec);
  };
  if (cfg.steps == 0) record(0);
  for (long step = 0; step < cfg.steps; ++step) {
    auto sg = compute_step(ex, res.params, step);
    lamb_step(res.params, sg.grads, res.opt, cfg.optim, cfg.schedule.lr_at(step + 1));
    res.step = step + 1;
    task_sum += sg.task;
    aux_sum += sg.aux;
    ++count;
    if ((cfg.eval_every > 0 && res.step % cfg.eval_every == 0) || res.step == cfg.steps) record(res.step);
    if (!cfg.out_dir.empty() && cfg.checkpoint_every > 0 && res.step % cfg.checkpoint_every == 0) {
      save_checkpoint(cfg.out_dir + "/step" + std::to_string(res.step) + ".ckpt", make_checkpoint(ex, res));
    }
  }
  if (!cfg.out_dir.empty()) {
    save_checkpoint(cfg.out_dir + "/final.ckpt", make_checkpoint(ex, res));
    write_text(cfg.out_dir + "/metrics.jsonl", res.log_text());
  }
  return res;
}

TrainResult train(const TrainConfig& cfg, const ProgressFn& progress) {
  const auto ex = make_experiment(cfg);
  return train(ex, progress);
}

Experiment experiment_from_checkpoint(const Checkpoint& ckpt, std::shared_ptr<const Dataset> data) {
  auto ex = make_experiment(TrainConfig::from(KeyValueConfig::parse(ckpt.config_text)), std::move(data));
  for (const auto& [name, value] : ckpt.tensors) {
    if (name.rfind("opt.", 0) == 0) continue;
    if (!ex.params.contains(name)) throw ConfigError("checkpoint tensor '" + name + "' is not a model parameter");
    const auto& ref = ex.params.get(name);
    if (ref.rows() != value.rows() || ref.cols() != value.cols()) {
      throw ConfigError("checkpoint tensor '" + name + "' has the wrong shape");
    }
    ex.params.set(name, value);
  }
  return ex;
}

EvalOutput evaluate_checkpoint(const std::string& path, const std::string& split) {
  const auto ckpt = load_checkpoint(path);
  const auto ex = experiment_from_checkpoint(ckpt);
  return evaluate(ex, ex.params, split, ckpt.step);
}

}  // namespace objreason
