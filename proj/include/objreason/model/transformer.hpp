#pragma once

#include <random>
#include <string>
#include <vector>

#include "objreason/model/config.hpp"
#include "objreason/model/sequence.hpp"
#include "objreason/numerics.hpp"
#include "objreason/numerics/init.hpp"

namespace objreason {

/// Attention weights of one sequence, [layer][head] each L x L, with the
/// element metadata of the attended sequence.
struct AttentionTrace {
  std::vector<std::vector<Matrix<double>>> weights;
  std::vector<ElementInfo> elements;

  int layers() const { return static_cast<int>(weights.size()); }
  int heads() const { return weights.empty() ? 0 : static_cast<int>(weights.front().size()); }
};

struct ForwardOptions {
  bool objects_only = false;  // object queries may only attend to objects
  bool record_trace = false;
  std::mt19937_64* rng = nullptr;  // enables dropout when set
};

template <typename Scalar>
struct ForwardResult {
  Var<Scalar> cls;      // B x D
  Var<Scalar> objects;  // sum over sequences of F*N_o rows, D wide
  std::vector<Eigen::Index> object_offsets;
  std::vector<AttentionTrace> traces;         // final attention stage
  std::vector<AttentionTrace> stage1_traces;  // hierarchical only
};

namespace detail {

template <typename Scalar>
void add_stack_params(ParamStore<Scalar>& p, const std::string& prefix, int layers, int D, std::mt19937_64& rng) {
  std::normal_distribution<double> small(0.0, 0.02);
  Matrix<Scalar> u(1, D), w(1, D);
  for (int k = 0; k < D; ++k) {
    u(0, k) = static_cast<Scalar>(small(rng));
    w(0, k) = static_cast<Scalar>(small(rng));
  }
  p.add(prefix + "content_bias", std::move(u));
  p.add(prefix + "position_bias", std::move(w));
  for (int l = 0; l < layers; ++l) {
    const std::string q = prefix + "layer" + std::to_string(l) + ".";
    p.add(q + "ln1.gain", Matrix<Scalar>::Ones(1, D));
    p.add(q + "ln1.bias", Matrix<Scalar>::Zero(1, D));
    for (const char* m : {"attn.q.weight", "attn.k.weight", "attn.v.weight", "attn.r.weight"}) {
      p.add(q + m, scaled_normal<Scalar>(D, D, rng));
    }
    p.add(q + "attn.out.weight", scaled_normal<Scalar>(D, D, rng, 1.0 / layers));
    p.add(q + "attn.out.bias", Matrix<Scalar>::Zero(1, D));
    p.add(q + "ln2.gain", Matrix<Scalar>::Ones(1, D));
    p.add(q + "ln2.bias", Matrix<Scalar>::Zero(1, D));
    p.add(q + "ff.in.weight", scaled_normal<Scalar>(D, 4 * D, rng, 2.0));
    p.add(q + "ff.in.bias", Matrix<Scalar>::Zero(1, 4 * D));
    p.add(q + "ff.out.weight", scaled_normal<Scalar>(4 * D, D, rng, 1.0 / layers));
    p.add(q + "ff.out.bias", Matrix<Scalar>::Zero(1, D));
  }
  p.add(prefix + "final_ln.gain", Matrix<Scalar>::Ones(1, D));
  p.add(prefix + "final_ln.bias", Matrix<Scalar>::Zero(1, D));
}

template <typename Scalar>
Var<Scalar> affine_norm(Graph<Scalar>& g, const ParamStore<Scalar>& p, const std::string& name, Var<Scalar> x) {
  return add_row(mul_row(layer_norm_rows(x), g.param(p, name + ".gain")), g.param(p, name + ".bias"));
}

template <typename Scalar>
Var<Scalar> dense(Graph<Scalar>& g, const ParamStore<Scalar>& p, const std::string& name, Var<Scalar> x) {
  return linear(x, g.param(p, name + ".weight"), g.param(p, name + ".bias"));
}

/// Pre-norm relative-attention layers over row-stacked blocks; fills
/// `weights[layer]` with [block][head] matrices when non-null.
template <typename Scalar>
Var<Scalar> transformer_stack(Graph<Scalar>& g, const ParamStore<Scalar>& p, const ModelConfig& cfg,
                              const std::string& prefix, int layers, Var<Scalar> x,
                              const std::vector<AttentionBlock>& blocks,
                              std::vector<AttentionWeights<Scalar>>* weights, std::mt19937_64* rng) {
  if (layers == 0) return x;
  const int D = cfg.width();
  auto table = g.constant(relative_table(cfg.max_position, D).template cast<Scalar>());
  auto u = g.param(p, prefix + "content_bias");
  auto w = g.param(p, prefix + "position_bias");
  const auto rate = static_cast<Scalar>(cfg.dropout);
  auto drop = [&](Var<Scalar> v) { return rng ? dropout(v, rate, *rng) : v; };
  for (int l = 0; l < layers; ++l) {
    const std::string q = prefix + "layer" + std::to_string(l) + ".";
    auto h = affine_norm(g, p, q + "ln1", x);
    auto rel = matmul(table, g.param(p, q + "attn.r.weight"));
    AttentionWeights<Scalar> captured;
    auto a = relative_attention(matmul(h, g.param(p, q + "attn.q.weight")), matmul(h, g.param(p, q + "attn.k.weight")),
                                matmul(h, g.param(p, q + "attn.v.weight")), rel, u, w, cfg.attention_heads, blocks,
                                weights ? &captured : nullptr);
    if (weights) weights->push_back(std::move(captured));
    x = add(x, drop(dense(g, p, q + "attn.out", a)));
    auto f = dense(g, p, q + "ff.out", gelu(dense(g, p, q + "ff.in", affine_norm(g, p, q + "ln2", x))));
    x = add(x, drop(f));
  }
  return affine_norm(g, p, prefix + "final_ln", x);
}

template <typename Scalar>
std::vector<AttentionTrace> to_traces(const std::vector<AttentionWeights<Scalar>>& per_layer,
                                      const std::vector<std::vector<ElementInfo>>& layouts) {
  std::vector<AttentionTrace> out(layouts.size());
  for (std::size_t b = 0; b < layouts.size(); ++b) {
    out[b].elements = layouts[b];
    for (const auto& layer : per_layer) {
      std::vector<Matrix<double>> heads;
      for (const auto& h : layer[b]) heads.push_back(h.template cast<double>());
      out[b].weights.push_back(std::move(heads));
    }
  }
  return out;
}

}  // namespace detail

/// Parameters for a model with the given output heads.
template <typename Scalar>
ParamStore<Scalar> init_model(const ModelConfig& cfg, const std::vector<HeadKind>& heads, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ParamStore<Scalar> p;
  const int d = cfg.latent, D = cfg.width();
  std::normal_distribution<double> emb(0.0, 0.5);
  Matrix<Scalar> words(cfg.vocab_size(), d), cls(1, d);
  for (Eigen::Index k = 0; k < words.size(); ++k) words.data()[k] = static_cast<Scalar>(emb(rng));
  for (Eigen::Index k = 0; k < cls.size(); ++k) cls.data()[k] = static_cast<Scalar>(emb(rng));
  p.add("embed.words", std::move(words));
  p.add("embed.cls", std::move(cls));
  p.add("proj.weight", scaled_normal<Scalar>(d + 2, D, rng, 2.0));
  p.add("proj.bias", Matrix<Scalar>::Constant(1, D, Scalar(0.01)));
  switch (cfg.mode) {
    case AttentionMode::Global:
      detail::add_stack_params(p, "tf.", cfg.layers, D, rng);
      break;
    case AttentionMode::Hierarchical:
      detail::add_stack_params(p, "tf1.", cfg.stage1_layers(), D, rng);
      detail::add_stack_params(p, "tf2.", cfg.stage2_layers(), D, rng);
      p.add("hier.merge.weight", scaled_normal<Scalar>(cfg.slots * D, D, rng));
      p.add("hier.merge.bias", Matrix<Scalar>::Zero(1, D));
      break;
    case AttentionMode::Mlp: {
      if (cfg.mlp_length <= 0) throw ConfigError("model: mlp baseline needs mlp_length");
      const int in = cfg.mlp_length * (d + 2), W = cfg.mlp_width;
      const int sizes[5] = {in, W, W, W, D};
      for (int k = 0; k < 4; ++k) {
        const std::string q = "mlp.fc" + std::to_string(k);
        p.add(q + ".weight", scaled_normal<Scalar>(sizes[k], sizes[k + 1], rng, 2.0));
        p.add(q + ".bias", Matrix<Scalar>::Zero(1, sizes[k + 1]));
      }
      break;
    }
  }
  for (HeadKind h : heads) {
    const std::string q = "head." + to_string(h);
    const int hidden = cfg.hidden_for(h);
    int out = 1;
    if (h == HeadKind::Descriptive) out = cfg.answer_size();
    if (h == HeadKind::Grid) out = cfg.grid * cfg.grid;
    if (h == HeadKind::Ternary) out = 3;
    p.add(q + ".hidden.weight", scaled_normal<Scalar>(D, hidden, rng, 2.0));
    p.add(q + ".hidden.bias", Matrix<Scalar>::Zero(1, hidden));
    p.add(q + ".out.weight", scaled_normal<Scalar>(hidden, out, rng));
    p.add(q + ".out.bias", Matrix<Scalar>::Zero(1, out));
  }
  p.add("aux.weight", scaled_normal<Scalar>(D, d, rng));
  p.add("aux.bias", Matrix<Scalar>::Zero(1, d));
  return p;
}

/// Full self-attention over each flattened sequence of the batch.
template <typename Scalar>
ForwardResult<Scalar> global_forward(Graph<Scalar>& g, const ParamStore<Scalar>& p, const ModelConfig& cfg,
                                     const std::vector<InputSequence<Scalar>>& batch, const ForwardOptions& opts = {}) {
  if (batch.empty()) throw Error("global_forward: empty batch");
  std::vector<Var<Scalar>> raw;
  std::vector<AttentionBlock> blocks;
  std::vector<std::vector<ElementInfo>> layouts;
  std::vector<int> cls_rows, object_rows;
  ForwardResult<Scalar> res;
  Eigen::Index start = 0;
  for (const auto& seq : batch) {
    raw.push_back(seq.vectors);
    AttentionBlock blk;
    blk.start = start;
    blk.length = seq.length();
    blk.offsets = relative_offsets(seq.elements, cfg.max_position);
    if (opts.objects_only) {
      blk.allowed = BoolMatrix::Constant(blk.length, blk.length, true);
      for (Eigen::Index i = 0; i < blk.length; ++i) {
        if (seq.elements[static_cast<std::size_t>(i)].modality != Modality::Object) continue;
        for (Eigen::Index j = 0; j < blk.length; ++j) {
          blk.allowed(i, j) = seq.elements[static_cast<std::size_t>(j)].modality == Modality::Object;
        }
      }
    }
    res.object_offsets.push_back(static_cast<Eigen::Index>(object_rows.size()));
    for (int i = 0; i < seq.frames * seq.slots; ++i) object_rows.push_back(static_cast<int>(start) + i);
    cls_rows.push_back(static_cast<int>(start) + seq.cls_index());
    layouts.push_back(seq.elements);
    blocks.push_back(std::move(blk));
    start += seq.length();
  }
  auto x = project_inputs(g, p, concat_rows(raw));
  std::vector<AttentionWeights<Scalar>> weights;
  x = detail::transformer_stack(g, p, cfg, "tf.", cfg.layers, x, blocks, opts.record_trace ? &weights : nullptr,
                                cfg.dropout > 0 ? opts.rng : nullptr);
  res.cls = gather_rows(x, cls_rows);
  res.objects = gather_rows(x, object_rows);
  if (opts.record_trace) res.traces = detail::to_traces(weights, layouts);
  return res;
}

/// Within-frame attention over slots, then attention across per-frame
/// summaries together with the words and CLS.
template <typename Scalar>
ForwardResult<Scalar> hierarchical_forward(Graph<Scalar>& g, const ParamStore<Scalar>& p, const ModelConfig& cfg,
                                           const std::vector<InputSequence<Scalar>>& batch,
                                           const ForwardOptions& opts = {}) {
  if (batch.empty()) throw Error("hierarchical_forward: empty batch");
  std::vector<Var<Scalar>> raw;
  for (const auto& seq : batch) {
    if (seq.slots != cfg.slots) {
      throw ConfigError("hierarchical_forward: sequence has " + std::to_string(seq.slots) + " slots, model expects " +
                        std::to_string(cfg.slots));
    }
    raw.push_back(seq.vectors);
  }
  auto x = project_inputs(g, p, concat_rows(raw));
  const Eigen::Index N = cfg.slots;
  const Eigen::Index D = cfg.width();

  // Stage 1: one block per (sequence, frame); every pair shares a position.
  std::vector<int> obj_rows;
  std::vector<AttentionBlock> blocks1;
  Eigen::Index start = 0;
  Eigen::Index total_frames = 0;
  ForwardResult<Scalar> res;
  for (const auto& seq : batch) {
    res.object_offsets.push_back(static_cast<Eigen::Index>(obj_rows.size()));
    for (int t = 0; t < seq.frames; ++t) {
      AttentionBlock blk;
      blk.start = static_cast<Eigen::Index>(obj_rows.size());
      blk.length = N;
      blk.offsets = IndexMatrix::Constant(N, N, cfg.max_position - 1);
      blocks1.push_back(std::move(blk));
      for (int i = 0; i < N; ++i) obj_rows.push_back(static_cast<int>(start) + t * static_cast<int>(N) + i);
    }
    total_frames += seq.frames;
    start += seq.length();
  }
  std::vector<AttentionWeights<Scalar>> w1, w2;
  auto* rng = cfg.dropout > 0 ? opts.rng : nullptr;
  auto objs = detail::transformer_stack(g, p, cfg, "tf1.", cfg.stage1_layers(), gather_rows(x, obj_rows), blocks1,
                                        opts.record_trace ? &w1 : nullptr, rng);
  res.objects = objs;
  auto frames = detail::dense(g, p, "hier.merge", reshape(objs, total_frames, N * D));

  // Stage 2: frame summaries, then each sequence's words and CLS.
  auto pool = concat_rows<Scalar>({frames, x});
  std::vector<int> rows2, cls_rows;
  std::vector<AttentionBlock> blocks2;
  std::vector<std::vector<ElementInfo>> layouts;
  Eigen::Index seq_start = 0, frame_start = 0, s2 = 0;
  for (const auto& seq : batch) {
    auto layout = sequence_layout(seq.frames, 1, seq.words);
    for (auto& e : layout) {
      if (e.modality == Modality::Object) e.slot = -1;
    }
    for (int t = 0; t < seq.frames; ++t) rows2.push_back(static_cast<int>(frame_start) + t);
    for (int k = seq.frames * seq.slots; k < seq.length(); ++k) {
      rows2.push_back(static_cast<int>(total_frames + seq_start) + k);
    }
    AttentionBlock blk;
    blk.start = s2;
    blk.length = static_cast<Eigen::Index>(layout.size());
    blk.offsets = relative_offsets(layout, cfg.max_position);
    blocks2.push_back(std::move(blk));
    cls_rows.push_back(static_cast<int>(s2 + layout.size()) - 1);
    s2 += static_cast<Eigen::Index>(layout.size());
    layouts.push_back(std::move(layout));
    frame_start += seq.frames;
    seq_start += seq.length();
  }
  auto y = detail::transformer_stack(g, p, cfg, "tf2.", cfg.stage2_layers(), gather_rows(pool, rows2), blocks2,
                                     opts.record_trace ? &w2 : nullptr, rng);
  res.cls = gather_rows(y, cls_rows);
  if (opts.record_trace) {
    res.traces = detail::to_traces(w2, layouts);
    std::size_t blk = 0;
    for (const auto& seq : batch) {
      AttentionTrace tr;
      const Eigen::Index n = static_cast<Eigen::Index>(seq.frames) * N;
      tr.elements = sequence_layout(seq.frames, seq.slots, 0);
      tr.elements.pop_back();
      for (const auto& layer : w1) {
        std::vector<Matrix<double>> heads;
        for (int h = 0; h < cfg.attention_heads; ++h) {
          Matrix<double> m = Matrix<double>::Zero(n, n);
          for (int t = 0; t < seq.frames; ++t) {
            m.block(t * N, t * N, N, N) = layer[blk + static_cast<std::size_t>(t)][static_cast<std::size_t>(h)].template cast<double>();
          }
          heads.push_back(std::move(m));
        }
        tr.weights.push_back(std::move(heads));
      }
      res.stage1_traces.push_back(std::move(tr));
      blk += static_cast<std::size_t>(seq.frames);
    }
  }
  return res;
}

/// Zero rows appended before the CLS so every sequence has `length` rows.
template <typename Scalar>
InputSequence<Scalar> pad_sequence(const InputSequence<Scalar>& seq, int length) {
  if (seq.length() > length) throw ConfigError("pad_sequence: sequence longer than the padded length");
  if (seq.length() == length) return seq;
  auto& g = *seq.vectors.graph;
  InputSequence<Scalar> out = seq;
  const Eigen::Index body = seq.length() - 1;
  out.vectors = concat_rows<Scalar>({slice_rows(seq.vectors, 0, body),
                                     g.constant(Matrix<Scalar>::Zero(length - seq.length(), seq.vectors.cols())),
                                     slice_rows(seq.vectors, body, 1)});
  ElementInfo pad{Modality::Word, -1, -1, -1, 0};
  out.elements.insert(out.elements.end() - 1, static_cast<std::size_t>(length - seq.length()), pad);
  return out;
}

/// Flattened fixed-length inputs through four ReLU layers; B x D.
template <typename Scalar>
Var<Scalar> mlp_baseline_forward(Graph<Scalar>& g, const ParamStore<Scalar>& p, const ModelConfig& cfg,
                                 const std::vector<InputSequence<Scalar>>& batch) {
  if (batch.empty()) throw Error("mlp_baseline_forward: empty batch");
  std::vector<Var<Scalar>> rows;
  for (const auto& seq : batch) {
    if (seq.length() != cfg.mlp_length) {
      throw ConfigError("mlp_baseline_forward: sequence length " + std::to_string(seq.length()) +
                        " differs from the fixed length " + std::to_string(cfg.mlp_length) + "; pad first");
    }
    rows.push_back(reshape(seq.vectors, 1, seq.vectors.rows() * seq.vectors.cols()));
  }
  auto x = concat_rows(rows);
  for (int k = 0; k < 4; ++k) x = relu(detail::dense(g, p, "mlp.fc" + std::to_string(k), x));
  return x;
}

/// Dispatches on the configured attention mode; MLP results carry no
/// per-slot outputs.
template <typename Scalar>
ForwardResult<Scalar> model_forward(Graph<Scalar>& g, const ParamStore<Scalar>& p, const ModelConfig& cfg,
                                    const std::vector<InputSequence<Scalar>>& batch, const ForwardOptions& opts = {}) {
  switch (cfg.mode) {
    case AttentionMode::Global: return global_forward(g, p, cfg, batch, opts);
    case AttentionMode::Hierarchical: return hierarchical_forward(g, p, cfg, batch, opts);
    case AttentionMode::Mlp: {
      std::vector<InputSequence<Scalar>> padded;
      for (const auto& s : batch) padded.push_back(pad_sequence(s, cfg.mlp_length));
      ForwardResult<Scalar> r;
      r.cls = mlp_baseline_forward(g, p, cfg, padded);
      return r;
    }
  }
  throw Error("unknown attention mode");
}

}  // namespace objreason
