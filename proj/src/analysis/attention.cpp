#include "objreason/analysis/attention.hpp"

#include <algorithm>
#include <map>

namespace objreason {

AttentionTrace attention_trace(const Experiment& ex, const ParamStore<float>& params, int episode, int choice) {
  if (ex.model.mode == AttentionMode::Mlp) throw ConfigError("attention analysis needs a transformer model");
  Graph<float> g;
  auto qs = question_sequences(g, ex, params, episode, encode_episode(g, ex, params, episode, true));
  if (choice < 0 || choice >= static_cast<int>(qs.size())) {
    throw ConfigError("episode " + std::to_string(episode) + " has no choice " + std::to_string(choice));
  }
  ForwardOptions opts;
  opts.record_trace = true;
  auto res = model_forward(g, params, ex.model, {qs[static_cast<std::size_t>(choice)]}, opts);
  return res.traces.at(0);
}

namespace {

const Matrix<double>& pick(const AttentionTrace& trace, int layer, int head) {
  const int l = layer < 0 ? trace.layers() + layer : layer;
  if (l < 0 || l >= trace.layers()) {
    throw ConfigError("layer " + std::to_string(layer) + " out of range for " + std::to_string(trace.layers()) +
                      " layers");
  }
  if (head < 0 || head >= trace.heads()) {
    throw ConfigError("head " + std::to_string(head) + " out of range for " + std::to_string(trace.heads()) +
                      " heads");
  }
  return trace.weights[static_cast<std::size_t>(l)][static_cast<std::size_t>(head)];
}

}  // namespace

std::vector<WordAttention> word_object_attention(const AttentionTrace& trace, int layer, int head) {
  const auto& w = pick(trace, layer, head);
  std::vector<int> objects, words;
  for (int e = 0; e < static_cast<int>(trace.elements.size()); ++e) {
    const auto m = trace.elements[static_cast<std::size_t>(e)].modality;
    if (m == Modality::Object) objects.push_back(e);
    if (m == Modality::Word) words.push_back(e);
  }
  if (objects.empty()) throw Error("word_object_attention: trace has no object elements");
  std::vector<WordAttention> out;
  for (int j : words) {
    const auto& info = trace.elements[static_cast<std::size_t>(j)];
    int best = objects.front();
    for (int i : objects) {
      if (w(i, j) > w(best, j)) best = i;
    }
    const auto& obj = trace.elements[static_cast<std::size_t>(best)];
    out.push_back({static_cast<int>(out.size()), info.word, obj.frame, obj.slot, w(best, j)});
  }
  return out;
}

std::vector<std::vector<SlotWeight>> cls_object_attention(const AttentionTrace& trace, int layer, int head, int k) {
  const auto& w = pick(trace, layer, head);
  int cls = -1;
  std::map<int, std::vector<SlotWeight>> frames;
  for (int e = 0; e < static_cast<int>(trace.elements.size()); ++e) {
    const auto& info = trace.elements[static_cast<std::size_t>(e)];
    if (info.modality == Modality::Cls) cls = e;
  }
  if (cls < 0) throw Error("cls_object_attention: trace has no CLS element");
  for (int e = 0; e < static_cast<int>(trace.elements.size()); ++e) {
    const auto& info = trace.elements[static_cast<std::size_t>(e)];
    if (info.modality == Modality::Object) frames[info.frame].push_back({info.slot, w(cls, e)});
  }
  std::vector<std::vector<SlotWeight>> out;
  for (auto& [frame, slots] : frames) {
    std::stable_sort(slots.begin(), slots.end(), [](const SlotWeight& a, const SlotWeight& b) { return a.weight > b.weight; });
    slots.resize(std::min<std::size_t>(slots.size(), static_cast<std::size_t>(std::max(k, 0))));
    out.push_back(std::move(slots));
  }
  return out;
}

}  // namespace objreason
