#include "objreason/scenes/vocab.hpp"

#include <algorithm>
#include <unordered_map>

#include "objreason/numerics/error.hpp"
#include "objreason/scenes/episode.hpp"

namespace objreason {

namespace {

const char* const kColorWords[] = {"red", "green", "blue", "yellow", "cyan", "purple"};
const char* const kShapeWords[] = {"cube", "sphere", "cylinder"};
const char* const kNumberWords[] = {"zero", "one", "two", "three", "four", "five"};

std::vector<std::string> build_tokens() {
  std::vector<std::string> t = {"<pad>"};
  for (auto* w : kColorWords) t.emplace_back(w);
  for (auto* w : kShapeWords) t.emplace_back(w);
  for (auto* w : kNumberWords) t.emplace_back(w);
  for (auto* w : {"what", "color", "is", "the", "object", "that", "collides", "with", "how", "many",
                  "collisions", "are", "there", "which", "will", "happen", "next", "if", "removed",
                  "responsible", "for", "collision", "between", "and", "none"}) {
    t.emplace_back(w);
  }
  return t;
}

}  // namespace

const std::vector<std::string>& Vocab::tokens() {
  static const std::vector<std::string> t = build_tokens();
  return t;
}

int Vocab::id(std::string_view token) {
  static const std::unordered_map<std::string, int> index = [] {
    std::unordered_map<std::string, int> m;
    const auto& t = tokens();
    for (int i = 0; i < static_cast<int>(t.size()); ++i) m.emplace(t[static_cast<std::size_t>(i)], i);
    return m;
  }();
  auto it = index.find(std::string(token));
  if (it == index.end()) throw Error("Vocab: unknown token '" + std::string(token) + "'");
  return it->second;
}

const std::string& Vocab::token(int id) {
  if (!valid(id)) throw Error("Vocab: token id out of range: " + std::to_string(id));
  return tokens()[static_cast<std::size_t>(id)];
}

int Vocab::color_token(int color) {
  if (color < 0 || color >= kNumObjectColors) throw Error("Vocab: no word for color " + std::to_string(color));
  return id(kColorWords[color]);
}

int Vocab::shape_token(int shape) {
  if (shape < 0 || shape >= 3) throw Error("Vocab: no word for shape " + std::to_string(shape));
  return id(kShapeWords[shape]);
}

int Vocab::number_token(int n) { return id(kNumberWords[std::clamp(n, 0, 5)]); }

const std::vector<int>& Vocab::answer_tokens() {
  static const std::vector<int> a = [] {
    std::vector<int> out;
    for (auto* w : kNumberWords) out.push_back(id(w));
    for (auto* w : kColorWords) out.push_back(id(w));
    out.push_back(id("none"));
    return out;
  }();
  return a;
}

int Vocab::answer_class(int token_id) {
  const auto& a = answer_tokens();
  auto it = std::find(a.begin(), a.end(), token_id);
  return it == a.end() ? -1 : static_cast<int>(it - a.begin());
}

std::string Vocab::render(const std::vector<int>& ids) {
  std::string out;
  for (int i : ids) {
    if (!out.empty()) out += ' ';
    out += token(i);
  }
  return out;
}

}  // namespace objreason
