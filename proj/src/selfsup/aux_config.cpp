#include "objreason/selfsup/aux_loss.hpp"

namespace objreason {

std::string to_string(AuxLossKind k) { return k == AuxLossKind::L2 ? "l2" : "contrastive"; }
std::string to_string(Negatives n) { return n == Negatives::AllFrames ? "all-frames" : "same-frame"; }
std::string to_string(Similarity s) { return s == Similarity::Dot ? "dot" : "cosine"; }

AuxLossConfig AuxLossConfig::from(const KeyValueConfig& cfg) {
  AuxLossConfig c;
  const auto kind = cfg.get_string("loss", to_string(c.kind));
  if (kind == "l2") c.kind = AuxLossKind::L2;
  else if (kind == "contrastive") c.kind = AuxLossKind::Contrastive;
  else throw ConfigError("aux.loss must be l2 or contrastive, got '" + kind + "'");
  const auto neg = cfg.get_string("negatives", to_string(c.negatives));
  if (neg == "all-frames") c.negatives = Negatives::AllFrames;
  else if (neg == "same-frame") c.negatives = Negatives::SameFrame;
  else throw ConfigError("aux.negatives must be all-frames or same-frame, got '" + neg + "'");
  const auto sim = cfg.get_string("similarity", to_string(c.similarity));
  if (sim == "dot") c.similarity = Similarity::Dot;
  else if (sim == "cosine") c.similarity = Similarity::Cosine;
  else throw ConfigError("aux.similarity must be dot or cosine, got '" + sim + "'");
  c.temperature = cfg.get_double("temperature", c.temperature);
  c.weight = cfg.get_double("weight", c.weight);
  c.validate();
  return c;
}

void AuxLossConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("aux.temperature must be positive");
  if (!(weight >= 0.0)) throw ConfigError("aux.weight must be non-negative");
}

}  // namespace objreason
