#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeswarm/errors.hpp"

namespace edgeswarm {

enum class Capability { DrugLabelClassification, Localization, HazardDetection };

inline std::string to_string(Capability c) {
  switch (c) {
    case Capability::DrugLabelClassification: return "drug-label-classification";
    case Capability::Localization: return "localization";
    case Capability::HazardDetection: return "hazard-detection";
  }
  return "?";
}

inline Capability capability_from_string(const std::string& s) {
  if (s == "drug-label-classification") return Capability::DrugLabelClassification;
  if (s == "localization") return Capability::Localization;
  if (s == "hazard-detection") return Capability::HazardDetection;
  throw ValidationError("unknown capability \"" + s + "\"");
}

enum class ModelClass { DNN, MLP, LOGREG, GPS_LOC, PDR_LOC };

inline std::string to_string(ModelClass m) {
  switch (m) {
    case ModelClass::DNN: return "DNN";
    case ModelClass::MLP: return "MLP";
    case ModelClass::LOGREG: return "LOGREG";
    case ModelClass::GPS_LOC: return "GPS-LOC";
    case ModelClass::PDR_LOC: return "PDR-LOC";
  }
  return "?";
}

inline ModelClass model_class_from_string(const std::string& s) {
  if (s == "DNN") return ModelClass::DNN;
  if (s == "MLP") return ModelClass::MLP;
  if (s == "LOGREG") return ModelClass::LOGREG;
  if (s == "GPS-LOC") return ModelClass::GPS_LOC;
  if (s == "PDR-LOC") return ModelClass::PDR_LOC;
  throw ValidationError("unknown model class \"" + s + "\"");
}

// A deployable agent: the model is never executed, only described by its
// size, latency, energy, accuracy and lifetime parameters.
struct AgentManifest {
  std::string agent_id;
  Capability capability = Capability::DrugLabelClassification;
  ModelClass model_class = ModelClass::DNN;
  std::uint64_t payload_bytes = 0;        // over-the-air bundle size
  std::uint64_t memory_bytes = 0;         // installed footprint
  double per_inference_energy_pct = 0.0;  // battery % per inference
  double per_inference_latency_s = 0.0;   // onboard latency
  double accuracy = 1.0;                  // P(correct result)
  double ttl_s = 3600.0;                  // lifetime after activation
  bool dormant_allowed = true;

  bool operator==(const AgentManifest&) const = default;

  nlohmann::json to_json() const {
    return {{"agent_id", agent_id},
            {"capability", to_string(capability)},
            {"model_class", to_string(model_class)},
            {"payload_bytes", payload_bytes},
            {"memory_bytes", memory_bytes},
            {"per_inference_energy_pct", per_inference_energy_pct},
            {"per_inference_latency_s", per_inference_latency_s},
            {"accuracy", accuracy},
            {"ttl_s", ttl_s},
            {"dormant_allowed", dormant_allowed}};
  }

  static AgentManifest from_json(const nlohmann::json& j) {
    AgentManifest m;
    m.agent_id = j.at("agent_id").get<std::string>();
    m.capability = capability_from_string(j.at("capability").get<std::string>());
    m.model_class = model_class_from_string(j.at("model_class").get<std::string>());
    m.payload_bytes = j.at("payload_bytes").get<std::uint64_t>();
    m.memory_bytes = j.at("memory_bytes").get<std::uint64_t>();
    m.per_inference_energy_pct = j.at("per_inference_energy_pct").get<double>();
    m.per_inference_latency_s = j.at("per_inference_latency_s").get<double>();
    m.accuracy = j.at("accuracy").get<double>();
    m.ttl_s = j.at("ttl_s").get<double>();
    m.dormant_allowed = j.value("dormant_allowed", true);
    return m;
  }
};

using Catalog = std::vector<AgentManifest>;

// Enforces the catalog ordering rules: within one capability, a heavier
// model class must be strictly more accurate and strictly larger over the
// air (DNN > MLP > LOGREG on both axes). TTLs must be positive.
inline void validate_catalog(const Catalog& catalog) {
  auto rank = [](ModelClass m) -> int {
    switch (m) {
      case ModelClass::DNN: return 3;
      case ModelClass::MLP: return 2;
      case ModelClass::LOGREG: return 1;
      default: return 0;  // localization classes are not rank-ordered
    }
  };
  for (const auto& m : catalog) {
    if (m.ttl_s <= 0) {
      throw ValidationError("catalog agent " + m.agent_id + ": ttl_s must be > 0");
    }
    if (m.accuracy < 0.0 || m.accuracy > 1.0) {
      throw ValidationError("catalog agent " + m.agent_id + ": accuracy out of [0,1]");
    }
  }
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    for (std::size_t k = i + 1; k < catalog.size(); ++k) {
      if (catalog[i].agent_id == catalog[k].agent_id) {
        throw ValidationError("catalog: duplicate agent_id \"" + catalog[k].agent_id + "\"");
      }
    }
  }
  for (const auto& a : catalog) {
    for (const auto& b : catalog) {
      if (a.capability != b.capability) continue;
      int ra = rank(a.model_class), rb = rank(b.model_class);
      if (ra == 0 || rb == 0 || ra <= rb) continue;
      if (!(a.accuracy > b.accuracy)) {
        throw ValidationError("catalog: " + a.agent_id + " (" + to_string(a.model_class) +
                              ") must be more accurate than " + b.agent_id);
      }
      if (!(a.payload_bytes > b.payload_bytes)) {
        throw ValidationError("catalog: " + a.agent_id + " (" + to_string(a.model_class) +
                              ") must have a larger payload than " + b.agent_id);
      }
    }
  }
}

}  // namespace edgeswarm
