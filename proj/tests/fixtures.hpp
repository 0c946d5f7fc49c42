#pragma once

#include <string>

#include "spedn/kg/knowledge_graph.hpp"

namespace spedn::testing {

inline std::string data_path(const std::string& rel) { return std::string(SPEDN_DATA_DIR) + "/" + rel; }

inline const kg::KnowledgeGraph& mini_geo() {
  static const kg::KnowledgeGraph g = kg::load_kg(data_path("geo/kg.tsv"));
  return g;
}

inline const kg::KnowledgeGraph& mini_atis() {
  static const kg::KnowledgeGraph g = kg::load_kg(data_path("atis/kg.tsv"));
  return g;
}

}  // namespace spedn::testing
