#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spedn/blocks/block.hpp"
#include "spedn/logic/atis.hpp"
#include "spedn/logic/geo.hpp"
#include "spedn/prep/context.hpp"
#include "spedn/query/query_graph.hpp"

namespace spedn::train {

/// A knowledge graph with the lexicons the pipeline reads alongside it.
struct Domain {
  kg::KnowledgeGraph kg;
  prep::EntityLexicon entities;
  query::OrdinalLexicon ordinals;

  /// Reads kg.tsv, lexicon.tsv and ordinals.tsv from a fixture directory.
  static Domain load(const std::filesystem::path& dir);
  static Domain load(const std::filesystem::path& kg, const std::filesystem::path& lexicon,
                     const std::filesystem::path& ordinals);
};

struct CorpusEntry {
  std::string question;
  blocks::BlockSequence gold;
  /// Source logical form when known; empty otherwise.
  std::string logical_form;
  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

/// Lines `question<TAB>blocks[<TAB>logical form]`; `#` starts a comment.
/// Throws ParseError with the 1-based line.
std::vector<CorpusEntry> parse_corpus(std::string_view text);
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& file);
std::string format_corpus(const std::vector<CorpusEntry>& corpus);
void save_corpus(const std::filesystem::path& file, const std::vector<CorpusEntry>& corpus);

struct Split {
  std::vector<CorpusEntry> train, test;
};

struct GeneratorOptions {
  std::size_t train = 120;
  std::size_t test = 30;
  std::uint64_t seed = 1;
};

/// Templated GEO-style questions with Prolog logical forms, converted to
/// blocks. Templates are interleaved so both splits cover all of them;
/// question strings never repeat across the splits. Every kept example
/// converts, validates, assembles, executes, and has its entity constants
/// linked in the question.
Split generate_geo(const Domain& d, const logic::GeoPredicateTable& table, const GeneratorOptions& opts);
/// The same for ATIS-style flight questions with lambda logical forms
/// (default 200/50).
Split generate_atis(const Domain& d, const logic::AtisTable& table, const GeneratorOptions& opts);

}  // namespace spedn::train
