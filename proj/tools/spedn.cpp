// spedn: command-line front end over the library.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"
#include "spedn/logic/atis.hpp"
#include "spedn/logic/geo.hpp"
#include "spedn/train/pipeline.hpp"

namespace fs = std::filesystem;
using namespace spedn;

namespace {

struct Config {
  std::string data;
  std::string kg, lexicon, ordinals, ckpt, tagger;
  bool mp = true;
  bool controller = true;
  std::size_t beam = 5;
  std::string graph = "chain";
  std::uint64_t seed = 1;
};

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  return s;
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << "error kind=" << kind << " message=" << one_line(message) << "\n";
  return code;
}

fs::path pick(const std::string& given, const std::string& data, const char* file) {
  if (!given.empty()) return given;
  if (!data.empty()) return fs::path(data) / file;
  throw Error(ErrorKind::Io, std::string("no ") + file + " given (use --data or the matching flag)");
}

fs::path need_file(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorKind::Io, "cannot open " + p.string());
  return p;
}

kg::KnowledgeGraph load_graph(const Config& c) { return kg::load_kg(need_file(pick(c.kg, c.data, "kg.tsv"))); }

train::Domain load_domain(const Config& c) {
  auto kg = need_file(pick(c.kg, c.data, "kg.tsv"));
  auto dir = kg.parent_path();
  fs::path lex = c.lexicon.empty() ? dir / "lexicon.tsv" : need_file(c.lexicon);
  fs::path ord = c.ordinals.empty() ? dir / "ordinals.tsv" : need_file(c.ordinals);
  return train::Domain::load(kg, lex, ord);
}

prep::GraphMode graph_mode(const Config& c) {
  return c.graph == "full" ? prep::GraphMode::Full : prep::GraphMode::Chain;
}

model::DecodeOptions decode_options(const Config& c) { return {c.beam, c.controller, 0}; }

model::Graph2Seq load_model(const Config& c) {
  if (c.ckpt.empty()) throw Error(ErrorKind::Io, "no checkpoint given (--ckpt)");
  return model::Graph2Seq::load(c.ckpt);
}

std::optional<encoder::MentionTagger> load_tagger(const Config& c) {
  if (c.tagger.empty()) return std::nullopt;
  return encoder::MentionTagger::load(c.tagger);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(need_file(p), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
  out << content;
}

fs::path predicates_path(const Config& c, const std::string& given) {
  if (!given.empty()) return need_file(given);
  return need_file(need_file(pick(c.kg, c.data, "kg.tsv")).parent_path() / "predicates.tsv");
}

void print_answer(const train::Answer& a, bool blocks, bool graph, bool trace) {
  if (trace) {
    std::cout << "tokens=" << text::join(a.ctx.tokens, " ") << "\n";
    for (const auto& m : a.ctx.entities)
      std::cout << "entity=" << m.entity << ":" << m.type << " span=" << m.begin << "-" << m.end << "\n";
    std::cout << "types=";
    bool first = true;
    for (const auto& [t, src] : a.ctx.types) std::cout << (first ? "" : ",") << t, first = false;
    std::cout << "\nrelations=" << a.ctx.relations.size() << "\nnodes=" << text::join(a.graph.symbols, " ")
              << "\nedges=" << a.graph.edges.size() << "\nsymbols=";
    first = true;
    for (auto s : a.decoded.symbols) std::cout << (first ? "" : " ") << s, first = false;
    std::cout << "\nlog_prob=" << a.decoded.log_prob << "\ncomplete=" << a.decoded.complete << "\n";
  }
  if (blocks) std::cout << "blocks=" << blocks::print_blocks(a.decoded.blocks) << "\n";
  if (graph && a.query) std::cout << query::render_graph(*a.query);
  if (a.answer)
    std::cout << "answer=" << query::format_answer(*a.answer) << "\n";
  else
    std::cout << "problem=" << one_line(a.problem) << "\n";
}

// ---------------------------------------------------------------------------

int cmd_kg(const Config& c, const std::string& action) {
  auto g = load_graph(c);
  if (action == "validate") {
    std::cout << "ok types=" << g.types().size() << " relations=" << g.relations().size()
              << " entities=" << g.entities().size() << " facts=" << g.facts().size() << "\n";
    return 0;
  }
  std::cout << "types=" << g.types().size() << "\nrelations=" << g.relations().size()
            << "\nentities=" << g.entities().size() << "\nfacts=" << g.facts().size() << "\n";
  for (const auto& t : g.types()) std::cout << "type." << t << "=" << g.entities_of_type(t).size() << "\n";
  for (const auto& r : g.relations())
    std::cout << "relation." << r.name << "=" << r.domain << "->"
              << (r.is_entity_relation() ? r.range_type() : std::string(kg::to_string(r.literal_kind()))) << "\n";
  return 0;
}

int cmd_parse(const Config& c, const std::string& text) {
  auto seq = blocks::parse_blocks(text);
  if (seq.empty()) throw ParseError(ErrorKind::Parse, "empty block sequence", 0);
  std::cout << blocks::print_blocks(seq) << "\n";
  if (!c.kg.empty() || !c.data.empty()) {
    auto g = load_graph(c);
    auto v = blocks::validate_blocks(seq, g);
    for (const auto& x : v) std::cerr << "violation block=" << x.index << " message=" << one_line(x.message) << "\n";
    if (!v.empty()) return fail("Schema", std::to_string(v.size()) + " schema violation(s)", 1);
  }
  return 0;
}

int cmd_convert(const Config& c, const std::string& which, const std::string& file, const std::string& table) {
  auto g = load_graph(c);
  std::istringstream in(read_file(file));
  std::optional<logic::GeoPredicateTable> geo;
  std::optional<logic::AtisTable> atis;
  if (which == "geo")
    geo = logic::GeoPredicateTable::load(predicates_path(c, table));
  else
    atis = logic::AtisTable::load(predicates_path(c, table));
  std::string line;
  std::size_t n = 0, failed = 0;
  while (std::getline(in, line)) {
    ++n;
    auto lf = text::trim(line);
    if (lf.empty() || lf[0] == '#') continue;
    try {
      auto seq = geo ? logic::geo_to_blocks(logic::parse_geo(lf), g, *geo)
                     : logic::atis_to_blocks(logic::parse_atis(lf), g, *atis);
      std::cout << blocks::print_blocks(seq) << "\n";
    } catch (const Error& e) {
      ++failed;
      std::cerr << "error kind=" << to_string(e.kind()) << " line=" << n << " message=" << one_line(e.what()) << "\n";
    }
  }
  return failed ? 1 : 0;
}

int cmd_assemble(const Config& c, const std::string& text) {
  auto g = load_graph(c);
  std::cout << query::render_graph(query::assemble(blocks::parse_blocks(text), g));
  return 0;
}

int cmd_execute(const Config& c, const std::string& text) {
  auto d = load_domain(c);
  std::cout << query::format_answer(query::execute(query::assemble(blocks::parse_blocks(text), d.kg), d.kg, d.ordinals))
            << "\n";
  return 0;
}

int cmd_ask(const Config& c, const std::string& question, const std::string& gold, bool trace) {
  auto d = load_domain(c);
  auto m = load_model(c);
  auto tagger = load_tagger(c);
  const auto* t = tagger ? &*tagger : nullptr;
  if (!gold.empty()) {
    auto rep = train::ask_corpus(m, train::load_corpus(gold), d, decode_options(c), graph_mode(c), t);
    std::cout << rep.summary();
    return 0;
  }
  if (question.empty()) throw Error(ErrorKind::Io, "ask needs a question or --gold <corpus>");
  print_answer(train::ask(m, question, d, decode_options(c), graph_mode(c), t), true, false, trace);
  return 0;
}

struct TrainArgs {
  std::string train, test, out, report;
  std::string preset;
  std::size_t epochs = 80, batch = 30, hidden = 256;
  double lr = 0.01, dropout = 0.2;
};

int cmd_train(const Config& c, const TrainArgs& a) {
  auto d = load_domain(c);
  auto cfg = a.preset.empty() ? train::TrainConfig{} : train::preset(a.preset);
  if (a.preset.empty()) {
    cfg.mode = c.mp ? model::OutputMode::Decomposed : model::OutputMode::Atomic;
    cfg.controller = c.controller;
  }
  cfg.beam = c.beam;
  cfg.seed = c.seed;
  cfg.graph = graph_mode(c);
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;
  cfg.hidden = a.hidden;
  cfg.lr = a.lr;
  cfg.dropout = a.dropout;
  auto out = a.out.empty() ? c.ckpt : a.out;
  if (out.empty()) throw Error(ErrorKind::Io, "train needs --out or --ckpt");
  auto train_set = train::load_corpus(a.train);
  auto test_set = a.test.empty() ? std::vector<train::CorpusEntry>{} : train::load_corpus(a.test);
  std::cerr << "preset=" << train::preset_name(cfg) << " train=" << train_set.size() << " test=" << test_set.size()
            << "\n";
  auto r = train::train(train_set, test_set, d, cfg, [](const train::EpochLog& l) { std::cout << l.line() << std::endl; });
  r.model->save(out);
  std::cout << "best_epoch=" << r.best_epoch << "\nbest_em=" << r.best_em << "\ncheckpoint=" << out << "\n";
  if (!a.report.empty() && !test_set.empty()) {
    auto rep = train::evaluate(*r.model, train::prepare(test_set, d, cfg.graph), d, cfg.decode_options());
    write_file(a.report, rep.to_json());
  }
  return 0;
}

int cmd_eval(const Config& c, const std::string& corpus, const std::string& report) {
  auto d = load_domain(c);
  auto m = load_model(c);
  auto rep = train::evaluate(m, train::prepare(train::load_corpus(corpus), d, graph_mode(c)), d, decode_options(c));
  std::cout << rep.summary();
  if (!report.empty()) write_file(report, rep.to_json());
  return 0;
}

int cmd_stats(const std::string& corpus) {
  auto s = train::corpus_stats(train::load_corpus(corpus));
  std::cout << "examples=" << s.examples << "\n" << train::stats_summary(s);
  return 0;
}

int cmd_gen(const Config& c, const std::string& which, const std::string& out_dir, std::size_t n_train,
            std::size_t n_test, const std::string& table) {
  auto d = load_domain(c);
  train::GeneratorOptions opts{n_train, n_test, c.seed};
  auto split = which == "geo" ? train::generate_geo(d, logic::GeoPredicateTable::load(predicates_path(c, table)), opts)
                              : train::generate_atis(d, logic::AtisTable::load(predicates_path(c, table)), opts);
  fs::path dir(out_dir);
  fs::create_directories(dir);
  train::save_corpus(dir / "train.tsv", split.train);
  train::save_corpus(dir / "test.tsv", split.test);
  std::string tagged;
  for (const auto& s : train::tagged_from_corpus(split.train, d)) tagged += encoder::format_tagged(s) + "\n";
  write_file(dir / "tagged.tsv", tagged);
  std::cout << "train=" << split.train.size() << "\ntest=" << split.test.size() << "\ndir=" << dir.string() << "\n";
  return 0;
}

int cmd_tagger_train(const Config& c, const std::string& file, const std::string& out, std::size_t epochs) {
  auto data = encoder::load_tagged(file);
  encoder::EncoderConfig cfg;
  cfg.d = 16;
  cfg.d_k = 4;
  cfg.heads = 4;
  cfg.d_ff = 32;
  encoder::TaggerTraining opts;
  opts.epochs = epochs;
  opts.seed = c.seed;
  auto path = out.empty() ? c.tagger : out;
  if (path.empty()) throw Error(ErrorKind::Io, "tagger train needs --out or --tagger");
  auto t = encoder::train_tagger(data, cfg, opts,
                                 [](std::size_t e, double loss) { std::cout << "epoch=" << e << " loss=" << loss << "\n"; });
  t.save(path);
  std::cout << "checkpoint=" << path << "\n";
  return 0;
}

int cmd_tagger_tag(const Config& c, const std::string& question) {
  auto t = load_tagger(c);
  if (!t) throw Error(ErrorKind::Io, "no tagger checkpoint given (--tagger)");
  auto tokens = text::word_tokens(question);
  auto labels = t->tag(tokens);
  for (std::size_t i = 0; i < tokens.size(); ++i) std::cout << tokens[i] << "\t" << labels[i] << "\n";
  return 0;
}

int cmd_repl(const Config& c) {
  auto d = load_domain(c);
  auto m = load_model(c);
  auto tagger = load_tagger(c);
  std::optional<train::Answer> last;
  std::string line;
  std::cout << "> " << std::flush;
  while (std::getline(std::cin, line)) {
    auto q = std::string(text::trim(line));
    try {
      if (q == ":quit" || q == ":q") break;
      if (q == ":blocks" || q == ":graph" || q == ":trace") {
        if (!last)
          std::cout << "no question yet\n";
        else if (q == ":blocks")
          std::cout << blocks::print_blocks(last->decoded.blocks) << "\n";
        else if (q == ":graph")
          std::cout << (last->query ? query::render_graph(*last->query) : "no query graph: " + last->problem + "\n");
        else
          print_answer(*last, false, false, true);
      } else if (q == ":help") {
        std::cout << "question, or :blocks :graph :trace :quit\n";
      } else if (!q.empty()) {
        last = train::ask(m, q, d, decode_options(c), graph_mode(c), tagger ? &*tagger : nullptr);
        print_answer(*last, true, false, false);
      }
    } catch (const Error& e) {
      std::cout << "error kind=" << to_string(e.kind()) << " message=" << one_line(e.what()) << "\n";
    }
    std::cout << "> " << std::flush;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-block question answering over a knowledge graph"};
  app.require_subcommand(1);
  Config c;
  app.add_option("--data", c.data, "Fixture directory holding kg.tsv, lexicon.tsv, ordinals.tsv")->envname("SPEDN_DATA");
  app.add_option("--kg", c.kg, "Knowledge graph file")->envname("SPEDN_KG");
  app.add_option("--lexicon", c.lexicon, "Entity lexicon")->envname("SPEDN_LEXICON");
  app.add_option("--ordinals", c.ordinals, "Ordinal lexicon")->envname("SPEDN_ORDINALS");
  app.add_option("--ckpt", c.ckpt, "Model checkpoint")->envname("SPEDN_CKPT");
  app.add_option("--tagger", c.tagger, "Mention tagger checkpoint")->envname("SPEDN_TAGGER");
  app.add_flag("--mp,!--no-mp", c.mp, "Decomposed block symbols (training)")->envname("SPEDN_MP");
  app.add_flag("--controller,!--no-controller", c.controller, "Legality masking while decoding")
      ->envname("SPEDN_CONTROLLER");
  app.add_option("--beam", c.beam, "Beam width")->envname("SPEDN_BEAM")->check(CLI::PositiveNumber);
  app.add_option("--graph", c.graph, "Question graph edges")
      ->envname("SPEDN_GRAPH")
      ->check(CLI::IsMember({"chain", "full"}));
  app.add_option("--seed", c.seed, "Random seed")->envname("SPEDN_SEED");

  std::string action, text, which, file, table, question, gold, report, out_dir, out;
  bool trace = false;
  std::size_t n_train = 0, n_test = 0, tag_epochs = 30;
  TrainArgs ta;

  auto* kg_cmd = app.add_subcommand("kg", "Validate or summarise the knowledge graph");
  kg_cmd->add_option("action", action)->required()->check(CLI::IsMember({"validate", "stats"}));
  auto* parse_cmd = app.add_subcommand("parse", "Parse and canonically print a block sequence");
  parse_cmd->add_option("blocks", text)->required();
  auto* conv_cmd = app.add_subcommand("convert", "Convert logical forms (one per line) to blocks");
  conv_cmd->add_option("dataset", which)->required()->check(CLI::IsMember({"geo", "atis"}));
  conv_cmd->add_option("file", file)->required();
  conv_cmd->add_option("--predicates", table, "Predicate table");
  auto* asm_cmd = app.add_subcommand("assemble", "Assemble blocks into a query graph");
  asm_cmd->add_option("blocks", text)->required();
  auto* exe_cmd = app.add_subcommand("execute", "Assemble and execute blocks");
  exe_cmd->add_option("blocks", text)->required();
  auto* ask_cmd = app.add_subcommand("ask", "Answer a question with a trained model");
  ask_cmd->add_option("question", question);
  ask_cmd->add_option("--gold", gold, "Score every question of a corpus file instead");
  ask_cmd->add_flag("--trace", trace, "Print the context, graph and decoded symbols");
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("corpus", ta.train)->required();
  train_cmd->add_option("--test", ta.test, "Held-out corpus evaluated each epoch");
  train_cmd->add_option("--out", ta.out, "Checkpoint to write (default --ckpt)");
  train_cmd->add_option("--preset", ta.preset, "base, mp or mp+controller")
      ->check(CLI::IsMember({"base", "mp", "mp+controller"}));
  train_cmd->add_option("--epochs", ta.epochs)->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", ta.batch)->check(CLI::PositiveNumber);
  train_cmd->add_option("--hidden", ta.hidden)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", ta.lr);
  train_cmd->add_option("--dropout", ta.dropout);
  train_cmd->add_option("--report", ta.report, "JSON report of the held-out evaluation");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  eval_cmd->add_option("corpus", file)->required();
  eval_cmd->add_option("--report", report, "JSON report file");
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics");
  stats_cmd->add_option("corpus", file)->required();
  auto* gen_cmd = app.add_subcommand("gen", "Generate a templated train/test corpus");
  gen_cmd->add_option("dataset", which)->required()->check(CLI::IsMember({"geo", "atis"}));
  gen_cmd->add_option("--out-dir", out_dir)->required();
  gen_cmd->add_option("--train", n_train, "Training examples (default 120 geo, 200 atis)");
  gen_cmd->add_option("--test", n_test, "Test examples (default 30 geo, 50 atis)");
  gen_cmd->add_option("--predicates", table, "Predicate table");
  auto* tag_cmd = app.add_subcommand("tagger", "Mention tagger");
  tag_cmd->add_option("action", action)->required()->check(CLI::IsMember({"train", "tag"}));
  tag_cmd->add_option("input", text, "Tagged corpus (train) or question (tag)")->required();
  tag_cmd->add_option("--out", out, "Checkpoint to write (default --tagger)");
  tag_cmd->add_option("--epochs", tag_epochs)->check(CLI::PositiveNumber);
  auto* repl_cmd = app.add_subcommand("repl", "Interactive questions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("Usage", e.what(), 2);
  }

  try {
    if (*kg_cmd) return cmd_kg(c, action);
    if (*parse_cmd) return cmd_parse(c, text);
    if (*conv_cmd) return cmd_convert(c, which, file, table);
    if (*asm_cmd) return cmd_assemble(c, text);
    if (*exe_cmd) return cmd_execute(c, text);
    if (*ask_cmd) return cmd_ask(c, question, gold, trace);
    if (*train_cmd) return cmd_train(c, ta);
    if (*eval_cmd) return cmd_eval(c, file, report);
    if (*stats_cmd) return cmd_stats(file);
    if (*gen_cmd) {
      if (n_train == 0) n_train = which == "geo" ? 120 : 200;
      if (n_test == 0) n_test = which == "geo" ? 30 : 50;
      return cmd_gen(c, which, out_dir, n_train, n_test, table);
    }
    if (*tag_cmd) return action == "train" ? cmd_tagger_train(c, text, out, tag_epochs) : cmd_tagger_tag(c, text);
    if (*repl_cmd) return cmd_repl(c);
  } catch (const ParseError& e) {
    return fail(to_string(e.kind()), e.what(), 2);
  } catch (const Error& e) {
    return fail(to_string(e.kind()), e.what(), e.kind() == ErrorKind::Parse ? 2 : 1);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), 1);
  }
  return 0;
}
