#include "spedn/encoder/tagger.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "spedn/common/error.hpp"
#include "spedn/common/text.hpp"

namespace spedn::encoder {

using namespace spedn::tensor;
using nlohmann::json;

std::vector<TaggedSentence> parse_tagged(std::string_view text) {
  std::vector<TaggedSentence> out;
  std::size_t lineno = 0;
  for (const auto& raw : text::split(text, '\n')) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(ErrorKind::Parse, "expected question<TAB>labels", 0, lineno);
    TaggedSentence s{text::word_tokens(line.substr(0, tab)), text::split_ws(line.substr(tab + 1))};
    if (s.tokens.size() != s.labels.size())
      throw ParseError(ErrorKind::Parse,
                       std::to_string(s.tokens.size()) + " tokens but " + std::to_string(s.labels.size()) + " labels",
                       0, lineno);
    for (const auto& l : s.labels)
      if (l != "B-ENT" && l != "I-ENT" && l != "O") throw ParseError(ErrorKind::Parse, "unknown label " + l, 0, lineno);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TaggedSentence> load_tagged(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_tagged(ss.str());
}

std::string format_tagged(const TaggedSentence& s) {
  return text::join(s.tokens, " ") + "\t" + text::join(s.labels, " ");
}

std::vector<std::pair<std::size_t, std::size_t>> bio_spans(const std::vector<std::string>& labels) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < labels.size();) {
    if (labels[i] == "O") {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < labels.size() && labels[j] == "I-ENT") ++j;
    out.emplace_back(i, j);
    i = j;
  }
  return out;
}

std::vector<std::string> bio_labels(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& spans) {
  std::vector<std::string> out(n, "O");
  for (const auto& [b, e] : spans)
    for (std::size_t i = b; i < e && i < n; ++i) out[i] = i == b ? "B-ENT" : "I-ENT";
  return out;
}

// ---------------------------------------------------------------------------

MentionTagger::MentionTagger(EncoderConfig cfg, Vocab unigrams, Vocab bigrams, std::uint64_t seed)
    : cfg_(std::move(cfg)), store_(std::make_unique<ParameterStore>(seed)) {
  cfg_.validate();
  auto& s = *store_;
  embed_ = std::make_unique<TokenEmbedder>(s, "tag.embed", unigrams, bigrams, cfg_.d);
  transformer_ = std::make_unique<TransformerLayer>(s, "tag.tf", cfg_);
  bilstm_ = std::make_unique<BiLstm>(s, "tag.lstm", cfg_.d, cfg_.d / 2);
  if (cfg_.fusion) fusion_ = std::make_unique<Fusion>(s, "tag.fuse", cfg_.d);
  we_ = s.weight("tag.out.w", cfg_.d, cfg_.labels.size());
  be_ = s.bias("tag.out.b", cfg_.labels.size());
  trans_ = s.add("tag.crf", Tensor(cfg_.labels.size() + 2, cfg_.labels.size() + 2));
}

std::size_t MentionTagger::label_id(const std::string& label) const {
  auto it = std::find(cfg_.labels.begin(), cfg_.labels.end(), label);
  if (it == cfg_.labels.end()) throw Error(ErrorKind::Model, "unknown label " + label);
  return static_cast<std::size_t>(it - cfg_.labels.begin());
}

Var MentionTagger::emissions(const std::vector<std::string>& tokens) const {
  auto x = (*embed_)(tokens);
  auto xt = (*transformer_)(x);
  auto xb = (*bilstm_)(x);
  auto fused = fusion_ ? (*fusion_)(xt, xb) : xt;
  return add_row(matmul(fused, we_), be_);
}

Var MentionTagger::loss(const TaggedSentence& s) const {
  std::vector<std::size_t> gold;
  for (const auto& l : s.labels) gold.push_back(label_id(l));
  return crf::neg_log_likelihood(emissions(s.tokens), trans_, gold);
}

std::vector<std::string> MentionTagger::tag(const std::vector<std::string>& tokens) const {
  if (tokens.empty()) return {};
  NoGrad ng;
  auto path = crf::viterbi(emissions(tokens)->value, trans_->value);
  std::vector<std::string> out;
  for (auto k : path) out.push_back(cfg_.labels[k]);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> MentionTagger::spans(const std::vector<std::string>& tokens) const {
  return bio_spans(tag(tokens));
}

namespace {

std::filesystem::path meta_path(const std::filesystem::path& file) {
  return std::filesystem::path(file.string() + ".meta.json");
}

}  // namespace

void MentionTagger::save(const std::filesystem::path& file) const {
  store_->save(file);
  json meta = {{"kind", "tagger"},
               {"seed", store_->seed()},
               {"d", cfg_.d},
               {"d_k", cfg_.d_k},
               {"heads", cfg_.heads},
               {"d_ff", cfg_.d_ff},
               {"relative", cfg_.relative},
               {"fusion", cfg_.fusion},
               {"labels", cfg_.labels},
               {"unigrams", embed_->unigrams().symbols()},
               {"bigrams", embed_->bigrams().symbols()}};
  std::ofstream out(meta_path(file));
  if (!out) throw Error(ErrorKind::Io, "cannot write " + meta_path(file).string());
  out << meta.dump(1) << "\n";
}

MentionTagger MentionTagger::load(const std::filesystem::path& file) {
  std::ifstream in(meta_path(file));
  if (!in) throw Error(ErrorKind::Io, "missing tagger metadata " + meta_path(file).string());
  json meta;
  try {
    in >> meta;
    if (meta.at("kind") != "tagger") throw Error(ErrorKind::Model, file.string() + " is not a tagger checkpoint");
    EncoderConfig cfg;
    cfg.d = meta.at("d");
    cfg.d_k = meta.at("d_k");
    cfg.heads = meta.at("heads");
    cfg.d_ff = meta.at("d_ff");
    cfg.relative = meta.at("relative");
    cfg.fusion = meta.at("fusion");
    cfg.labels = meta.at("labels").get<std::vector<std::string>>();
    MentionTagger t(cfg, Vocab::from_symbols(meta.at("unigrams")), Vocab::from_symbols(meta.at("bigrams")),
                    meta.at("seed"));
    t.store_->load(file);
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "bad tagger metadata: " + std::string(e.what()));
  }
}

MentionTagger train_tagger(const std::vector<TaggedSentence>& data, const EncoderConfig& cfg,
                           const TaggerTraining& opts, const std::function<void(std::size_t, double)>& on_epoch) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& s : data) sentences.push_back(s.tokens);
  auto [uni, bi] = TokenEmbedder::build_vocabs(sentences);
  MentionTagger tagger(cfg, uni, bi, opts.seed);
  Adam adam({opts.lr});
  std::mt19937_64 rng(opts.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t b = 0; b < order.size(); b += opts.batch) {
      tagger.params().zero_grad();
      std::vector<Var> losses;
      for (std::size_t i = b; i < std::min(order.size(), b + opts.batch); ++i)
        if (!data[order[i]].tokens.empty()) losses.push_back(tagger.loss(data[order[i]]));
      if (losses.empty()) continue;
      auto loss = sum_all(concat_rows(losses));
      total += loss->value[0];
      backward(loss);
      clip_grad_norm(tagger.params(), opts.clip);
      adam.step(tagger.params());
    }
    if (on_epoch) on_epoch(epoch, data.empty() ? 0.0 : total / static_cast<double>(data.size()));
  }
  return tagger;
}

}  // namespace spedn::encoder
