// Acceptance gate: ten end-to-end checks over the bundled fixtures,
// one PASS/FAIL line each, nonzero exit when any check fails. Numeric
// tolerances are pinned next to each check; every randomized step runs
// from a fixed seed so reruns are byte-identical.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corpusgen/errors.hpp"
#include "corpusgen/lexicon.hpp"
#include "corpusgen/metrics.hpp"
#include "corpusgen/nlg_generate.hpp"
#include "corpusgen/nlg_model.hpp"
#include "corpusgen/nlg_train.hpp"
#include "corpusgen/pipeline.hpp"
#include "corpusgen/rng.hpp"
#include "corpusgen/seed_corpus.hpp"
#include "corpusgen/template_engine.hpp"
#include "corpusgen/vocab.hpp"

using namespace corpusgen;
namespace fs = std::filesystem;

namespace {

using Problems = std::vector<std::string>;

std::string data_path(const std::string &name) {
  return std::string(CORPUSGEN_DATA_DIR) + "/" + name;
}

fs::path scratch_dir(const std::string &name) {
  fs::path p = fs::temp_directory_path() / ("corpusgen_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// lowercase, strip periods, drop articles: gloss comparison ignores
// exactly the article/punctuation slack the rendering allows
std::string normalize_gloss(const std::string &s) {
  std::string lowered;
  for (char c : s) {
    if (c == '.') continue;
    lowered += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  std::istringstream in(lowered);
  std::string word, out;
  while (in >> word) {
    if (word == "a" || word == "an" || word == "the") continue;
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

std::string join_spaced(const std::vector<std::string> &tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

// ---------------------------------------------------------------- 1
Problems check_lexicon_counts() {
  Problems out;
  Lexicon lex = load_lexicon_file(data_path("figure1.lex"));
  const std::map<std::string, std::size_t> expected = {
      {"who", 4},  {"want", 3},  {"action", 5},     {"number", 4},
      {"coats", 17}, {"pants", 7}, {"shoes", 6},    {"decorators", 11},
      {"food", 31}, {"drink", 15}, {"location", 9}};
  if (lex.categories().size() != expected.size())
    out.push_back("expected 11 categories, got " +
                  std::to_string(lex.categories().size()));
  for (const auto &[name, count] : expected) {
    if (!lex.has_category(name)) {
      out.push_back("missing category " + name);
      continue;
    }
    std::size_t got = lex.category_words(name).size();
    if (got != count)
      out.push_back(name + ": expected " + std::to_string(count) + " words, got " +
                    std::to_string(got));
  }
  if (lex.total_entries() != 112)
    out.push_back("expected 112 entries total, got " +
                  std::to_string(lex.total_entries()));
  return out;
}

// ---------------------------------------------------------------- 2
Problems check_example_glosses() {
  Problems out;
  Lexicon lex = load_lexicon_file(data_path("full.lex"));
  std::vector<Template> templates =
      load_templates_file(data_path("templates.tpl"));
  AugmentationRuleSet rules = load_rules_file(data_path("augment.rules"));

  // every template expansion, keyed by surface
  std::map<std::string, Sentence> expansions;
  for (const Template &t : templates)
    for (auto &[mr, s] : expand_template(t, lex, CyclePolicy::full_product()))
      expansions.emplace(s.surface, s);

  auto base = [&](const std::string &surface) -> const Sentence * {
    auto it = expansions.find(surface);
    if (it == expansions.end()) {
      out.push_back("no template expansion produces " + surface);
      return nullptr;
    }
    return &it->second;
  };

  struct Example {
    std::vector<std::string> tokens;
    std::string gloss;
  };
  // a-chain: bare noun, one adjective, adjective plus material
  // b-chain: bare noun, measure word, measure+adjective, all three
  const Sentence *base_a = base("我想要穿戴外套");
  const Sentence *base_b = base("他想要喝水");
  if (!base_a || !base_b) return out;

  std::vector<Example> a_examples = {
      {{"我", "想要", "穿戴", "外套"}, "I want to wear a coat"},
      {{"我", "想要", "穿戴", "长", "外套"}, "I want to wear a long coat"},
      {{"我", "想要", "穿戴", "带绒", "长", "外套"},
       "I want to wear a long coat with velvet"},
  };
  std::vector<Example> b_examples = {
      {{"他", "想要", "喝", "水"}, "He wants to drink water"},
      {{"他", "想要", "喝", "一杯", "水"}, "He wants to drink a glass of water"},
      {{"他", "想要", "喝", "一小杯", "温", "水"},
       "He wants to drink a cup of warm water."},
      {{"他", "想要", "喝", "一小杯", "加糖", "温", "水"},
       "He wants to drink a cup of warm water with sugar."},
  };

  auto check_chain = [&](const Sentence &base_sentence,
                         const std::vector<Example> &examples) {
    std::map<std::string, Sentence> closure;
    for (Sentence &v : augment_enumerate(base_sentence, lex, rules))
      closure.emplace(join_spaced(v.tokens), std::move(v));
    for (const Example &ex : examples) {
      auto it = closure.find(join_spaced(ex.tokens));
      if (it == closure.end()) {
        out.push_back("augmentation closure misses " + join_spaced(ex.tokens));
        continue;
      }
      std::string got = render_gloss(it->second, lex);
      if (normalize_gloss(got) != normalize_gloss(ex.gloss))
        out.push_back("gloss mismatch for " + join_spaced(ex.tokens) +
                      ": expected \"" + ex.gloss + "\", rendered \"" + got +
                      "\"");
    }
  };
  check_chain(*base_a, a_examples);
  check_chain(*base_b, b_examples);
  return out;
}

// ---------------------------------------------------------------- 3
Problems check_expansion_oracle() {
  Problems out;
  Lexicon lex = load_lexicon_file(data_path("figure1.lex"));
  std::vector<Template> templates =
      load_templates_file(data_path("templates.tpl"));
  if (templates.size() < 5) {
    out.push_back("expected at least 5 bundled templates");
    return out;
  }
  for (std::size_t ti = 0; ti < 5; ++ti) {
    const Template &t = templates[ti];
    // independent brute force: odometer over the required slots
    std::vector<std::size_t> req; // indices into t.slots
    for (std::size_t i = 0; i < t.slots.size(); ++i)
      if (!t.slots[i].optional) req.push_back(i);
    std::vector<const std::vector<LexEntry> *> words;
    std::uint64_t combos = 1;
    for (std::size_t i : req) {
      words.push_back(&lex.category_words(t.slots[i].category));
      combos *= words.back()->size();
    }
    std::set<std::string> surfaces;
    std::vector<std::size_t> pick(req.size(), 0);
    for (std::uint64_t n = 0; n < combos; ++n) {
      std::vector<std::string> tokens;
      for (const Template::Element &e : t.elements) {
        if (!e.is_slot) {
          tokens.push_back(e.literal);
          continue;
        }
        const Slot &slot = t.slots[static_cast<std::size_t>(e.slot_index)];
        if (slot.optional) continue;
        for (std::size_t k = 0; k < req.size(); ++k)
          if (req[k] == static_cast<std::size_t>(e.slot_index))
            tokens.push_back((*words[k])[pick[k]].surface);
      }
      surfaces.insert(join_tokens(tokens, lex.language()));
      for (std::size_t k = pick.size(); k-- > 0;) {
        if (++pick[k] < words[k]->size()) break;
        pick[k] = 0;
      }
    }
    std::uint64_t counted = expansion_count(t, lex);
    auto expanded = expand_template(t, lex, CyclePolicy::full_product());
    if (counted != combos)
      out.push_back(t.id + ": expansion_count " + std::to_string(counted) +
                    " != brute force " + std::to_string(combos));
    if (expanded.size() != combos)
      out.push_back(t.id + ": expansion yields " +
                    std::to_string(expanded.size()) + " != brute force " +
                    std::to_string(combos));
    if (surfaces.size() != combos)
      out.push_back(t.id + ": brute force surfaces collide: " +
                    std::to_string(surfaces.size()) + " distinct of " +
                    std::to_string(combos));
    for (const auto &[mr, s] : expanded)
      if (!surfaces.count(s.surface)) {
        out.push_back(t.id + ": expansion produced unexpected " + s.surface);
        break;
      }
  }
  return out;
}

// ---------------------------------------------------------------- 4
Problems check_lstm_scalar() {
  Problems out;
  // H = I = 1, all weights zero, candidate bias 1: every gate is
  // sigmoid(0) = 1/2, the candidate is tanh(1), so
  // h1 = 0.5 * tanh(0.5 * tanh(1))
  const double kOracle = 0.18169974219452625;
  const double kTol = 1e-12;
  LstmParams p(1, 1);
  p.b_g[0] = 1.0;
  LstmState s = lstm_step(p, LstmState::zero(1), Vec{0.0});
  double err = std::fabs(s.h[0] - kOracle);
  if (!(err < kTol))
    out.push_back("h1 = " + fmt(s.h[0]) + ", expected " + fmt(kOracle) +
                  " within 1e-12 (err " + fmt(err) + ")");
  return out;
}

std::vector<TrainingPair> toy_pairs() {
  return {
      {{"who=我", "want=想要", "drink=水"}, {"我", "想要", "喝", "水"}},
      {{"who=他", "want=想要", "drink=牛奶"}, {"他", "想要", "喝", "牛奶"}},
      {{"who=我", "want=不想", "food=苹果"}, {"我", "不想", "吃", "苹果"}},
  };
}

NlgModel toy_model(LogitsFrom mode, std::uint64_t seed, Hyper hyper) {
  std::vector<std::vector<std::string>> ins, outs;
  for (const TrainingPair &p : toy_pairs()) {
    ins.push_back(p.first);
    outs.push_back(p.second);
  }
  return init_model(Vocab::build(ins), Vocab::build(outs), hyper, mode, seed);
}

// ---------------------------------------------------------------- 5
Problems check_gradients() {
  Problems out;
  const double kEps = 1e-3; // central differences; smaller steps drown
                            // the signal in floating-point noise
  const double kTol = 1e-4;
  for (LogitsFrom mode : {LogitsFrom::context, LogitsFrom::state_context}) {
    NlgModel m = toy_model(mode, 42, Hyper{4, 5, 5});
    double err = training_grad_check(m, toy_pairs(), kEps);
    if (!(err < kTol))
      out.push_back(std::string("max relative gradient error ") + fmt(err) +
                    " >= 1e-4 in " +
                    (mode == LogitsFrom::context ? "context" : "state_context") +
                    " mode");
  }
  return out;
}

// ---------------------------------------------------------------- 6
Problems check_normalization() {
  Problems out;
  const double kTol = 1e-12;
  const int kModels = 50, kSteps = 20; // 1000 decode steps in total
  std::vector<TrainingPair> pairs = toy_pairs();
  double worst_attn = 0.0, worst_dist = 0.0;
  for (int run = 0; run < kModels; ++run) {
    LogitsFrom mode =
        run % 2 == 0 ? LogitsFrom::context : LogitsFrom::state_context;
    NlgModel m = toy_model(mode, 1000 + static_cast<std::uint64_t>(run),
                           Hyper{4, 6, 5});
    std::vector<EncodedPair> enc_pairs = encode_pairs(
        m, {pairs[static_cast<std::size_t>(run) % pairs.size()]});
    std::vector<Vec> enc = encode(m, enc_pairs[0].input_ids);
    SplitRng rng(static_cast<std::uint64_t>(run) * 7919 + 1);
    LstmState state = LstmState::zero(m.hyper.dec_hidden_dim);
    int prev = Vocab::bos_id;
    for (int step = 0; step < kSteps; ++step) {
      DecodeOut d = decode_step(m, prev, state, enc);
      double dist_sum = 0.0;
      for (double v : d.dist) dist_sum += v;
      worst_dist = std::max(worst_dist, std::fabs(dist_sum - 1.0));
      Attention att = attend(m.p.attn, d.state.h, enc);
      double attn_sum = 0.0;
      for (double v : att.weights) attn_sum += v;
      worst_attn = std::max(worst_attn, std::fabs(attn_sum - 1.0));
      state = d.state;
      prev = static_cast<int>(rng.next_below(
          static_cast<std::uint64_t>(m.vocab_out.size())));
    }
  }
  if (!(worst_dist < kTol))
    out.push_back("output distribution sum off by " + fmt(worst_dist));
  if (!(worst_attn < kTol))
    out.push_back("attention weight sum off by " + fmt(worst_attn));
  return out;
}

// ---------------------------------------------------------------- 7
Problems check_overfit() {
  Problems out;
  Lexicon lex = load_lexicon_file(data_path("full.lex"));
  std::vector<Template> templates =
      load_templates_file(data_path("templates.tpl"));
  SeedCorpus seed = build_seed_corpus(templates, lex,
                                      CyclePolicy::full_product(), 50, 2025);
  std::vector<TrainingPair> pairs = export_training_pairs(seed);
  if (pairs.size() != 50) {
    out.push_back("expected a 50-pair seed, got " +
                  std::to_string(pairs.size()));
    return out;
  }

  // one pair memorized exactly
  {
    std::vector<TrainingPair> one = {pairs[0]};
    NlgModel m0 = init_model(Vocab::build({one[0].first}),
                             Vocab::build({one[0].second}), Hyper{16, 16, 16},
                             LogitsFrom::context, 7);
    TrainHyper th;
    th.learning_rate = 0.5;
    th.epochs = 2000;
    th.batch_size = 1;
    th.rng_seed = 7;
    TrainResult tr = train(m0, one, th);
    double acc = token_accuracy(tr.model, encode_pairs(tr.model, one));
    if (acc != 1.0)
      out.push_back("single-pair teacher-forced accuracy " + fmt(acc) +
                    " != 1.0");
    GeneratedSentence g =
        generate(tr.model, one[0].first, GenStrategy::greedy(), 30);
    if (g.tokens != one[0].second)
      out.push_back("greedy decode did not reproduce the memorized target");
  }

  // the 50-pair subset at H=32 within 500 epochs
  {
    std::vector<std::vector<std::string>> ins, outs;
    for (const TrainingPair &p : pairs) {
      ins.push_back(p.first);
      outs.push_back(p.second);
    }
    NlgModel m0 = init_model(Vocab::build(ins), Vocab::build(outs),
                             Hyper{16, 32, 32}, LogitsFrom::context, 11);
    TrainHyper th;
    th.learning_rate = 1.0;
    th.epochs = 500;
    th.batch_size = 8;
    th.rng_seed = 11;
    TrainResult tr = train(m0, pairs, th);
    double acc = token_accuracy(tr.model, encode_pairs(tr.model, pairs));
    if (!(acc >= 0.95))
      out.push_back("50-pair training accuracy " + fmt(acc) + " < 0.95");
  }
  return out;
}

// one random edit: swap two positions, drop a token, or duplicate one
std::vector<std::string> corrupt(const std::vector<std::string> &tokens,
                                 SplitRng &rng) {
  std::vector<std::string> out = tokens;
  switch (rng.next_below(3)) {
  case 0:
    if (out.size() > 1) {
      std::size_t i = rng.next_below(out.size());
      std::size_t j = rng.next_below(out.size());
      std::swap(out[i], out[j]);
    }
    break;
  case 1:
    if (out.size() > 1)
      out.erase(out.begin() + static_cast<std::ptrdiff_t>(
                                  rng.next_below(out.size())));
    break;
  default: {
    std::size_t i = rng.next_below(out.size());
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(i), out[i]);
    break;
  }
  }
  return out;
}

// ---------------------------------------------------------------- 8
Problems check_hybrid_beats_pure() {
  Problems out;

  // hybrid arm: gated seed, reviewed, trained, sampled with fresh
  // meanings
  PipelineConfig cfg;
  cfg.lexicon_path = data_path("figure1.lex");
  cfg.template_paths = {data_path("templates.tpl")};
  cfg.scale_limit = 200;
  cfg.model.embed_dim = 16;
  cfg.model.hidden_dim = 32;
  cfg.model.dec_hidden_dim = 32;
  cfg.learning_rate = 1.0;
  cfg.epochs = 500;
  cfg.batch_size = 8;
  cfg.strategy = GenStrategy::Kind::sample;
  cfg.temperature = 1.0;
  cfg.fresh_mr_count = 60;
  cfg.max_outer_iterations = 0;
  cfg.rng_seed = 20250819;
  fs::path dir = scratch_dir("hybrid");
  cfg.out_dir = dir.string();
  AcceptAllSource accept;
  CorpusArtifact art = run_pipeline(cfg, accept);
  LoadedResources res = load_resources(cfg);

  TokenCorpus hybrid = token_corpus(art.generated);
  double d2_hybrid = distinct_n(hybrid, 2);
  double val_hybrid = validity_rate(hybrid, res.templates, res.lex);

  // template-only arm: a plain expansion sample of the same size
  SeedCorpus tmpl =
      build_seed_corpus(res.templates, res.lex, CyclePolicy::full_product(),
                        hybrid.size(), 4242);
  double d2_tmpl = distinct_n(token_corpus(tmpl), 2);

  // neural-only arm: same architecture and budget, but trained on
  // unreviewed raw expansions with one random edit injected into 30%
  // of the sentences, then sampled the same way
  SeedCorpus raw = build_seed_corpus(res.templates, res.lex,
                                     CyclePolicy::full_product(), 200, 777);
  SplitRng noise(555);
  SeedCorpus noisy = raw;
  for (std::size_t i = 0; i < noisy.items.size(); ++i) {
    SplitRng item_rng = noise.split("noise", i);
    if (item_rng.next_double() >= 0.3) continue;
    CorpusItem &item = noisy.items[i];
    std::vector<std::string> bent = corrupt(item.sentence.tokens, item_rng);
    item.sentence = make_sentence(bent, noisy.language, item.sentence.mr);
    item.id = item_id_for(bent);
  }
  std::vector<TrainingPair> noisy_pairs = export_training_pairs(noisy);
  std::vector<std::vector<std::string>> ins, outs;
  for (const TrainingPair &p : noisy_pairs) {
    ins.push_back(p.first);
    outs.push_back(p.second);
  }
  NlgModel m0 = init_model(Vocab::build(ins), Vocab::build(outs), cfg.model,
                           LogitsFrom::context, 20250819);
  TrainHyper th;
  th.learning_rate = 1.0;
  th.epochs = 500;
  th.batch_size = 8;
  th.rng_seed = 20250819;
  TrainResult tr = train(m0, noisy_pairs, th);
  SeedCorpus neural_gen =
      generate_corpus(tr.model, noisy, res, cfg, 1.0, 31, 37);
  double val_neural =
      validity_rate(token_corpus(neural_gen), res.templates, res.lex);

  if (!(d2_hybrid > d2_tmpl))
    out.push_back("distinct-2 " + fmt(d2_hybrid) +
                  " (hybrid) is not above " + fmt(d2_tmpl) +
                  " (template-only at size " + std::to_string(hybrid.size()) +
                  ")");
  if (!(val_hybrid > val_neural))
    out.push_back("validity " + fmt(val_hybrid) + " (hybrid) is not above " +
                  fmt(val_neural) + " (neural-only on noisy data)");
  fs::remove_all(dir);
  return out;
}

// ---------------------------------------------------------------- 9
Problems check_determinism() {
  Problems out;
  auto run_once = [&](const fs::path &dir) {
    PipelineConfig cfg;
    cfg.lexicon_path = data_path("figure1.lex");
    cfg.template_paths = {data_path("templates.tpl")};
    cfg.scale_limit = 60;
    cfg.model.embed_dim = 8;
    cfg.model.hidden_dim = 16;
    cfg.model.dec_hidden_dim = 16;
    cfg.learning_rate = 0.5;
    cfg.epochs = 60;
    cfg.batch_size = 8;
    cfg.strategy = GenStrategy::Kind::sample;
    cfg.temperature = 1.0;
    cfg.fresh_mr_count = 10;
    cfg.max_outer_iterations = 0;
    cfg.rng_seed = 99;
    cfg.out_dir = dir.string();
    // scripted review: reject two, accept three, leave the rest
    ScriptedSource script({{ReviewAnswer::reject, "too plain"},
                           {ReviewAnswer::reject, ""},
                           {ReviewAnswer::accept, ""},
                           {ReviewAnswer::accept, "keep"},
                           {ReviewAnswer::accept, ""}});
    run_pipeline(cfg, script);
  };
  fs::path dir_a = scratch_dir("det_a");
  fs::path dir_b = scratch_dir("det_b");
  run_once(dir_a);
  run_once(dir_b);

  std::set<std::string> names_a, names_b;
  for (const auto &e : fs::directory_iterator(dir_a))
    names_a.insert(e.path().filename().string());
  for (const auto &e : fs::directory_iterator(dir_b))
    names_b.insert(e.path().filename().string());
  if (names_a != names_b)
    out.push_back("the two runs wrote different file sets");
  else
    for (const std::string &name : names_a)
      if (read_file(dir_a / name) != read_file(dir_b / name))
        out.push_back(name + " differs between identically seeded runs");
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  return out;
}

// ---------------------------------------------------------------- 10
Problems check_round_trips() {
  Problems out;
  fs::path dir = scratch_dir("roundtrip");
  fs::create_directories(dir);

  {
    Lexicon lex = load_lexicon_file(data_path("full.lex"));
    std::string first = serialize_lexicon(lex);
    save_lexicon_file(lex, (dir / "rt.lex").string());
    if (read_file(dir / "rt.lex") != first)
      out.push_back("lexicon save does not equal its serialization");
    Lexicon back = load_lexicon_file((dir / "rt.lex").string());
    if (serialize_lexicon(back) != first)
      out.push_back("lexicon file changed across save/load/save");
  }
  {
    std::vector<Template> ts = load_templates_file(data_path("templates.tpl"));
    std::string first = serialize_templates(ts);
    save_templates_file(ts, (dir / "rt.tpl").string());
    std::vector<Template> back =
        load_templates_file((dir / "rt.tpl").string());
    if (serialize_templates(back) != first)
      out.push_back("template file changed across save/load/save");
  }
  {
    Lexicon lex = load_lexicon_file(data_path("figure1.lex"));
    std::vector<Template> ts = load_templates_file(data_path("templates.tpl"));
    SeedCorpus corpus =
        build_seed_corpus(ts, lex, CyclePolicy::full_product(), 25, 12);
    save_corpus_file(corpus, (dir / "rt.corpus").string());
    std::string first = read_file(dir / "rt.corpus");
    SeedCorpus back = load_corpus_file((dir / "rt.corpus").string());
    save_corpus_file(back, (dir / "rt.corpus").string());
    if (read_file(dir / "rt.corpus") != first)
      out.push_back("corpus file changed across save/load/save");
  }
  {
    NlgModel m = toy_model(LogitsFrom::state_context, 31, Hyper{4, 5, 6});
    save_model_file(m, (dir / "rt.bin").string());
    std::string first = read_file(dir / "rt.bin");
    NlgModel back = load_model_file((dir / "rt.bin").string());
    save_model_file(back, (dir / "rt.bin").string());
    if (read_file(dir / "rt.bin") != first)
      out.push_back("model file changed across save/load/save");
  }
  fs::remove_all(dir);
  return out;
}

struct Criterion {
  const char *name;
  double budget_seconds;
  std::function<Problems()> check;
};

} // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"lexicon-category-counts", 1.0, check_lexicon_counts},
      {"example-gloss-fixtures", 1.0, check_example_glosses},
      {"expansion-count-oracle", 5.0, check_expansion_oracle},
      {"lstm-scalar-oracle", 1.0, check_lstm_scalar},
      {"gradient-finite-difference-check", 30.0, check_gradients},
      {"distribution-normalization", 10.0, check_normalization},
      {"overfit-memorization", 300.0, check_overfit},
      {"hybrid-beats-pure-baselines", 600.0, check_hybrid_beats_pure},
      {"run-determinism", 600.0, check_determinism},
      {"file-format-round-trips", 5.0, check_round_trips},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion &c = criteria[i];
    auto t0 = std::chrono::steady_clock::now();
    Problems problems;
    try {
      problems = c.check();
    } catch (const std::exception &e) {
      problems.push_back(std::string("exception: ") + e.what());
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
    if (dt > c.budget_seconds)
      problems.push_back("took " + fmt(dt) + "s, budget " +
                         fmt(c.budget_seconds) + "s");
    if (problems.empty()) {
      std::printf("PASS %2zu %s (%.2fs)\n", i + 1, c.name, dt);
    } else {
      ++failures;
      std::printf("FAIL %2zu %s (%.2fs)\n", i + 1, c.name, dt);
      for (const std::string &p : problems)
        std::printf("        - %s\n", p.c_str());
    }
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all 10 criteria passed\n");
    return 0;
  }
  std::printf("%d of 10 criteria failed\n", failures);
  return 1;
}
