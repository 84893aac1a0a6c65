#include "corpusgen/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "corpusgen/errors.hpp"
#include "corpusgen/rng.hpp"

namespace fs = std::filesystem;

namespace corpusgen {

namespace {

std::string trim(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string to_hex(std::uint64_t v) {
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string join(const std::vector<std::string> &parts, const std::string &sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

double parse_double_value(const std::string &key, const std::string &value,
                          int line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size())
      throw ParseError("trailing garbage in value for " + key + ": " + value,
                       line);
    return v;
  } catch (const std::invalid_argument &) {
    throw ParseError("bad number for " + key + ": " + value, line);
  } catch (const std::out_of_range &) {
    throw ParseError("number out of range for " + key + ": " + value, line);
  }
}

std::uint64_t parse_u64_value(const std::string &key, const std::string &value,
                              int line) {
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size())
      throw ParseError("trailing garbage in value for " + key + ": " + value,
                       line);
    return v;
  } catch (const std::invalid_argument &) {
    throw ParseError("bad integer for " + key + ": " + value, line);
  } catch (const std::out_of_range &) {
    throw ParseError("integer out of range for " + key + ": " + value, line);
  }
}

int parse_int_value(const std::string &key, const std::string &value,
                    int line) {
  try {
    std::size_t pos = 0;
    long v = std::stol(value, &pos);
    if (pos != value.size())
      throw ParseError("trailing garbage in value for " + key + ": " + value,
                       line);
    if (v < std::numeric_limits<int>::min() ||
        v > std::numeric_limits<int>::max())
      throw ParseError("integer out of range for " + key + ": " + value, line);
    return static_cast<int>(v);
  } catch (const std::invalid_argument &) {
    throw ParseError("bad integer for " + key + ": " + value, line);
  } catch (const std::out_of_range &) {
    throw ParseError("integer out of range for " + key + ": " + value, line);
  }
}

const char *strategy_name(GenStrategy::Kind k) {
  switch (k) {
  case GenStrategy::Kind::greedy: return "greedy";
  case GenStrategy::Kind::sample: return "sample";
  case GenStrategy::Kind::beam: return "beam";
  }
  return "sample";
}

void write_text_file(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("failed writing file: " + path);
}

// Exclusive ownership of the run directory for the process lifetime of
// one run. A crashed run leaves the lock behind on purpose: the
// directory state is then suspect and needs a human look.
class DirLock {
public:
  explicit DirLock(const std::string &path) : path_(path) {
    int fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
      throw IoError("output directory is locked by " + path +
                    " (remove it if no run is active)");
    std::string body = std::to_string(::getpid()) + "\n";
    if (::write(fd, body.data(), body.size()) < 0) {
      // lock exists either way; the pid note is best effort
    }
    ::close(fd);
  }
  ~DirLock() { ::unlink(path_.c_str()); }

  DirLock(const DirLock &) = delete;
  DirLock &operator=(const DirLock &) = delete;

private:
  std::string path_;
};

std::string mr_view_string(const MeaningRepresentation &mr) {
  std::vector<std::string> parts;
  parts.push_back("template=" + mr.template_id);
  for (const std::string &t : mr_tokens(mr)) parts.push_back(t);
  return join(parts, " ");
}

std::string encoder_key(const std::vector<std::string> &tokens) {
  return join(tokens, "\x1f");
}

} // namespace

void apply_config_entry(PipelineConfig &cfg, const std::string &key,
                        const std::string &value, int line) {
  if (key == "lexicon") {
    cfg.lexicon_path = value;
  } else if (key == "templates") {
    cfg.template_paths.clear();
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = trim(part);
      if (!part.empty()) cfg.template_paths.push_back(part);
    }
    if (cfg.template_paths.empty())
      throw ParseError("templates needs at least one path", line);
  } else if (key == "rules") {
    cfg.rules_path = value;
  } else if (key == "cycle_policy") {
    if (value == "full_product")
      cfg.cycle_policy.kind = CyclePolicy::Kind::full_product;
    else if (value == "round_robin")
      cfg.cycle_policy.kind = CyclePolicy::Kind::round_robin;
    else
      throw ParseError("cycle_policy must be full_product or round_robin, got " +
                           value,
                       line);
  } else if (key == "cycle_count") {
    cfg.cycle_policy.count = parse_u64_value(key, value, line);
  } else if (key == "scale_limit") {
    cfg.scale_limit = static_cast<std::size_t>(parse_u64_value(key, value, line));
  } else if (key == "min_seed_distinct_2") {
    cfg.min_seed_distinct_2 = parse_double_value(key, value, line);
  } else if (key == "min_seed_coverage") {
    cfg.min_seed_coverage = parse_double_value(key, value, line);
  } else if (key == "seed_gate_retries") {
    cfg.seed_gate_retries = parse_int_value(key, value, line);
  } else if (key == "augment_attempts") {
    cfg.augment_attempts = parse_int_value(key, value, line);
  } else if (key == "embed_dim") {
    cfg.model.embed_dim = parse_int_value(key, value, line);
  } else if (key == "hidden_dim") {
    cfg.model.hidden_dim = parse_int_value(key, value, line);
  } else if (key == "dec_hidden_dim") {
    cfg.model.dec_hidden_dim = parse_int_value(key, value, line);
  } else if (key == "logits_from") {
    if (value == "context")
      cfg.logits_from = LogitsFrom::context;
    else if (value == "state_context")
      cfg.logits_from = LogitsFrom::state_context;
    else
      throw ParseError("logits_from must be context or state_context, got " +
                           value,
                       line);
  } else if (key == "learning_rate") {
    cfg.learning_rate = parse_double_value(key, value, line);
  } else if (key == "epochs") {
    cfg.epochs = parse_int_value(key, value, line);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_int_value(key, value, line);
  } else if (key == "clip_norm") {
    cfg.clip_norm = parse_double_value(key, value, line);
  } else if (key == "strategy") {
    if (value == "greedy")
      cfg.strategy = GenStrategy::Kind::greedy;
    else if (value == "sample")
      cfg.strategy = GenStrategy::Kind::sample;
    else if (value == "beam")
      cfg.strategy = GenStrategy::Kind::beam;
    else
      throw ParseError("strategy must be greedy, sample or beam, got " + value,
                       line);
  } else if (key == "temperature") {
    cfg.temperature = parse_double_value(key, value, line);
  } else if (key == "beam_width") {
    cfg.beam_width = parse_int_value(key, value, line);
  } else if (key == "max_len") {
    cfg.max_len = parse_int_value(key, value, line);
  } else if (key == "fresh_mr_count") {
    cfg.fresh_mr_count = static_cast<std::size_t>(parse_u64_value(key, value, line));
  } else if (key == "min_novelty") {
    cfg.min_novelty = parse_double_value(key, value, line);
  } else if (key == "min_validity") {
    cfg.min_validity = parse_double_value(key, value, line);
  } else if (key == "min_distinct_2") {
    cfg.min_distinct_2 = parse_double_value(key, value, line);
  } else if (key == "max_outer_iterations") {
    cfg.max_outer_iterations = parse_int_value(key, value, line);
  } else if (key == "temperature_delta") {
    cfg.temperature_delta = parse_double_value(key, value, line);
  } else if (key == "epochs_delta") {
    cfg.epochs_delta = parse_int_value(key, value, line);
  } else if (key == "rng_seed") {
    cfg.rng_seed = parse_u64_value(key, value, line);
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else {
    throw ParseError("unknown config key: " + key, line);
  }
}

PipelineConfig parse_config(std::istream &in) {
  PipelineConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line has no '='", line_no);
    std::string key = trim(line.substr(0, eq));
    std::string value = line.substr(eq + 1);
    if (key.empty()) throw ParseError("config line has empty key", line_no);
    apply_config_entry(cfg, key, value, line_no);
  }
  return cfg;
}

PipelineConfig load_config_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  return parse_config(in);
}

std::string serialize_config(const PipelineConfig &cfg) {
  std::ostringstream out;
  out << "lexicon=" << cfg.lexicon_path << "\n";
  out << "templates=" << join(cfg.template_paths, ",") << "\n";
  out << "rules=" << cfg.rules_path << "\n";
  out << "cycle_policy="
      << (cfg.cycle_policy.kind == CyclePolicy::Kind::full_product
              ? "full_product"
              : "round_robin")
      << "\n";
  out << "cycle_count=" << cfg.cycle_policy.count << "\n";
  out << "scale_limit=" << cfg.scale_limit << "\n";
  out << "min_seed_distinct_2=" << fmt_double(cfg.min_seed_distinct_2) << "\n";
  out << "min_seed_coverage=" << fmt_double(cfg.min_seed_coverage) << "\n";
  out << "seed_gate_retries=" << cfg.seed_gate_retries << "\n";
  out << "augment_attempts=" << cfg.augment_attempts << "\n";
  out << "embed_dim=" << cfg.model.embed_dim << "\n";
  out << "hidden_dim=" << cfg.model.hidden_dim << "\n";
  out << "dec_hidden_dim=" << cfg.model.dec_hidden_dim << "\n";
  out << "logits_from="
      << (cfg.logits_from == LogitsFrom::context ? "context" : "state_context")
      << "\n";
  out << "learning_rate=" << fmt_double(cfg.learning_rate) << "\n";
  out << "epochs=" << cfg.epochs << "\n";
  out << "batch_size=" << cfg.batch_size << "\n";
  out << "clip_norm=" << fmt_double(cfg.clip_norm) << "\n";
  out << "strategy=" << strategy_name(cfg.strategy) << "\n";
  out << "temperature=" << fmt_double(cfg.temperature) << "\n";
  out << "beam_width=" << cfg.beam_width << "\n";
  out << "max_len=" << cfg.max_len << "\n";
  out << "fresh_mr_count=" << cfg.fresh_mr_count << "\n";
  out << "min_novelty=" << fmt_double(cfg.min_novelty) << "\n";
  out << "min_validity=" << fmt_double(cfg.min_validity) << "\n";
  out << "min_distinct_2=" << fmt_double(cfg.min_distinct_2) << "\n";
  out << "max_outer_iterations=" << cfg.max_outer_iterations << "\n";
  out << "temperature_delta=" << fmt_double(cfg.temperature_delta) << "\n";
  out << "epochs_delta=" << cfg.epochs_delta << "\n";
  out << "rng_seed=" << cfg.rng_seed << "\n";
  return out.str();
}

std::string config_digest(const PipelineConfig &cfg) {
  return to_hex(fnv1a64(serialize_config(cfg)));
}

namespace {

void check_ratio(double v, const char *name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw ValidationError(std::string("config: ") + name +
                          " must be in [0,1]");
}

} // namespace

void validate_config(const PipelineConfig &cfg) {
  if (cfg.lexicon_path.empty())
    throw ValidationError("config: lexicon path is required");
  if (cfg.template_paths.empty())
    throw ValidationError("config: at least one template path is required");
  if (cfg.scale_limit < 1)
    throw ValidationError("config: scale_limit must be at least 1");
  if (cfg.cycle_policy.kind == CyclePolicy::Kind::round_robin &&
      cfg.cycle_policy.count < 1)
    throw ValidationError("config: round_robin needs cycle_count >= 1");
  check_ratio(cfg.min_seed_distinct_2, "min_seed_distinct_2");
  check_ratio(cfg.min_seed_coverage, "min_seed_coverage");
  check_ratio(cfg.min_novelty, "min_novelty");
  check_ratio(cfg.min_validity, "min_validity");
  check_ratio(cfg.min_distinct_2, "min_distinct_2");
  if (cfg.seed_gate_retries < 0)
    throw ValidationError("config: seed_gate_retries must be >= 0");
  if (cfg.augment_attempts < 0)
    throw ValidationError("config: augment_attempts must be >= 0");
  if (cfg.model.embed_dim < 1 || cfg.model.hidden_dim < 1 ||
      cfg.model.dec_hidden_dim < 1)
    throw ValidationError("config: model dimensions must be >= 1");
  if (cfg.learning_rate <= 0)
    throw ValidationError("config: learning_rate must be > 0");
  if (cfg.epochs < 0) throw ValidationError("config: epochs must be >= 0");
  if (cfg.batch_size < 1)
    throw ValidationError("config: batch_size must be >= 1");
  if (cfg.clip_norm <= 0)
    throw ValidationError("config: clip_norm must be > 0");
  if (cfg.temperature <= 0)
    throw ValidationError("config: temperature must be > 0");
  if (cfg.beam_width < 1)
    throw ValidationError("config: beam_width must be >= 1");
  if (cfg.max_len < 1) throw ValidationError("config: max_len must be >= 1");
  if (cfg.max_outer_iterations < 0)
    throw ValidationError("config: max_outer_iterations must be >= 0");
  if (cfg.temperature_delta < 0)
    throw ValidationError("config: temperature_delta must be >= 0");
  if (cfg.epochs_delta < 0)
    throw ValidationError("config: epochs_delta must be >= 0");
}

LoadedResources load_resources(const PipelineConfig &cfg) {
  LoadedResources res;
  res.lex = load_lexicon_file(cfg.lexicon_path);
  ValidationReport issues = validate_lexicon(res.lex);
  for (const ValidationIssue &issue : issues) {
    if (issue.severity == Severity::error)
      throw ValidationError("lexicon " + cfg.lexicon_path + ": " +
                            issue.message + " at " + issue.location);
  }
  std::unordered_set<std::string> ids;
  for (const std::string &path : cfg.template_paths) {
    std::vector<Template> batch = load_templates_file(path);
    for (Template &t : batch) {
      if (!ids.insert(t.id).second)
        throw ValidationError("duplicate template id across files: " + t.id);
      res.templates.push_back(std::move(t));
    }
  }
  if (!cfg.rules_path.empty()) {
    res.rules = load_rules_file(cfg.rules_path);
    res.has_rules = true;
  }
  return res;
}

ReviewAnswer AcceptAllSource::decide(const ReviewItemView &, std::string &) {
  return ReviewAnswer::accept;
}

ScriptedSource::ScriptedSource(std::vector<Line> lines)
    : lines_(std::move(lines)) {}

ReviewAnswer ScriptedSource::decide(const ReviewItemView &, std::string &note) {
  if (next_ >= lines_.size()) return ReviewAnswer::quit;
  const Line &l = lines_[next_++];
  note = l.note;
  return l.answer;
}

namespace {

std::optional<ReviewAnswer> parse_answer(const std::string &word) {
  if (word == "a" || word == "accept") return ReviewAnswer::accept;
  if (word == "r" || word == "reject") return ReviewAnswer::reject;
  if (word == "s" || word == "skip") return ReviewAnswer::skip;
  if (word == "q" || word == "quit") return ReviewAnswer::quit;
  return std::nullopt;
}

} // namespace

ScriptedSource load_script_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open review script: " + path);
  std::vector<ScriptedSource::Line> lines;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    ScriptedSource::Line entry;
    std::string head = line;
    std::size_t tab = line.find('\t');
    if (tab != std::string::npos) {
      head = line.substr(0, tab);
      entry.note = line.substr(tab + 1);
    }
    std::optional<ReviewAnswer> a = parse_answer(trim(head));
    if (!a)
      throw ParseError("bad review decision: " + head, line_no);
    entry.answer = *a;
    lines.push_back(std::move(entry));
  }
  return ScriptedSource(std::move(lines));
}

InteractiveSource::InteractiveSource(std::istream &in, std::ostream &out)
    : in_(&in), out_(&out) {}

ReviewAnswer InteractiveSource::decide(const ReviewItemView &item,
                                       std::string &note) {
  *out_ << "\n[" << item.index << "/" << item.total << "] " << item.surface
        << "\n";
  if (!item.gloss.empty()) *out_ << "  gloss: " << item.gloss << "\n";
  if (!item.mr.empty()) *out_ << "  mr:    " << item.mr << "\n";
  std::string line;
  for (;;) {
    *out_ << "  (a)ccept (r)eject (s)kip (q)uit> " << std::flush;
    if (!std::getline(*in_, line)) return ReviewAnswer::quit;
    std::string stripped = trim(line);
    std::string word = stripped;
    std::string rest;
    std::size_t sp = stripped.find(' ');
    if (sp != std::string::npos) {
      word = stripped.substr(0, sp);
      rest = trim(stripped.substr(sp + 1));
    }
    std::optional<ReviewAnswer> a = parse_answer(word);
    if (a) {
      note = rest;
      return *a;
    }
    *out_ << "  unrecognized: " << stripped << "\n";
  }
}

ReviewLedger review_session(const SeedCorpus &corpus, const Lexicon &lex,
                            ReviewDecisionSource &source,
                            ReviewLedger existing,
                            const std::string &append_path) {
  if (corpus.items.empty())
    throw ValidationError("nothing to review: corpus is empty");
  SeedCorpus replayed = apply_review(corpus, existing);
  std::vector<const CorpusItem *> pending;
  for (const CorpusItem &item : replayed.items) {
    if (item.review == ReviewStatus::unreviewed) pending.push_back(&item);
  }
  ReviewLedger ledger = std::move(existing);
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const CorpusItem &item = *pending[i];
    ReviewItemView view;
    view.id = item.id;
    view.surface = item.sentence.surface;
    view.gloss = render_gloss(item.sentence, lex);
    if (item.sentence.mr) view.mr = mr_view_string(*item.sentence.mr);
    view.index = i + 1;
    view.total = pending.size();
    std::string note;
    ReviewAnswer a = source.decide(view, note);
    if (a == ReviewAnswer::quit) break;
    if (a == ReviewAnswer::skip) continue;
    LedgerEntry entry;
    entry.item_id = item.id;
    entry.decision = a == ReviewAnswer::accept ? ReviewDecision::accept
                                               : ReviewDecision::reject;
    entry.seq = ledger.next_seq();
    entry.note = note;
    ledger.entries.push_back(entry);
    if (!append_path.empty()) append_ledger_file(entry, append_path);
  }
  return ledger;
}

SeedCorpus build_gated_seed(const PipelineConfig &cfg,
                            const LoadedResources &res, std::uint64_t rng_seed,
                            std::vector<std::string> *log) {
  std::size_t scale = cfg.scale_limit;
  for (int attempt = 0;; ++attempt) {
    SeedCorpus seed = build_seed_corpus(
        res.templates, res.lex, cfg.cycle_policy, scale, rng_seed,
        res.has_rules ? &res.rules : nullptr, cfg.augment_attempts);
    TokenCorpus tokens = token_corpus(seed);
    double d2 = distinct_n(tokens, 2);
    double cov = vocab_coverage(tokens, res.lex);
    bool coverage_ok = cov >= cfg.min_seed_coverage;
    bool diversity_ok = d2 >= cfg.min_seed_distinct_2;
    if (log)
      log->push_back("attempt " + std::to_string(attempt) + " scale " +
                     std::to_string(scale) + " size " +
                     std::to_string(seed.items.size()) + " distinct_2 " +
                     fmt_double(d2) + " coverage " + fmt_double(cov) +
                     (coverage_ok && diversity_ok ? " pass" : " fail"));
    if (coverage_ok && diversity_ok) return seed;
    if (attempt >= cfg.seed_gate_retries)
      throw NotConverged("seed corpus failed the scale gate after " +
                         std::to_string(attempt + 1) + " attempts");
    // Growing recovers missing coverage; once coverage holds, shrinking
    // trims the bigram repetition that drags distinct-2 down.
    if (!coverage_ok)
      scale = scale + (scale + 1) / 2;
    else
      scale = std::max<std::size_t>(1, scale / 2);
  }
}

namespace {

struct PendingMr {
  std::vector<std::string> enc;
  MeaningRepresentation mr;
};

struct RequiredSlotRef {
  const Slot *slot;
  const std::vector<LexEntry> *entries;
};

std::vector<RequiredSlotRef> required_slots(const Template &t,
                                            const Lexicon &lex) {
  std::vector<RequiredSlotRef> out;
  for (const Slot &s : t.slots) {
    if (s.optional) continue;
    out.push_back({&s, &lex.category_words(s.category)});
  }
  return out;
}

// Bindings for the idx-th point of the template's required-slot
// product, rightmost slot fastest, matching expansion order.
MeaningRepresentation mr_from_index(const Template &t,
                                    const std::vector<RequiredSlotRef> &req,
                                    std::uint64_t idx) {
  std::vector<std::size_t> pick(req.size(), 0);
  for (std::size_t j = req.size(); j-- > 0;) {
    std::uint64_t n = req[j].entries->size();
    pick[j] = static_cast<std::size_t>(idx % n);
    idx /= n;
  }
  MeaningRepresentation mr;
  mr.template_id = t.id;
  for (std::size_t j = 0; j < req.size(); ++j)
    mr.bindings.emplace_back(req[j].slot->name,
                             (*req[j].entries)[pick[j]].surface);
  return mr;
}

} // namespace

SeedCorpus generate_corpus(const NlgModel &m, const SeedCorpus &source_corpus,
                           const LoadedResources &res,
                           const PipelineConfig &cfg, double temperature,
                           std::uint64_t generate_seed,
                           std::uint64_t fresh_seed) {
  std::unordered_set<std::string> seed_keys;
  std::unordered_set<std::string> queued;
  std::vector<PendingMr> pending;
  for (const CorpusItem &item : source_corpus.items) {
    if (!item.sentence.mr) continue;
    std::vector<std::string> enc = mr_tokens(*item.sentence.mr);
    std::string key = encoder_key(enc);
    seed_keys.insert(key);
    if (item.review == ReviewStatus::rejected) continue;
    if (enc.empty()) continue;
    if (!queued.insert(key).second) continue;
    pending.push_back({std::move(enc), *item.sentence.mr});
  }

  if (cfg.fresh_mr_count > 0) {
    std::vector<std::vector<RequiredSlotRef>> req;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
    for (const Template &t : res.templates) {
      req.push_back(required_slots(t, res.lex));
      std::uint64_t c = expansion_count(t, res.lex);
      counts.push_back(c);
      total += c;
    }
    if (total > 0) {
      SplitRng rng(fresh_seed);
      std::size_t added = 0;
      std::uint64_t attempts = 0;
      // The product may be almost exhausted by the seed; a bounded
      // number of draws keeps this total instead of looping forever.
      std::uint64_t max_attempts =
          static_cast<std::uint64_t>(cfg.fresh_mr_count) * 200 + 1000;
      while (added < cfg.fresh_mr_count && attempts < max_attempts) {
        ++attempts;
        std::uint64_t r = rng.next_below(total);
        std::size_t ti = 0;
        while (r >= counts[ti]) {
          r -= counts[ti];
          ++ti;
        }
        MeaningRepresentation mr =
            mr_from_index(res.templates[ti], req[ti], r);
        std::vector<std::string> enc = mr_tokens(mr);
        if (enc.empty()) continue;
        std::string key = encoder_key(enc);
        if (seed_keys.count(key)) continue;
        if (!queued.insert(key).second) continue;
        pending.push_back({std::move(enc), std::move(mr)});
        ++added;
      }
    }
  }

  SeedCorpus out;
  out.language = res.lex.language();
  out.provenance = to_hex(fnv1a64(
      source_corpus.provenance + "|gen|" + strategy_name(cfg.strategy) + "|" +
      fmt_double(temperature) + "|" + std::to_string(generate_seed) + "|" +
      std::to_string(fresh_seed) + "|" + std::to_string(cfg.fresh_mr_count) +
      "|" + std::to_string(cfg.max_len) + "|" +
      std::to_string(cfg.beam_width)));

  SplitRng gen_root(generate_seed);
  std::unordered_set<std::string> out_ids;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    GenStrategy strategy;
    switch (cfg.strategy) {
    case GenStrategy::Kind::greedy:
      strategy = GenStrategy::greedy();
      break;
    case GenStrategy::Kind::sample:
      strategy = GenStrategy::sample(temperature,
                                     gen_root.split("sentence", i).seed());
      break;
    case GenStrategy::Kind::beam:
      strategy = GenStrategy::beam(cfg.beam_width);
      break;
    }
    GeneratedSentence g = generate(m, pending[i].enc, strategy, cfg.max_len);
    if (g.tokens.empty()) continue;
    CorpusItem item;
    item.sentence = make_sentence(g.tokens, out.language, pending[i].mr);
    item.id = item_id_for(g.tokens);
    if (!out_ids.insert(item.id).second) continue;
    out.items.push_back(std::move(item));
  }
  return out;
}

namespace {

std::string iteration_row(const IterationRecord &rec) {
  std::ostringstream out;
  out << rec.iteration << "\t" << rec.epochs_total << "\t"
      << fmt_double(rec.temperature) << "\t" << fmt_double(rec.report.distinct_1)
      << "\t" << fmt_double(rec.report.distinct_2) << "\t"
      << fmt_double(rec.report.novelty_rate) << "\t"
      << fmt_double(rec.report.validity_rate) << "\t"
      << fmt_double(rec.report.vocab_coverage) << "\t"
      << rec.report.corpus_size << "\t" << (rec.converged ? 1 : 0) << "\n";
  return out.str();
}

const char *kIterationHeader =
    "iteration\tepochs\ttemperature\tdistinct_1\tdistinct_2\tnovelty_rate\t"
    "validity_rate\tvocab_coverage\tcorpus_size\tconverged\n";

} // namespace

CorpusArtifact run_pipeline(const PipelineConfig &cfg,
                            ReviewDecisionSource &source) {
  validate_config(cfg);
  if (cfg.out_dir.empty())
    throw ValidationError("config: out_dir is required for a pipeline run");
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + cfg.out_dir + ": " +
                  ec.message());
  auto at = [&](const std::string &name) {
    return (fs::path(cfg.out_dir) / name).string();
  };

  DirLock lock(at(".lock"));
  fs::remove(at("FAILED"), ec);

  std::vector<std::string> manifest;
  manifest.push_back("config_digest=" + config_digest(cfg));
  manifest.push_back("rng_seed=" + std::to_string(cfg.rng_seed));

  auto write_manifest = [&]() {
    std::string text = "# pipeline run\n";
    for (const std::string &line : manifest) text += line + "\n";
    text += "# config\n";
    text += serialize_config(cfg);
    write_text_file(at("run.manifest"), text);
  };

  LoadedResources res = load_resources(cfg);
  SplitRng root(cfg.rng_seed);

  // Steps 1-3: resources, seed corpus, scale gate.
  std::uint64_t seed_seed = root.split("seed-corpus").seed();
  manifest.push_back("seed_corpus_seed=" + std::to_string(seed_seed));
  std::vector<std::string> gate_log;
  SeedCorpus seed;
  try {
    seed = build_gated_seed(cfg, res, seed_seed, &gate_log);
  } catch (const NotConverged &) {
    for (std::size_t i = 0; i < gate_log.size(); ++i)
      manifest.push_back("seed_gate_" + std::to_string(i) + "=" + gate_log[i]);
    manifest.push_back("converged=0");
    write_manifest();
    write_text_file(at("FAILED"), "seed corpus failed the scale gate\n");
    throw;
  }
  for (std::size_t i = 0; i < gate_log.size(); ++i)
    manifest.push_back("seed_gate_" + std::to_string(i) + "=" + gate_log[i]);
  manifest.push_back("seed_size=" + std::to_string(seed.items.size()));

  TokenCorpus seed_tokens = token_corpus(seed);
  MetricsReport seed_report =
      corpus_report(seed_tokens, seed_tokens, res.templates, res.lex);
  save_corpus_file(seed, at("seed.corpus"));
  save_report_file(seed_report, at("seed.report"));

  // Step 4: review. An existing ledger is replayed first, so a rerun
  // or resumed run only asks about items still undecided.
  ReviewLedger existing = load_ledger_file(at("review.ledger"));
  ReviewLedger ledger =
      review_session(seed, res.lex, source, std::move(existing),
                     at("review.ledger"));
  SeedCorpus reviewed = apply_review(seed, ledger);
  save_corpus_file(reviewed, at("seed_reviewed.corpus"));
  manifest.push_back("review_entries=" + std::to_string(ledger.entries.size()));
  manifest.push_back("accepted=" +
                     std::to_string(reviewed.count(ReviewStatus::accepted)));
  manifest.push_back("rejected=" +
                     std::to_string(reviewed.count(ReviewStatus::rejected)));

  // Step 5 setup: vocabularies and the initial model.
  std::vector<TrainingPair> pairs = export_training_pairs(reviewed);
  std::vector<std::vector<std::string>> inputs, targets;
  inputs.reserve(pairs.size());
  targets.reserve(pairs.size());
  for (const TrainingPair &p : pairs) {
    inputs.push_back(p.first);
    targets.push_back(p.second);
  }
  Vocab vocab_in = Vocab::build(inputs);
  Vocab vocab_out = Vocab::build(targets);
  std::uint64_t init_seed = root.split("model-init").seed();
  manifest.push_back("model_init_seed=" + std::to_string(init_seed));
  NlgModel model =
      init_model(vocab_in, vocab_out, cfg.model, cfg.logits_from, init_seed);

  std::ofstream iter_out(at("iterations.tsv"),
                         std::ios::binary | std::ios::trunc);
  if (!iter_out) throw IoError("cannot write " + at("iterations.tsv"));
  iter_out << kIterationHeader;

  // Steps 5-7: train, generate, gate; on a failed gate retrain the
  // same model further with a hotter sampler.
  double temperature = cfg.temperature;
  int epochs_total = 0;
  std::vector<double> full_trace;
  std::vector<IterationRecord> iteration_log;
  SeedCorpus generated;
  MetricsReport report;
  bool converged = false;

  for (int iter = 0;; ++iter) {
    std::string tag = std::to_string(iter);
    int round_epochs = iter == 0 ? cfg.epochs : cfg.epochs_delta;
    TrainHyper th;
    th.learning_rate = cfg.learning_rate;
    th.epochs = round_epochs;
    th.batch_size = cfg.batch_size;
    th.clip_norm = cfg.clip_norm;
    th.rng_seed = root.split("train", static_cast<std::uint64_t>(iter)).seed();
    TrainResult tr;
    try {
      tr = train(model, pairs, th);
    } catch (const TrainingDiverged &e) {
      throw TrainingDiverged("iteration " + tag + ": " + e.what());
    }
    model = std::move(tr.model);
    epochs_total += std::max(0, round_epochs);
    full_trace.insert(full_trace.end(), tr.loss_trace.begin(),
                      tr.loss_trace.end());
    save_model_file(model, at("model_iter" + tag + ".bin"));
    save_loss_trace(tr.loss_trace, at("loss_iter" + tag + ".tsv"));

    std::uint64_t gen_seed =
        root.split("generate", static_cast<std::uint64_t>(iter)).seed();
    std::uint64_t fresh_seed =
        root.split("fresh-mr", static_cast<std::uint64_t>(iter)).seed();
    generated = generate_corpus(model, reviewed, res, cfg, temperature,
                                gen_seed, fresh_seed);
    report = corpus_report(seed_tokens, token_corpus(generated), res.templates,
                           res.lex);
    bool ok = report.novelty_rate >= cfg.min_novelty &&
              report.validity_rate >= cfg.min_validity &&
              report.distinct_2 >= cfg.min_distinct_2;

    IterationRecord rec;
    rec.iteration = iter;
    rec.epochs_total = epochs_total;
    rec.temperature = temperature;
    rec.report = report;
    rec.converged = ok;
    iteration_log.push_back(rec);

    save_corpus_file(generated, at("generated_iter" + tag + ".corpus"));
    save_report_file(report, at("report_iter" + tag + ".report"));
    iter_out << iteration_row(rec) << std::flush;
    manifest.push_back("iteration_" + tag + ".train_seed=" +
                       std::to_string(th.rng_seed));
    manifest.push_back("iteration_" + tag + ".generate_seed=" +
                       std::to_string(gen_seed));
    manifest.push_back("iteration_" + tag + ".fresh_seed=" +
                       std::to_string(fresh_seed));
    manifest.push_back("iteration_" + tag + ".temperature=" +
                       fmt_double(temperature));
    manifest.push_back("iteration_" + tag + ".epochs_total=" +
                       std::to_string(epochs_total));

    if (ok) {
      converged = true;
      break;
    }
    if (iter >= cfg.max_outer_iterations) break;
    temperature += cfg.temperature_delta;
  }
  iter_out.close();

  save_model_file(model, at("model.bin"));
  save_loss_trace(full_trace, at("loss.tsv"));
  save_corpus_file(generated, at("generated.corpus"));
  save_report_file(report, at("generated.report"));
  manifest.push_back("iterations=" + std::to_string(iteration_log.size()));
  manifest.push_back(std::string("converged=") + (converged ? "1" : "0"));
  write_manifest();

  if (!converged) {
    write_text_file(at("FAILED"),
                    "convergence gate still failing after " +
                        std::to_string(iteration_log.size()) +
                        " generation rounds\n");
    throw NotConverged("pipeline missed its thresholds after " +
                       std::to_string(iteration_log.size()) +
                       " generation rounds");
  }

  CorpusArtifact artifact;
  artifact.seed = std::move(reviewed);
  artifact.model_path = at("model.bin");
  artifact.generated = std::move(generated);
  artifact.report = report;
  artifact.iteration_log = std::move(iteration_log);
  return artifact;
}

CorpusDiff diff_corpora(const TokenCorpus &a, const TokenCorpus &b) {
  std::set<std::vector<std::string>> sa(a.begin(), a.end());
  std::set<std::vector<std::string>> sb(b.begin(), b.end());
  CorpusDiff d;
  for (const auto &t : sa) {
    if (sb.count(t))
      d.common.push_back(t);
    else
      d.only_in_a.push_back(t);
  }
  for (const auto &t : sb) {
    if (!sa.count(t)) d.only_in_b.push_back(t);
  }
  return d;
}

std::string format_diff(const CorpusDiff &diff, const std::string &lang,
                        std::size_t max_listing) {
  std::ostringstream out;
  out << "only_in_a=" << diff.only_in_a.size() << "\n";
  out << "only_in_b=" << diff.only_in_b.size() << "\n";
  out << "common=" << diff.common.size() << "\n";
  auto listing = [&](const char *title, const TokenCorpus &c) {
    if (c.empty()) return;
    out << "# " << title;
    if (c.size() > max_listing) out << " (first " << max_listing << ")";
    out << "\n";
    std::size_t shown = 0;
    for (const auto &tokens : c) {
      if (shown++ >= max_listing) break;
      out << join_tokens(tokens, lang) << "\n";
    }
  };
  listing("only in a", diff.only_in_a);
  listing("only in b", diff.only_in_b);
  listing("common", diff.common);
  return out.str();
}

} // namespace corpusgen
