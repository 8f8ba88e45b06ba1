#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xmt/attack.h"
#include "xmt/corpus.h"
#include "xmt/disentangle.h"
#include "xmt/explain.h"
#include "xmt/heatmap.h"
#include "xmt/inverse.h"
#include "xmt/json_io.h"
#include "xmt/metrics.h"
#include "xmt/ranking.h"
#include "xmt/rng.h"
#include "xmt/tokenize.h"
#include "xmt/types.h"
#include "xmt/version.h"
#include "xmt/xeval.h"

namespace {

using xmt::ojson;

// ---------------------------------------------------------------------------
// Small parsing/formatting utilities.

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

long long parse_ll(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || errno != 0 || end != s.c_str() + s.size()) {
    throw xmt::UsageError(what + ": '" + s + "' is not an integer");
  }
  return v;
}

double parse_d(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || errno != 0 || end != s.c_str() + s.size()) {
    throw xmt::UsageError(what + ": '" + s + "' is not a number");
  }
  return v;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const std::string& item : split(s, ',')) {
    std::string t = trim(item);
    if (t.empty()) continue;
    out.push_back(parse_d(t, what));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const std::string& item : split(s, ',')) {
    std::string t = trim(item);
    if (t.empty()) continue;
    out.push_back(static_cast<int>(parse_ll(t, what)));
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw xmt::DataError("cannot write " + path);
  f << content;
  f.flush();
  if (!f.good()) throw xmt::DataError("write failed: " + path);
}

// Relative paths that do not exist fall back to $XMT_DATA_DIR.
std::string resolve_data_path(const std::string& p) {
  namespace fs = std::filesystem;
  if (p.empty() || fs::exists(p) || fs::path(p).is_absolute()) return p;
  if (const char* dir = std::getenv("XMT_DATA_DIR")) {
    fs::path joined = fs::path(dir) / p;
    if (fs::exists(joined)) return joined.string();
  }
  return p;
}

// ---------------------------------------------------------------------------
// Option bookkeeping: a value plus its CLI11 handle so presence is known.

template <typename T>
struct Opt {
  T value{};
  CLI::Option* opt = nullptr;
  bool given() const { return opt != nullptr && opt->count() > 0; }
};

template <typename T>
void add_opt(CLI::App* sub, Opt<T>& o, const std::string& name, const std::string& help) {
  o.opt = sub->add_option(name, o.value, help);
}

void add_flag(CLI::App* sub, Opt<bool>& o, const std::string& name, const std::string& help) {
  o.opt = sub->add_flag(name, o.value, help);
}

// ---------------------------------------------------------------------------
// Flag > config-file key > default resolution. The allowed config keys are
// exactly the subcommand's long option names; anything else in the file is
// rejected up front. Every resolved value is recorded for the report echo.

template <typename T>
T cfg_value(const ojson& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw xmt::UsageError("config key '" + key + "' has the wrong type");
  }
}

class Resolver {
 public:
  Resolver(const CLI::App& cmd, const Opt<std::string>& config_opt) {
    if (config_opt.given()) {
      std::ifstream f(config_opt.value);
      if (!f) throw xmt::UsageError("cannot read config file " + config_opt.value);
      std::ostringstream ss;
      ss << f.rdbuf();
      ojson parsed = ojson::parse(ss.str(), nullptr, false);
      if (parsed.is_discarded()) {
        throw xmt::UsageError("config file " + config_opt.value + " is not valid JSON");
      }
      if (!parsed.is_object()) {
        throw xmt::UsageError("config file " + config_opt.value + " must hold a JSON object");
      }
      cfg_ = std::move(parsed);
    }
    std::set<std::string> allowed;
    for (const CLI::Option* o : cmd.get_options()) {
      for (const std::string& n : o->get_lnames()) allowed.insert(n);
    }
    allowed.erase("config");
    allowed.erase("help");
    for (auto it = cfg_.begin(); it != cfg_.end(); ++it) {
      if (!allowed.count(it.key())) {
        throw xmt::UsageError("unknown config key '" + it.key() + "' for command '" +
                              cmd.get_name() + "'");
      }
    }
  }

  template <typename T>
  std::optional<T> maybe(const Opt<T>& o, const std::string& key) {
    if (o.given()) {
      resolved_[key] = o.value;
      return o.value;
    }
    if (cfg_.contains(key)) {
      T v = cfg_value<T>(cfg_.at(key), key);
      resolved_[key] = v;
      return v;
    }
    return std::nullopt;
  }

  template <typename T>
  T get(const Opt<T>& o, const std::string& key, T def) {
    if (auto v = maybe(o, key)) return *v;
    resolved_[key] = def;
    return def;
  }

  template <typename T>
  T require(const Opt<T>& o, const std::string& key) {
    if (auto v = maybe(o, key)) return *v;
    throw xmt::UsageError("missing required option --" + key);
  }

  void note(const std::string& key, const ojson& v) { resolved_[key] = v; }
  const ojson& resolved() const { return resolved_; }

 private:
  ojson cfg_ = ojson::object();
  ojson resolved_ = ojson::object();
};

std::uint64_t resolve_seed(Resolver& r, const Opt<std::uint64_t>& o) {
  if (auto v = r.maybe(o, "seed")) return *v;
  std::random_device rd;
  std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::fprintf(stderr, "seed: %llu\n", static_cast<unsigned long long>(s));
  r.note("seed", s);
  return s;
}

ojson envelope(const char* command, const ojson& resolved) {
  ojson j;
  j["version"] = xmt::kVersion;
  j["command"] = command;
  j["config"] = resolved;
  return j;
}

void emit(const ojson& doc) {
  std::string out = xmt::dump_json(doc);
  out.push_back('\n');
  std::fputs(out.c_str(), stdout);
}

std::string artifact_header(const ojson& resolved) {
  return "# xmt " + std::string(xmt::kVersion) + "\n# config " +
         xmt::dump_json_line(resolved) + "\n";
}

// ---------------------------------------------------------------------------
// Shared resource loading and metric construction.

struct Resources {
  std::shared_ptr<xmt::EmbeddingTable> emb;
  std::shared_ptr<xmt::ReplacementLexicon> lex;
  std::shared_ptr<xmt::WbwDictionary> wbw;
};

Resources load_resources(Resolver& r, const Opt<std::string>& emb_o,
                         const Opt<std::string>& lex_o,
                         const Opt<std::string>* wbw_o) {
  Resources res;
  if (auto p = r.maybe(emb_o, "embeddings")) {
    res.emb = std::make_shared<xmt::EmbeddingTable>(xmt::load_embeddings(resolve_data_path(*p)));
  }
  if (auto p = r.maybe(lex_o, "lexicon")) {
    res.lex = std::make_shared<xmt::ReplacementLexicon>(xmt::load_lexicon(resolve_data_path(*p)));
  }
  if (wbw_o) {
    if (auto p = r.maybe(*wbw_o, "wbw")) {
      res.wbw = std::make_shared<xmt::WbwDictionary>(xmt::load_wbw(resolve_data_path(*p)));
    }
  }
  return res;
}

xmt::MetricFn build_metric(const std::string& name, const Resources& res,
                           const std::string& pseudo) {
  xmt::MetricOptions opts;
  opts.lexicon = res.lex;
  opts.embeddings = res.emb;
  xmt::MetricFn m = xmt::make_metric(name, opts);
  if (pseudo == "file") {
    m = xmt::make_reference_free(m, xmt::PseudoRefMode::kFilePseudoRef);
  } else if (pseudo == "wbw") {
    if (!res.wbw) throw xmt::UsageError("--pseudo wbw requires --wbw dictionary");
    m = xmt::make_reference_free(m, xmt::PseudoRefMode::kWbw, res.wbw);
  } else if (!pseudo.empty()) {
    throw xmt::UsageError("unknown --pseudo mode '" + pseudo + "'; use file|wbw");
  }
  return m;
}

std::vector<xmt::Sample> load_samples(const std::string& path) {
  return xmt::load_dataset(resolve_data_path(path));
}

// ---------------------------------------------------------------------------
// Explainer flags shared by `explain` and `eval-explain`.

struct ExplainerFlags {
  Opt<std::string> explainer;
  Opt<int> lime_samples;
  Opt<double> kernel_width;
  Opt<double> drop_prob;
  Opt<bool> exhaustive;
  Opt<std::string> shap_mode;
  Opt<int> perms;
};

void add_explainer_flags(CLI::App* sub, ExplainerFlags& f) {
  add_opt(sub, f.explainer, "--explainer", "Attribution method: erasure|lime|shap");
  add_opt(sub, f.lime_samples, "--lime-samples", "LIME: sampled perturbations (default 1000)");
  add_opt(sub, f.kernel_width, "--kernel-width", "LIME: proximity kernel width (default 0.75)");
  add_opt(sub, f.drop_prob, "--drop-prob", "LIME: per-token drop probability (default 0.5)");
  add_flag(sub, f.exhaustive, "--exhaustive", "LIME: enumerate all masks (<= 20 tokens)");
  add_opt(sub, f.shap_mode, "--shap-mode", "Shapley: exact|sampled (default sampled)");
  add_opt(sub, f.perms, "--perms", "Shapley: sampled permutations (default 2000)");
}

xmt::Explainer resolve_explainer(Resolver& r, const ExplainerFlags& f, std::uint64_t seed) {
  std::string name = r.require(f.explainer, "explainer");
  if (name == "erasure") {
    return [](const xmt::MetricFn& m, const xmt::Sample& s, xmt::Segment g) {
      return xmt::erasure_explain(m, s, g);
    };
  }
  if (name == "lime") {
    xmt::LimeParams p;
    p.n_perturb = r.get(f.lime_samples, "lime-samples", p.n_perturb);
    p.kernel_width = r.get(f.kernel_width, "kernel-width", p.kernel_width);
    p.drop_prob = r.get(f.drop_prob, "drop-prob", p.drop_prob);
    p.exhaustive = r.get(f.exhaustive, "exhaustive", false);
    return [p, seed](const xmt::MetricFn& m, const xmt::Sample& s, xmt::Segment g) {
      return xmt::lime_explain(m, s, g, p, xmt::derive_seed(seed, xmt::hash_str(s.id)));
    };
  }
  if (name == "shap") {
    xmt::ShapleyParams p;
    std::string mode = r.get(f.shap_mode, "shap-mode", std::string("sampled"));
    if (mode == "exact") {
      p.mode = xmt::ShapleyParams::Mode::kExact;
    } else if (mode == "sampled") {
      p.mode = xmt::ShapleyParams::Mode::kSampled;
    } else {
      throw xmt::UsageError("unknown --shap-mode '" + mode + "'; use exact|sampled");
    }
    p.n_perm = r.get(f.perms, "perms", p.n_perm);
    return [p, seed](const xmt::MetricFn& m, const xmt::Sample& s, xmt::Segment g) {
      return xmt::shapley_explain(m, s, g, p, xmt::derive_seed(seed, xmt::hash_str(s.id)));
    };
  }
  throw xmt::UsageError("unknown --explainer '" + name + "'; use erasure|lime|shap");
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  Opt<std::string> dataset, metric, pseudo, embeddings, lexicon, wbw, format, config;
};

int run_score(const CLI::App& cmd, const ScoreArgs& a) {
  Resolver r(cmd, a.config);
  std::string dataset = r.require(a.dataset, "dataset");
  std::string metric = r.get(a.metric, "metric", std::string("bleu"));
  std::string pseudo = r.get(a.pseudo, "pseudo", std::string());
  std::string format = r.get(a.format, "format", std::string("json"));
  if (format != "json" && format != "csv") {
    throw xmt::UsageError("unknown --format '" + format + "'; use json|csv");
  }
  Resources res = load_resources(r, a.embeddings, a.lexicon, &a.wbw);
  std::vector<xmt::Sample> samples = load_samples(dataset);
  xmt::MetricFn m = build_metric(metric, res, pseudo);
  std::vector<double> scores = xmt::score_dataset(m, samples);

  if (format == "csv") {
    std::string out = artifact_header(r.resolved()) + "id,score\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
      out += csv_field(samples[i].id) + "," + xmt::format_double(scores[i]) + "\n";
    }
    std::fputs(out.c_str(), stdout);
    return 0;
  }
  ojson doc = envelope("score", r.resolved());
  ojson results = ojson::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ojson row;
    row["id"] = samples[i].id;
    row["score"] = scores[i];
    results.push_back(row);
  }
  doc["results"] = results;
  emit(doc);
  return 0;
}

// ---------------------------------------------------------------------------
// explain

struct ExplainArgs {
  Opt<std::string> dataset, metric, segment, embeddings, lexicon, html, config;
  Opt<std::uint64_t> seed;
  ExplainerFlags flags;
};

int run_explain(const CLI::App& cmd, const ExplainArgs& a) {
  Resolver r(cmd, a.config);
  std::string dataset = r.require(a.dataset, "dataset");
  std::string metric = r.get(a.metric, "metric", std::string("bleu"));
  xmt::Segment seg = xmt::parse_segment(r.get(a.segment, "segment", std::string("hyp")));
  std::uint64_t seed = resolve_seed(r, a.seed);
  Resources res = load_resources(r, a.embeddings, a.lexicon, nullptr);
  xmt::Explainer explainer = resolve_explainer(r, a.flags, seed);
  std::optional<std::string> html = r.maybe(a.html, "html");

  std::vector<xmt::Sample> samples = load_samples(dataset);
  xmt::MetricFn m = build_metric(metric, res, "");

  ojson doc = envelope("explain", r.resolved());
  ojson results = ojson::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    xmt::Explanation e = explainer(m, samples[i], seg);
    results.push_back(
        xmt::explanation_to_json(samples[i].id, xmt::segment_tokens(samples[i], seg), e));
    if (i == 0 && html) xmt::emit_heatmap(samples[i], e, *html);
  }
  doc["results"] = results;
  emit(doc);
  return 0;
}

// ---------------------------------------------------------------------------
// eval-explain

struct EvalExplainArgs {
  Opt<std::string> dataset, metric, segment, embeddings, lexicon, curves, config;
  Opt<std::uint64_t> seed;
  Opt<bool> faithfulness;
  Opt<int> steps, topk;
  Opt<double> delta;
  ExplainerFlags flags;
};

int run_eval_explain(const CLI::App& cmd, const EvalExplainArgs& a) {
  Resolver r(cmd, a.config);
  std::string dataset = r.require(a.dataset, "dataset");
  std::string metric = r.get(a.metric, "metric", std::string("bleu"));
  xmt::Segment seg = xmt::parse_segment(r.get(a.segment, "segment", std::string("hyp")));
  std::uint64_t seed = resolve_seed(r, a.seed);
  Resources res = load_resources(r, a.embeddings, a.lexicon, nullptr);
  xmt::Explainer explainer = resolve_explainer(r, a.flags, seed);
  bool faith = r.get(a.faithfulness, "faithfulness", false);
  std::optional<std::string> curves = r.maybe(a.curves, "curves");
  if (curves && !faith) throw xmt::UsageError("--curves requires --faithfulness");

  std::vector<xmt::Sample> samples = load_samples(dataset);
  xmt::MetricFn m = build_metric(metric, res, "");

  ojson doc = envelope("eval-explain", r.resolved());
  doc["plausibility"] = xmt::plausibility_to_json(
      xmt::plausibility_report(samples, explainer, m, seg));

  if (faith) {
    int steps = r.get(a.steps, "steps", 5);
    if (steps < 1) throw xmt::UsageError("--steps must be >= 1");
    int topk = r.get(a.topk, "topk", 5);
    if (topk < 1) throw xmt::UsageError("--topk must be >= 1");
    double delta = r.get(a.delta, "delta", 0.05);
    if (delta < 0) throw xmt::UsageError("--delta must be >= 0");

    ojson rows = ojson::array();
    std::string curves_csv = "id,order,k,score\n";
    int skipped_short = 0;
    double sum_morf = 0, sum_lerf = 0, sum_area = 0, sum_posthoc = 0;
    for (const xmt::Sample& s : samples) {
      std::size_t len = xmt::segment_tokens(s, seg).size();
      if (len < 2) {
        ++skipped_short;
        continue;
      }
      xmt::Explanation e = explainer(m, s, seg);
      int st = std::min<int>(steps, static_cast<int>(len) - 1);
      auto [aopc_morf, curve_morf] = xmt::aopc(m, s, e, st, xmt::RemovalOrder::kMoRF);
      auto [aopc_lerf, curve_lerf] = xmt::aopc(m, s, e, st, xmt::RemovalOrder::kLeRF);
      double area = xmt::degradation_area(m, s, e, st);
      int ph = xmt::posthoc_accuracy(m, s, e, std::min<int>(topk, static_cast<int>(len)), delta);

      ojson row;
      row["id"] = s.id;
      row["aopc_morf"] = aopc_morf;
      row["aopc_lerf"] = aopc_lerf;
      row["degradation_area"] = area;
      row["posthoc"] = ph;
      rows.push_back(row);
      sum_morf += aopc_morf;
      sum_lerf += aopc_lerf;
      sum_area += area;
      sum_posthoc += ph;

      for (std::size_t k = 0; k < curve_morf.scores.size(); ++k) {
        curves_csv += csv_field(s.id) + ",morf," + std::to_string(k) + "," +
                      xmt::format_double(curve_morf.scores[k]) + "\n";
      }
      for (std::size_t k = 0; k < curve_lerf.scores.size(); ++k) {
        curves_csv += csv_field(s.id) + ",lerf," + std::to_string(k) + "," +
                      xmt::format_double(curve_lerf.scores[k]) + "\n";
      }
    }
    ojson fa;
    fa["rows"] = rows;
    fa["skipped_short"] = skipped_short;
    std::size_t n = rows.size();
    fa["mean_aopc_morf"] = n ? ojson(sum_morf / n) : ojson(nullptr);
    fa["mean_aopc_lerf"] = n ? ojson(sum_lerf / n) : ojson(nullptr);
    fa["mean_degradation_area"] = n ? ojson(sum_area / n) : ojson(nullptr);
    fa["mean_posthoc"] = n ? ojson(sum_posthoc / n) : ojson(nullptr);
    doc["faithfulness"] = fa;
    if (curves) write_text_file(*curves, artifact_header(r.resolved()) + curves_csv);
  }
  emit(doc);
  return 0;
}

// ---------------------------------------------------------------------------
// attack (including the perturbation checklist)

struct AttackArgs {
  Opt<std::string> dataset, metrics, profile, embeddings, lexicon, results_out, html,
      checklist, negation_token, config;
  Opt<int> k, from_class, to_class, max_candidates, span_start, span_len;
  Opt<double> tau_w, tau_s, rho;
  Opt<std::uint64_t> seed;
};

int run_attack(const CLI::App& cmd, const AttackArgs& a) {
  Resolver r(cmd, a.config);
  std::string dataset = r.require(a.dataset, "dataset");
  std::string metrics_csv = r.get(a.metrics, "metrics", std::string("bleu"));
  std::uint64_t seed = resolve_seed(r, a.seed);
  Resources res = load_resources(r, a.embeddings, a.lexicon, nullptr);
  std::vector<xmt::Sample> samples = load_samples(dataset);

  std::vector<xmt::MetricFn> fns;
  for (const std::string& item : split(metrics_csv, ',')) {
    std::string name = trim(item);
    if (name.empty()) continue;
    xmt::MetricOptions opts;
    opts.lexicon = res.lex;
    opts.embeddings = res.emb;
    fns.push_back(xmt::make_metric(name, opts));
  }
  if (fns.empty()) throw xmt::UsageError("--metrics names no metric");

  std::optional<std::string> checklist = r.maybe(a.checklist, "checklist");
  if (checklist) {
    int span_start_i = r.get(a.span_start, "span-start", 0);
    if (span_start_i < 0) throw xmt::UsageError("--span-start must be >= 0");
    std::size_t span_start = static_cast<std::size_t>(span_start_i);
    int span_len = r.get(a.span_len, "span-len", 1);
    if (span_len < 1) throw xmt::UsageError("--span-len must be >= 1");
    std::string negation = r.get(a.negation_token, "negation-token", std::string("not"));

    std::vector<xmt::PerturbTemplate> templates;
    std::vector<double> deltas;
    for (const std::string& item : split(*checklist, ',')) {
      std::string t = trim(item);
      if (t.empty()) continue;
      std::size_t eq = t.find('=');
      if (eq == std::string::npos) {
        throw xmt::UsageError("checklist items are name=human_delta pairs, got '" + t + "'");
      }
      xmt::PerturbTemplate tpl = xmt::PerturbTemplate::parse(trim(t.substr(0, eq)));
      if (tpl.kind == xmt::PerturbTemplate::Kind::kDropSpan) {
        tpl.span_start = span_start;
        tpl.span_len = static_cast<std::size_t>(span_len);
      }
      if (tpl.kind == xmt::PerturbTemplate::Kind::kNegate) tpl.negation_token = negation;
      templates.push_back(tpl);
      deltas.push_back(parse_d(trim(t.substr(eq + 1)), "checklist delta"));
    }
    xmt::ChecklistRun run =
        xmt::run_checklist(fns[0], samples, templates, deltas, res.lex.get(), seed);
    ojson doc = envelope("attack", r.resolved());
    doc["checklist"] = xmt::checklist_to_json(run);
    emit(doc);
    return 0;
  }

  int k = r.get(a.k, "k", 3);
  int to_class = r.require(a.to_class, "to-class");
  std::optional<int> from_class = r.maybe(a.from_class, "from-class");
  std::string profile = r.get(a.profile, "profile", std::string("fooler"));

  xmt::AttackConfig cfg;
  if (profile == "fooler") {
    cfg = xmt::AttackConfig::fooler(to_class);
  } else if (profile == "fooler_adjusted") {
    cfg = xmt::AttackConfig::fooler_adjusted(to_class);
  } else {
    throw xmt::UsageError("unknown --profile '" + profile + "'; use fooler|fooler_adjusted");
  }
  if (auto v = r.maybe(a.tau_w, "tau-w")) cfg.min_word_sim = *v;
  if (auto v = r.maybe(a.tau_s, "tau-s")) cfg.min_sent_sim = *v;
  if (auto v = r.maybe(a.rho, "rho")) cfg.max_perturb_ratio = *v;
  if (auto v = r.maybe(a.max_candidates, "max-candidates")) cfg.max_candidates = *v;

  xmt::Discretization disc = xmt::discretize(samples, fns, k);

  std::set<std::string> ids;
  if (from_class) {
    if (*from_class == to_class) {
      throw xmt::UsageError("--from-class and --to-class must differ");
    }
    auto it = disc.common_class_samples.find(*from_class);
    if (it != disc.common_class_samples.end()) ids.insert(it->second.begin(), it->second.end());
  } else {
    for (const auto& [cls, members] : disc.common_class_samples) {
      if (cls != to_class) ids.insert(members.begin(), members.end());
    }
  }
  std::vector<xmt::Sample> selected;
  for (const xmt::Sample& s : samples) {
    if (ids.count(s.id)) selected.push_back(s);
  }
  if (selected.empty()) {
    throw xmt::DataError("attack: no samples outside the target class to attack");
  }

  std::vector<xmt::AttackResult> results =
      xmt::run_campaign(disc.metrics[0], selected, cfg, res.lex.get(), res.emb.get(), seed);
  ojson doc = envelope("attack", r.resolved());
  doc["stats"] = xmt::attack_stats_to_json(xmt::attack_stats(results));

  if (auto out = r.maybe(a.results_out, "results-out")) {
    ojson header;
    header["version"] = xmt::kVersion;
    header["config"] = r.resolved();
    std::string lines = xmt::dump_json_line(header) + "\n";
    for (const xmt::AttackResult& res_i : results) {
      lines += xmt::dump_json_line(xmt::attack_result_to_json(res_i)) + "\n";
    }
    write_text_file(*out, lines);
    doc["results_path"] = *out;
  } else {
    ojson arr = ojson::array();
    for (const xmt::AttackResult& res_i : results) {
      arr.push_back(xmt::attack_result_to_json(res_i));
    }
    doc["results"] = arr;
  }

  if (auto html = r.maybe(a.html, "html")) {
    bool wrote = false;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (results[i].success) {
        xmt::emit_attack_diff(selected[i], results[i], *html);
        wrote = true;
        break;
      }
    }
    if (!wrote) std::fprintf(stderr, "note: no successful attack; --html not written\n");
  }
  emit(doc);
  return 0;
}

// ---------------------------------------------------------------------------
// invert

struct InvertArgs {
  Opt<std::string> dataset, metric, targets, sample, embeddings, lexicon, config;
  Opt<int> iters, beam, kmax;
  Opt<double> p;
  Opt<std::uint64_t> seed;
};

int run_invert(const CLI::App& cmd, const InvertArgs& a) {
  Resolver r(cmd, a.config);
  std::string dataset = r.require(a.dataset, "dataset");
  std::string metric = r.get(a.metric, "metric", std::string("bleu"));
  std::vector<double> targets = parse_double_list(r.require(a.targets, "targets"), "--targets");
  if (targets.empty()) throw xmt::UsageError("--targets names no target score");
  xmt::InverseParams params;
  params.iterations = r.get(a.iters, "iters", params.iterations);
  params.beam = r.get(a.beam, "beam", params.beam);
  params.perturb_prob = r.get(a.p, "p", params.perturb_prob);
  params.kmax = r.get(a.kmax, "kmax", params.kmax);
  std::optional<std::string> only = r.maybe(a.sample, "sample");
  std::uint64_t seed = resolve_seed(r, a.seed);
  Resources res = load_resources(r, a.embeddings, a.lexicon, nullptr);

  std::vector<xmt::Sample> samples = load_samples(dataset);
  if (only) {
    std::vector<xmt::Sample> filtered;
    for (const xmt::Sample& s : samples) {
      if (s.id == *only) filtered.push_back(s);
    }
    if (filtered.empty()) throw xmt::DataError("sample '" + *only + "' not found in dataset");
    samples = std::move(filtered);
  }
  xmt::MetricFn m = build_metric(metric, res, "");

  ojson doc = envelope("invert", r.resolved());
  ojson entries = ojson::array();
  for (const xmt::Sample& s : samples) {
    std::vector<xmt::InverseResult> results = xmt::neighborhood(
        m, s, targets, params, res.lex.get(), res.emb.get(),
        xmt::derive_seed(seed, xmt::hash_str(s.id)));
    ojson entry;
    entry["id"] = s.id;
    ojson arr = ojson::array();
    for (const xmt::InverseResult& ir : results) arr.push_back(xmt::inverse_to_json(ir));
    entry["targets"] = arr;
    entries.push_back(entry);
  }
  doc["results"] = entries;
  emit(doc);
  return 0;
}

// ---------------------------------------------------------------------------
// disentangle

struct DisentangleArgs {
  Opt<std::string> dataset, metric, factors, embeddings, lexicon, config;
};

int run_disentangle(const CLI::App& cmd, const DisentangleArgs& a) {
  Resolver r(cmd, a.config);
  std::string dataset = r.require(a.dataset, "dataset");
  std::string metric = r.get(a.metric, "metric", std::string("bleu"));
  std::string factors_csv = r.get(a.factors, "factors", std::string("lex,lenr"));
  Resources res = load_resources(r, a.embeddings, a.lexicon, nullptr);

  std::vector<std::string> factors;
  for (const std::string& item : split(factors_csv, ',')) {
    std::string name = trim(item);
    if (!name.empty()) factors.push_back(name);
  }
  std::vector<xmt::Sample> samples = load_samples(dataset);
  xmt::MetricFn m = build_metric(metric, res, "");
  xmt::DisentangleReport report =
      xmt::disentangle_report(samples, m, factors, res.emb.get());

  ojson doc = envelope("disentangle", r.resolved());
  doc["report"] = xmt::disentangle_to_json(report);
  emit(doc);
  return 0;
}

// ---------------------------------------------------------------------------
// rank

struct RankArgs {
  Opt<std::string> input, config;
  Opt<double> prior, tol;
  Opt<int> max_iter;
};

xmt::ScoreTable load_score_table(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw xmt::DataError("cannot read " + path);
  std::vector<std::pair<int, std::string>> lines;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    lines.emplace_back(lineno, line);
  }
  if (lines.empty()) throw xmt::DataError(path + ": empty score table");

  std::vector<std::string> header = split(lines[0].second, ',');
  if (header.size() < 3) {
    throw xmt::DataError(path + ":" + std::to_string(lines[0].first) +
                         ": need an instance column and at least two system columns");
  }
  xmt::ScoreTable t;
  for (std::size_t i = 1; i < header.size(); ++i) t.systems.push_back(trim(header[i]));
  t.values.assign(t.systems.size(), {});

  for (std::size_t row = 1; row < lines.size(); ++row) {
    std::vector<std::string> cells = split(lines[row].second, ',');
    if (cells.size() != header.size()) {
      throw xmt::DataError(path + ":" + std::to_string(lines[row].first) + ": expected " +
                           std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()));
    }
    t.instances.push_back(trim(cells[0]));
    for (std::size_t i = 1; i < cells.size(); ++i) {
      std::string cell = trim(cells[i]);
      errno = 0;
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || errno != 0 || end != cell.c_str() + cell.size()) {
        throw xmt::DataError(path + ":" + std::to_string(lines[row].first) + ": '" + cell +
                             "' is not a number");
      }
      t.values[i - 1].push_back(v);
    }
  }
  if (t.instances.empty()) throw xmt::DataError(path + ": no instance rows");
  return t;
}

const char* stars_for(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

int run_rank(const CLI::App& cmd, const RankArgs& a) {
  Resolver r(cmd, a.config);
  std::string input = resolve_data_path(r.require(a.input, "input"));
  xmt::BtOptions opts;
  opts.prior = r.get(a.prior, "prior", opts.prior);
  opts.tol = r.get(a.tol, "tol", opts.tol);
  opts.max_iter = r.get(a.max_iter, "max-iter", opts.max_iter);

  xmt::ScoreTable t = load_score_table(input);
  xmt::WinMatrix w = xmt::win_matrix(t);
  std::vector<double> strengths = xmt::bt_fit(w, opts);
  std::vector<std::string> mean_rank = xmt::rank_by_mean(t);
  std::vector<std::string> bt_rank = xmt::rank_by_bt(t, opts);
  double disagreement = xmt::ranking_disagreement(mean_rank, bt_rank);

  ojson doc = envelope("rank", r.resolved());
  ojson mr = ojson::array();
  for (const std::string& s : mean_rank) mr.push_back(s);
  doc["mean_rank"] = mr;
  ojson br = ojson::array();
  for (const std::string& s : bt_rank) br.push_back(s);
  doc["bt_rank"] = br;
  ojson st = ojson::object();
  for (std::size_t i = 0; i < t.systems.size(); ++i) st[t.systems[i]] = strengths[i];
  doc["strengths"] = st;
  doc["disagreement"] = disagreement;

  std::size_t n_inst = t.instances.size();
  ojson pairs = ojson::array();
  for (std::size_t i = 0; i < t.systems.size(); ++i) {
    for (std::size_t j = i + 1; j < t.systems.size(); ++j) {
      int wins_i = 0, wins_j = 0, ties = 0;
      for (std::size_t inst = 0; inst < n_inst; ++inst) {
        double vi = t.values[i][inst], vj = t.values[j][inst];
        if (vi > vj) ++wins_i;
        else if (vj > vi) ++wins_j;
        else ++ties;
      }
      ojson cell;
      cell["a"] = t.systems[i];
      cell["b"] = t.systems[j];
      cell["wins_a"] = wins_i;
      cell["wins_b"] = wins_j;
      cell["ties"] = ties;
      cell["win_share_a"] = w.w[i][j] / static_cast<double>(n_inst);
      if (wins_i + wins_j > 0) {
        double p = xmt::sign_test(wins_i, wins_j);
        cell["sign_p"] = p;
        cell["stars"] = stars_for(p);
      } else {
        cell["sign_p"] = nullptr;
        cell["stars"] = "";
      }
      pairs.push_back(cell);
    }
  }
  doc["pairwise"] = pairs;
  emit(doc);
  return 0;
}

// ---------------------------------------------------------------------------
// kappa

struct KappaArgs {
  Opt<std::string> a, b, file, config;
  Opt<bool> coarse;
};

void load_label_file(const std::string& path, std::vector<int>& va, std::vector<int>& vb) {
  std::ifstream f(path);
  if (!f) throw xmt::DataError("cannot read " + path);
  auto parse_label = [&](const std::string& s, int lineno) {
    errno = 0;
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || errno != 0 || end != s.c_str() + s.size()) {
      throw xmt::DataError(path + ":" + std::to_string(lineno) + ": '" + s +
                           "' is not an integer label");
    }
    return static_cast<int>(v);
  };
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    for (char& c : line) {
      if (c == ',' || c == '\t') c = ' ';
    }
    std::istringstream ss(line);
    std::string s1, s2, extra;
    if (!(ss >> s1)) continue;
    if (!(ss >> s2) || (ss >> extra)) {
      throw xmt::DataError(path + ":" + std::to_string(lineno) +
                           ": expected exactly two labels per line");
    }
    va.push_back(parse_label(s1, lineno));
    vb.push_back(parse_label(s2, lineno));
  }
}

int run_kappa(const CLI::App& cmd, const KappaArgs& a) {
  Resolver r(cmd, a.config);
  std::optional<std::string> la = r.maybe(a.a, "a");
  std::optional<std::string> lb = r.maybe(a.b, "b");
  std::optional<std::string> file = r.maybe(a.file, "file");
  bool coarse = r.get(a.coarse, "coarse", false);

  std::vector<int> va, vb;
  if (file) {
    if (la || lb) throw xmt::UsageError("use either --a/--b or --file, not both");
    load_label_file(resolve_data_path(*file), va, vb);
  } else {
    if (!la || !lb) throw xmt::UsageError("kappa needs --a and --b label lists or --file");
    va = parse_int_list(*la, "--a");
    vb = parse_int_list(*lb, "--b");
  }
  double kp = xmt::cohen_kappa(va, vb, coarse);

  ojson doc = envelope("kappa", r.resolved());
  doc["kappa"] = kp;
  doc["n"] = static_cast<int>(va.size());
  emit(doc);
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"Interpretable MT evaluation: metrics, attribution, and diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(xmt::kVersion));

  CLI::App* score_cmd = app.add_subcommand("score", "Score a JSONL dataset with one metric");
  ScoreArgs score_args;
  add_opt(score_cmd, score_args.dataset, "--dataset", "JSONL dataset path");
  add_opt(score_cmd, score_args.metric, "--metric", "bleu|chrf|meteor|embed (default bleu)");
  add_opt(score_cmd, score_args.pseudo, "--pseudo",
          "Reference-free mode: file (pseudo_ref field) or wbw (dictionary)");
  add_opt(score_cmd, score_args.embeddings, "--embeddings", "Word embedding text file");
  add_opt(score_cmd, score_args.lexicon, "--lexicon", "Replacement/synonym lexicon TSV");
  add_opt(score_cmd, score_args.wbw, "--wbw", "Word-by-word dictionary TSV");
  add_opt(score_cmd, score_args.format, "--format", "json|csv (default json)");
  add_opt(score_cmd, score_args.config, "--config", "JSON config file (flags win)");

  CLI::App* explain_cmd =
      app.add_subcommand("explain", "Word-level relevance attribution for a metric");
  ExplainArgs explain_args;
  add_opt(explain_cmd, explain_args.dataset, "--dataset", "JSONL dataset path");
  add_opt(explain_cmd, explain_args.metric, "--metric", "bleu|chrf|meteor|embed");
  add_explainer_flags(explain_cmd, explain_args.flags);
  add_opt(explain_cmd, explain_args.segment, "--segment", "hyp|src|ref (default hyp)");
  add_opt(explain_cmd, explain_args.embeddings, "--embeddings", "Word embedding text file");
  add_opt(explain_cmd, explain_args.lexicon, "--lexicon", "Replacement/synonym lexicon TSV");
  add_opt(explain_cmd, explain_args.html, "--html",
          "Write a relevance heatmap of the first sample to this path");
  add_opt(explain_cmd, explain_args.seed, "--seed", "Master random seed");
  add_opt(explain_cmd, explain_args.config, "--config", "JSON config file (flags win)");

  CLI::App* eval_cmd = app.add_subcommand(
      "eval-explain", "Plausibility (and optionally faithfulness) of an explainer");
  EvalExplainArgs eval_args;
  add_opt(eval_cmd, eval_args.dataset, "--dataset", "JSONL dataset path (word labels needed)");
  add_opt(eval_cmd, eval_args.metric, "--metric", "bleu|chrf|meteor|embed");
  add_explainer_flags(eval_cmd, eval_args.flags);
  add_opt(eval_cmd, eval_args.segment, "--segment", "hyp|src (default hyp)");
  add_opt(eval_cmd, eval_args.embeddings, "--embeddings", "Word embedding text file");
  add_opt(eval_cmd, eval_args.lexicon, "--lexicon", "Replacement/synonym lexicon TSV");
  add_flag(eval_cmd, eval_args.faithfulness, "--faithfulness",
           "Add AOPC, degradation and post-hoc accuracy");
  add_opt(eval_cmd, eval_args.steps, "--steps", "Deletion steps per curve (default 5)");
  add_opt(eval_cmd, eval_args.topk, "--topk", "Tokens kept for post-hoc accuracy (default 5)");
  add_opt(eval_cmd, eval_args.delta, "--delta", "Post-hoc score tolerance (default 0.05)");
  add_opt(eval_cmd, eval_args.curves, "--curves", "Write per-sample MoRF/LeRF curves CSV here");
  add_opt(eval_cmd, eval_args.seed, "--seed", "Master random seed");
  add_opt(eval_cmd, eval_args.config, "--config", "JSON config file (flags win)");

  CLI::App* attack_cmd = app.add_subcommand(
      "attack", "Greedy substitution attacks on a discretized metric, or a checklist");
  AttackArgs attack_args;
  add_opt(attack_cmd, attack_args.dataset, "--dataset", "JSONL dataset path");
  add_opt(attack_cmd, attack_args.metrics, "--metrics",
          "Comma list; first is attacked, the rest restrict class agreement");
  add_opt(attack_cmd, attack_args.k, "--k", "Number of score classes (default 3)");
  add_opt(attack_cmd, attack_args.from_class, "--from-class",
          "Only attack samples of this (agreed) class");
  add_opt(attack_cmd, attack_args.to_class, "--to-class", "Target class of the attack");
  add_opt(attack_cmd, attack_args.profile, "--profile",
          "fooler|fooler_adjusted constraint profile");
  add_opt(attack_cmd, attack_args.tau_w, "--tau-w", "Min word cosine (overrides profile)");
  add_opt(attack_cmd, attack_args.tau_s, "--tau-s", "Min sentence cosine (overrides profile)");
  add_opt(attack_cmd, attack_args.rho, "--rho", "Max perturbed-token ratio (overrides profile)");
  add_opt(attack_cmd, attack_args.max_candidates, "--max-candidates",
          "Replacement candidates per position (default 50)");
  add_opt(attack_cmd, attack_args.embeddings, "--embeddings", "Word embedding text file");
  add_opt(attack_cmd, attack_args.lexicon, "--lexicon", "Replacement/synonym lexicon TSV");
  add_opt(attack_cmd, attack_args.results_out, "--results-out",
          "Write per-sample results as JSONL here instead of embedding them");
  add_opt(attack_cmd, attack_args.html, "--html",
          "Write a side-by-side diff of the first successful attack");
  add_opt(attack_cmd, attack_args.checklist, "--checklist",
          "Run templates instead: name=human_delta,... "
          "(identity, drop_span, jumble, negate, number_swap, lexicon_swap)");
  add_opt(attack_cmd, attack_args.span_start, "--span-start", "drop_span start (default 0)");
  add_opt(attack_cmd, attack_args.span_len, "--span-len", "drop_span length (default 1)");
  add_opt(attack_cmd, attack_args.negation_token, "--negation-token",
          "Token toggled by the negate template (default 'not')");
  add_opt(attack_cmd, attack_args.seed, "--seed", "Master random seed");
  add_opt(attack_cmd, attack_args.config, "--config", "JSON config file (flags win)");

  CLI::App* invert_cmd = app.add_subcommand(
      "invert", "Search hypothesis edits that reach target metric scores");
  InvertArgs invert_args;
  add_opt(invert_cmd, invert_args.dataset, "--dataset", "JSONL dataset path");
  add_opt(invert_cmd, invert_args.metric, "--metric", "bleu|chrf|meteor|embed");
  add_opt(invert_cmd, invert_args.targets, "--targets", "Comma list of target scores");
  add_opt(invert_cmd, invert_args.iters, "--iters", "Search iterations (default 30)");
  add_opt(invert_cmd, invert_args.beam, "--beam", "Beam width (default 8)");
  add_opt(invert_cmd, invert_args.p, "--p", "Per-position mutation probability (default 0.15)");
  add_opt(invert_cmd, invert_args.kmax, "--kmax", "Replacement candidates per position");
  add_opt(invert_cmd, invert_args.sample, "--sample", "Restrict to the sample with this id");
  add_opt(invert_cmd, invert_args.embeddings, "--embeddings", "Word embedding text file");
  add_opt(invert_cmd, invert_args.lexicon, "--lexicon", "Replacement/synonym lexicon TSV");
  add_opt(invert_cmd, invert_args.seed, "--seed", "Master random seed");
  add_opt(invert_cmd, invert_args.config, "--config", "JSON config file (flags win)");

  CLI::App* dis_cmd = app.add_subcommand(
      "disentangle", "Regress a metric on interpretable factors (lex, sem, emb, lenr)");
  DisentangleArgs dis_args;
  add_opt(dis_cmd, dis_args.dataset, "--dataset", "JSONL dataset path");
  add_opt(dis_cmd, dis_args.metric, "--metric", "bleu|chrf|meteor|embed");
  add_opt(dis_cmd, dis_args.factors, "--factors",
          "Comma list of lex,sem,emb,lenr (default lex,lenr)");
  add_opt(dis_cmd, dis_args.embeddings, "--embeddings", "Word embedding text file (emb factor)");
  add_opt(dis_cmd, dis_args.lexicon, "--lexicon", "Replacement/synonym lexicon TSV");
  add_opt(dis_cmd, dis_args.config, "--config", "JSON config file (flags win)");

  CLI::App* rank_cmd = app.add_subcommand(
      "rank", "Mean vs Bradley-Terry ranking of systems from a score table CSV");
  RankArgs rank_args;
  add_opt(rank_cmd, rank_args.input, "--input",
          "CSV: header 'instance,sysA,sysB,...', one row per instance");
  add_opt(rank_cmd, rank_args.prior, "--prior", "Pseudo-win prior (default 0.1)");
  add_opt(rank_cmd, rank_args.tol, "--tol", "Convergence tolerance (default 1e-10)");
  add_opt(rank_cmd, rank_args.max_iter, "--max-iter", "Max MM sweeps (default 10000)");
  add_opt(rank_cmd, rank_args.config, "--config", "JSON config file (flags win)");

  CLI::App* kappa_cmd =
      app.add_subcommand("kappa", "Cohen's kappa between two annotators (labels 0/1/2)");
  KappaArgs kappa_args;
  add_opt(kappa_cmd, kappa_args.a, "--a", "Comma list of annotator A labels");
  add_opt(kappa_cmd, kappa_args.b, "--b", "Comma list of annotator B labels");
  add_opt(kappa_cmd, kappa_args.file, "--file", "File with two labels per line");
  add_flag(kappa_cmd, kappa_args.coarse, "--coarse", "Collapse labels 1 and 2 before agreement");
  add_opt(kappa_cmd, kappa_args.config, "--config", "JSON config file (flags win)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(score_cmd)) return run_score(*score_cmd, score_args);
    if (app.got_subcommand(explain_cmd)) return run_explain(*explain_cmd, explain_args);
    if (app.got_subcommand(eval_cmd)) return run_eval_explain(*eval_cmd, eval_args);
    if (app.got_subcommand(attack_cmd)) return run_attack(*attack_cmd, attack_args);
    if (app.got_subcommand(invert_cmd)) return run_invert(*invert_cmd, invert_args);
    if (app.got_subcommand(dis_cmd)) return run_disentangle(*dis_cmd, dis_args);
    if (app.got_subcommand(rank_cmd)) return run_rank(*rank_cmd, rank_args);
    if (app.got_subcommand(kappa_cmd)) return run_kappa(*kappa_cmd, kappa_args);
  } catch (const xmt::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const xmt::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const xmt::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
  return 0;
}
