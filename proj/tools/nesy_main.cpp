// nesy: neuro-symbolic outcome prediction on event logs.
//
// Subcommands: train, evaluate, experiment, synth, suggest. Every run writes
// a manifest.json with the resolved configuration and input hashes; output
// CSV/JSON files are byte-deterministic given the same manifest.

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nesy/error.hpp"
#include "nesy/evaluation.hpp"
#include "nesy/metrics.hpp"
#include "nesy/model.hpp"
#include "nesy/rules.hpp"
#include "nesy/timeutil.hpp"
#include "nesy/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nesy;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file for hashing: " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[8192];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char hex[20];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

std::string now_iso() {
  return format_iso8601_ms(static_cast<std::int64_t>(std::time(nullptr)) * 1000LL);
}

// ---------------------------------------------------------------------------
// shared option bundles

struct LogOptions {
  std::string log_path;
  std::string col_case = "case_id";
  std::string col_activity = "activity";
  std::string col_timestamp = "timestamp";
  std::string labeler;
};

struct SplitOptions {
  std::string mode = "temporal";  // temporal | compliance (| all for evaluate)
  double train_frac = 0.8;
  double val_frac = -1.0;  // <0: carve 20% of the train period
  double enrich = 0.3;
  std::size_t min_prefix = 2;
  std::size_t max_prefix = 0;
  bool allow_unit_prefixes = false;
};

struct ModelOptions {
  std::string backbone = "recurrent";
  std::string cell = "gru";
  std::size_t layers = 1;
  std::size_t hidden = 32;
  std::size_t embed = 16;
  bool no_time_features = false;
};

struct TrainOptions {
  std::string variant = "two-stage";
  double alpha = 0.8;
  double beta = 0.2;
  std::size_t ep = 5;
  std::size_t ef = 50;
  double lambda = 2.0;
  std::string tau = "auto";
  std::string tau_grid = "0,0.2,0.4,0.6,0.8";
  double p = 2.0;
  double lr = 1e-3;
  std::size_t batch = 32;
  std::uint64_t seed = 1;
  std::string semantics = "product";
  bool guarded_cf = false;
  bool strict_is_next = false;
  bool smooth_compare = false;
  double compare_temp = 1.0;
  bool joint_finetune = false;
};

void add_log_options(CLI::App* cmd, LogOptions& o, bool need_labeler = true) {
  cmd->add_option("--log", o.log_path, "event log CSV")->required();
  cmd->add_option("--col-case", o.col_case, "case id column");
  cmd->add_option("--col-activity", o.col_activity, "activity column");
  cmd->add_option("--col-timestamp", o.col_timestamp, "timestamp column (ISO-8601)");
  auto* lab = cmd->add_option(
      "--labeler", o.labeler,
      "outcome labeler, e.g. \"contains(Surg)\" or \"attr(outcome) = 1\"");
  if (need_labeler) lab->required();
}

void add_split_options(CLI::App* cmd, SplitOptions& o) {
  cmd->add_option("--split", o.mode, "temporal | compliance");
  cmd->add_option("--train-frac", o.train_frac, "train period fraction (default 0.8)");
  cmd->add_option("--val-frac", o.val_frac,
                  "validation fraction of the total; default carves 20% of the "
                  "train period");
  cmd->add_option("--enrich", o.enrich,
                  "compliance split: target test compliant fraction");
  cmd->add_option("--min-prefix", o.min_prefix, "minimum prefix length");
  cmd->add_option("--max-prefix", o.max_prefix,
                  "maximum prefix length (0 = trace length)");
  cmd->add_flag("--allow-unit-prefixes", o.allow_unit_prefixes,
                "permit length-1 prefixes");
}

void add_model_options(CLI::App* cmd, ModelOptions& o) {
  cmd->add_option("--backbone", o.backbone, "recurrent | pooled_mlp");
  cmd->add_option("--cell", o.cell, "gru | lstm");
  cmd->add_option("--layers", o.layers, "recurrent layers");
  cmd->add_option("--hidden", o.hidden, "hidden width");
  cmd->add_option("--embed", o.embed, "embedding dimension");
  cmd->add_flag("--no-time-features", o.no_time_features,
                "drop derived per-event time inputs");
}

void add_train_options(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--variant", o.variant, "bce | ltn-data | ltn-nop | two-stage");
  cmd->add_option("--alpha", o.alpha, "data-axiom weight (phase 1)");
  cmd->add_option("--beta", o.beta, "knowledge-axiom weight (phase 1)");
  cmd->add_option("--ep", o.ep, "pretraining epochs E_p");
  cmd->add_option("--ef", o.ef, "fine-tuning epochs E_f");
  cmd->add_option("--lambda", o.lambda, "gating variance penalty");
  cmd->add_option("--tau", o.tau, "pruning threshold, a number or 'auto'");
  cmd->add_option("--tau-grid", o.tau_grid, "comma-separated tau candidates for 'auto'");
  cmd->add_option("--p", o.p, "aggregator exponent (>= 1)");
  cmd->add_option("--lr", o.lr, "Adam learning rate");
  cmd->add_option("--batch", o.batch, "batch size");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--semantics", o.semantics, "product | lukasiewicz | godel");
  cmd->add_flag("--guarded-cf", o.guarded_cf,
                "compile control-flow rules with an implication guard");
  cmd->add_flag("--strict-is-next", o.strict_is_next,
                "is_next is false when the trigger activity is absent");
  cmd->add_flag("--smooth-compare", o.smooth_compare,
                "sigmoid comparison atoms instead of crisp {0,1}");
  cmd->add_option("--compare-temp", o.compare_temp, "smooth comparison temperature");
  cmd->add_flag("--joint-finetune", o.joint_finetune,
                "use the joint LTN loss in phase 2 even on the compliance split");
}

SplitSpec make_split_spec(const SplitOptions& o) {
  SplitSpec spec;
  if (o.mode == "temporal" || o.mode == "all") spec.mode = SplitMode::temporal;
  else if (o.mode == "compliance") spec.mode = SplitMode::compliance_aware;
  else throw ValidationError("unknown split mode '" + o.mode + "'");
  if (!(o.train_frac > 0.0 && o.train_frac < 1.0))
    throw ValidationError("--train-frac must lie in (0,1)");
  if (o.val_frac < 0.0) {
    // validation is the latest slice of the train period, default 20% of it
    spec.validation_fraction = 0.2 * o.train_frac;
    spec.train_fraction = o.train_frac - spec.validation_fraction;
  } else {
    spec.train_fraction = o.train_frac;
    spec.validation_fraction = o.val_frac;
  }
  spec.compliant_enrichment_ratio = o.enrich;
  spec.min_prefix_len = o.min_prefix;
  spec.max_prefix_len = o.max_prefix;
  if (spec.min_prefix_len < 2 && !o.allow_unit_prefixes)
    throw ValidationError(
        "length-1 prefixes carry almost no sequence signal; pass "
        "--allow-unit-prefixes to permit them");
  return spec;
}

EncoderConfig make_encoder_config(const ModelOptions& o) {
  EncoderConfig cfg;
  cfg.backbone = parse_backbone(o.backbone);
  cfg.cell = parse_cell(o.cell);
  cfg.layers = o.layers;
  cfg.hidden = o.hidden;
  cfg.embed_dim = o.embed;
  cfg.time_features = !o.no_time_features;
  return cfg;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

TrainConfig make_train_config(const TrainOptions& t, const ModelOptions& m,
                              const SplitOptions& s) {
  TrainConfig cfg;
  cfg.variant = parse_variant(t.variant);
  cfg.mode = s.mode == "compliance" ? SplitMode::compliance_aware : SplitMode::temporal;
  cfg.alpha = t.alpha;
  cfg.beta = t.beta;
  cfg.epochs_pretrain = t.ep;
  cfg.epochs_finetune = t.ef;
  cfg.lambda = t.lambda;
  if (t.tau == "auto") {
    cfg.tau.reset();
    cfg.tau_grid = parse_double_list(t.tau_grid);
  } else {
    try {
      cfg.tau = std::stod(t.tau);
    } catch (const std::exception&) {
      throw ValidationError("--tau must be a number or 'auto'");
    }
  }
  cfg.aggregator_p = t.p;
  cfg.lr = t.lr;
  cfg.batch_size = t.batch;
  cfg.seed = t.seed;
  cfg.encoder = make_encoder_config(m);
  cfg.semantics = t.semantics;
  cfg.smooth_comparisons = t.smooth_compare;
  cfg.comparison_temperature = t.compare_temp;
  cfg.weighted_finetune_in_compliance_mode = !t.joint_finetune;
  cfg.validate();
  return cfg;
}

json split_json(const SplitOptions& o, const SplitSpec& spec) {
  return {{"mode", o.mode},
          {"train_fraction", spec.train_fraction},
          {"validation_fraction", spec.validation_fraction},
          {"enrichment_ratio", spec.compliant_enrichment_ratio},
          {"min_prefix_len", spec.min_prefix_len},
          {"max_prefix_len", spec.max_prefix_len}};
}

json train_json(const TrainConfig& cfg) {
  json j{{"variant", variant_str(cfg.variant)},
         {"alpha", cfg.alpha},
         {"beta", cfg.beta},
         {"epochs_pretrain", cfg.epochs_pretrain},
         {"epochs_finetune", cfg.epochs_finetune},
         {"lambda", cfg.lambda},
         {"p", cfg.aggregator_p},
         {"lr", cfg.lr},
         {"batch_size", cfg.batch_size},
         {"seed", cfg.seed},
         {"semantics", cfg.semantics},
         {"backbone", backbone_str(cfg.encoder.backbone)},
         {"cell", cell_str(cfg.encoder.cell)},
         {"layers", cfg.encoder.layers},
         {"hidden", cfg.encoder.hidden},
         {"embed_dim", cfg.encoder.embed_dim},
         {"time_features", cfg.encoder.time_features}};
  if (cfg.tau) j["tau"] = *cfg.tau;
  else j["tau"] = "auto";
  j["tau_grid"] = cfg.tau_grid;
  return j;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const json& resolved, const std::vector<std::string>& inputs) {
  json j;
  j["tool"] = "nesy";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["created_at"] = now_iso();
  j["config"] = resolved;
  json hashes = json::object();
  for (const auto& path : inputs) hashes[path] = hash_hex(fnv1a64_file(path));
  j["input_hashes"] = hashes;
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write manifest in " + out_dir.string());
  out << j.dump(2) << "\n";
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

struct LoadedLog {
  std::vector<Trace> traces;
  LabelCounts counts;
  std::set<std::string> activities;
  std::set<std::string> attributes;
  std::vector<std::string> exclude_attrs;
};

LoadedLog load_and_label(const LogOptions& o) {
  LoadedLog ll;
  LogSchema schema{o.col_case, o.col_activity, o.col_timestamp};
  ll.traces = load_log(o.log_path, schema);
  if (!o.labeler.empty()) {
    LabelRule rule = parse_label_rule(o.labeler);
    ll.counts = label_traces(ll.traces, rule);
    if (rule.kind == LabelRule::Kind::attribute_compare)
      ll.exclude_attrs.push_back(rule.attribute);
  }
  for (const auto& t : ll.traces) {
    for (const auto& e : t.events) {
      ll.activities.insert(e.activity);
      for (const auto& [name, v] : e.attributes) ll.attributes.insert(name);
    }
    for (const auto& [name, v] : t.case_attributes) ll.attributes.insert(name);
  }
  return ll;
}

KnowledgeBase load_rules(const std::string& rules_path, const LoadedLog& ll,
                         const TrainOptions& topt) {
  std::vector<RuleSpec> specs;
  if (!rules_path.empty()) {
    std::ifstream in(rules_path, std::ios::binary);
    if (!in) throw ValidationError("cannot open rules file: " + rules_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    specs = parse_rules_or_throw(buf.str(), &ll.activities, &ll.attributes);
  }
  CompileOptions copts;
  copts.guarded_control_flow = topt.guarded_cf;
  copts.strict_is_next = topt.strict_is_next;
  return build_kb(specs, copts);
}

json metrics_json(const MetricSet& m) {
  return {{"accuracy", m.accuracy}, {"f1", m.f1},
          {"macro_f1", m.macro_f1}, {"precision", m.precision},
          {"recall", m.recall},     {"tp", m.tp},
          {"fp", m.fp},             {"tn", m.tn},
          {"fn", m.fn},             {"support_positive", m.support_positive},
          {"support_negative", m.support_negative}};
}

json split_result_json(const std::vector<Trace>& traces, const SplitResult& split) {
  auto ids = [&](const std::vector<std::size_t>& part) {
    json arr = json::array();
    for (std::size_t idx : part) arr.push_back(traces[idx].case_id);
    return arr;
  };
  return {{"train_cases", ids(split.train)},
          {"validation_cases", ids(split.validation)},
          {"test_cases", ids(split.test)},
          {"train_compliant_fraction", split.train_compliant_fraction},
          {"test_compliant_fraction", split.test_compliant_fraction},
          {"moved_for_enrichment", split.moved_for_enrichment}};
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_train(const LogOptions& lopt, const SplitOptions& sopt, const ModelOptions& mopt,
              const TrainOptions& topt, const std::string& rules_path,
              const std::string& out_dir) {
  TrainConfig cfg = make_train_config(topt, mopt, sopt);
  if (rules_path.empty() &&
      (cfg.variant == Variant::two_stage || cfg.variant == Variant::ltn_nop))
    throw ValidationError("variant '" + variant_str(cfg.variant) +
                          "' needs --rules; use --variant ltn-data to train on "
                          "data axioms only");

  LoadedLog ll = load_and_label(lopt);
  KnowledgeBase kb = load_rules(rules_path, ll, topt);
  SplitSpec split_spec = make_split_spec(sopt);

  SplitResult split =
      split_spec.mode == SplitMode::temporal
          ? temporal_split(ll.traces, split_spec)
          : compliance_aware_split(ll.traces, split_spec, kb,
                                   Rng(cfg.seed).split(0x73706c6974ULL));

  auto train_prefixes = generate_prefixes(ll.traces, split.train,
                                          split_spec.min_prefix_len,
                                          split_spec.max_prefix_len);
  auto val_prefixes = generate_prefixes(ll.traces, split.validation,
                                        split_spec.min_prefix_len,
                                        split_spec.max_prefix_len);
  auto test_prefixes = generate_prefixes(ll.traces, split.test,
                                         split_spec.min_prefix_len,
                                         split_spec.max_prefix_len);
  auto schema = EncodingSchema::fit(train_prefixes, cfg.encoder.time_features,
                                    ll.exclude_attrs);

  std::cout << "traces: " << ll.traces.size() << " (" << ll.counts.positives
            << " positive / " << ll.counts.negatives << " negative), prefixes: "
            << train_prefixes.size() << " train / " << val_prefixes.size()
            << " val / " << test_prefixes.size() << " test\n";
  if (!kb.k_p.empty()) std::cout << "knowledge axioms: " << kb.k_p.size() << "\n";

  Trainer trainer(train_prefixes, val_prefixes, schema, kb, cfg);
  TrainOutput out = trainer.run();

  fs::create_directories(out_dir);
  save_checkpoint((fs::path(out_dir) / "checkpoint.json").string(),
                  {cfg.encoder, schema, out.params});
  write_satisfaction_csv((fs::path(out_dir) / "satisfaction.csv").string(), out.sat_log);
  if (cfg.variant == Variant::two_stage) {
    write_pruning_report((fs::path(out_dir) / "pruning_report.json").string(),
                         out.gating, out.tau_used, cfg.lambda);
    write_gating_csv((fs::path(out_dir) / "gating.csv").string(), out.gating);
    std::cout << "tau: " << out.tau_used << ", kept " << out.kb.k_p_pruned.size()
              << "/" << out.kb.k_p.size() << " knowledge axioms\n";
  }
  write_json_file(fs::path(out_dir) / "split.json", split_result_json(ll.traces, split));

  json mj;
  if (!test_prefixes.empty()) {
    std::vector<double> preds = trainer.predict(test_prefixes);
    std::vector<int> labels(test_prefixes.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
      labels[i] = test_prefixes[i].label() == Label::positive ? 1 : 0;
    MetricSet m = compute_metrics(preds, labels);
    mj = metrics_json(m);
    std::cout << "test accuracy " << m.accuracy << ", f1 " << m.f1 << "\n";
  }
  write_json_file(fs::path(out_dir) / "metrics.json", mj);

  json resolved = train_json(cfg);
  resolved["split"] = split_json(sopt, split_spec);
  resolved["labeler"] = lopt.labeler;
  std::vector<std::string> inputs{lopt.log_path};
  if (!rules_path.empty()) inputs.push_back(rules_path);
  write_manifest(out_dir, "train", resolved, inputs);
  return 0;
}

int cmd_evaluate(const LogOptions& lopt, const SplitOptions& sopt,
                 const std::string& checkpoint_path, const std::string& rules_path,
                 const TrainOptions& topt, const std::string& out_dir) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  LoadedLog ll = load_and_label(lopt);
  SplitSpec split_spec = make_split_spec(sopt);

  std::vector<Prefix> eval_prefixes;
  json split_info;
  if (sopt.mode == "all") {
    eval_prefixes = generate_prefixes(ll.traces, split_spec.min_prefix_len,
                                      split_spec.max_prefix_len);
  } else {
    KnowledgeBase kb = load_rules(rules_path, ll, topt);
    SplitResult split =
        split_spec.mode == SplitMode::temporal
            ? temporal_split(ll.traces, split_spec)
            : compliance_aware_split(ll.traces, split_spec, kb,
                                     Rng(topt.seed).split(0x73706c6974ULL));
    eval_prefixes = generate_prefixes(ll.traces, split.test, split_spec.min_prefix_len,
                                      split_spec.max_prefix_len);
    split_info = split_result_json(ll.traces, split);
  }
  if (eval_prefixes.empty()) throw ValidationError("no prefixes to evaluate");

  std::vector<double> preds;
  preds.reserve(eval_prefixes.size());
  const std::size_t batch = 64;
  for (std::size_t start = 0; start < eval_prefixes.size(); start += batch) {
    std::size_t end = std::min(eval_prefixes.size(), start + batch);
    std::vector<std::size_t> subset;
    for (std::size_t i = start; i < end; ++i) subset.push_back(i);
    auto enc = encode_batch(eval_prefixes, subset, ckpt.schema);
    auto out = predicate_forward(enc, ckpt.params, ckpt.config, ckpt.schema);
    preds.insert(preds.end(), out.values().begin(), out.values().end());
  }
  std::vector<int> labels(eval_prefixes.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i] = eval_prefixes[i].label() == Label::positive ? 1 : 0;
  MetricSet m = compute_metrics(preds, labels);
  std::cout << "accuracy " << m.accuracy << ", f1 " << m.f1 << " over "
            << eval_prefixes.size() << " prefixes\n";

  fs::create_directories(out_dir);
  json mj = metrics_json(m);
  if (!split_info.is_null()) mj["split"] = split_info;
  write_json_file(fs::path(out_dir) / "metrics.json", mj);
  json resolved{{"checkpoint", checkpoint_path},
                {"split", sopt.mode},
                {"labeler", lopt.labeler}};
  std::vector<std::string> inputs{lopt.log_path, checkpoint_path};
  if (!rules_path.empty()) inputs.push_back(rules_path);
  write_manifest(out_dir, "evaluate", resolved, inputs);
  return 0;
}

int cmd_experiment(const LogOptions& lopt, const SplitOptions& sopt,
                   const ModelOptions& mopt, const TrainOptions& topt,
                   const std::string& rules_path, const std::string& variants_csv,
                   const std::string& seeds_arg, std::size_t jobs, bool single_prefix,
                   const std::string& dataset_name, const std::string& out_dir) {
  LoadedLog ll = load_and_label(lopt);
  KnowledgeBase kb = load_rules(rules_path, ll, topt);

  ExperimentConfig cfg;
  cfg.split = make_split_spec(sopt);
  cfg.base = make_train_config(topt, mopt, sopt);
  cfg.exclude_attrs = ll.exclude_attrs;
  cfg.jobs = jobs;
  cfg.single_prefix_per_trace = single_prefix;

  std::stringstream vs(variants_csv);
  std::string tok;
  while (std::getline(vs, tok, ','))
    if (!tok.empty()) cfg.variants.push_back(parse_variant(tok));
  if (cfg.variants.empty()) throw ValidationError("--variants is empty");

  cfg.seeds.clear();
  if (seeds_arg.find(',') != std::string::npos) {
    std::stringstream ss(seeds_arg);
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) cfg.seeds.push_back(std::stoull(tok));
  } else {
    std::size_t n = std::stoull(seeds_arg);
    for (std::size_t s = 1; s <= n; ++s) cfg.seeds.push_back(s);
  }
  if (cfg.seeds.empty()) throw ValidationError("--seeds is empty");

  bool needs_rules = false;
  for (Variant v : cfg.variants)
    needs_rules = needs_rules || v == Variant::two_stage || v == Variant::ltn_nop;
  if (needs_rules && kb.k_p.empty())
    throw ValidationError(
        "two-stage / ltn-nop variants need --rules with at least one rule");

  ExperimentReport report = run_experiment(ll.traces, kb, cfg);

  fs::create_directories(out_dir);
  write_experiment_csv((fs::path(out_dir) / "experiment.csv").string(), report,
                       dataset_name);
  write_experiment_json((fs::path(out_dir) / "experiment.json").string(), report,
                        dataset_name);

  json resolved = train_json(cfg.base);
  resolved["split"] = split_json(sopt, cfg.split);
  resolved["labeler"] = lopt.labeler;
  resolved["variants"] = variants_csv;
  resolved["seeds"] = cfg.seeds;
  resolved["jobs"] = jobs;
  std::vector<std::string> inputs{lopt.log_path};
  if (!rules_path.empty()) inputs.push_back(rules_path);
  write_manifest(out_dir, "experiment", resolved, inputs);

  for (const auto& s : report.summaries)
    std::cout << variant_str(s.variant) << ": accuracy " << s.accuracy_mean << " +- "
              << s.accuracy_std << ", f1 " << s.f1_mean << " +- " << s.f1_std << " ("
              << s.completed << " runs)\n";
  for (const auto& r : report.runs)
    if (!r.ok)
      std::cout << "run " << variant_str(r.variant) << "/seed " << r.seed
                << " failed: " << r.error << "\n";
  return 0;
}

int cmd_synth(const SynthSpec& spec, std::uint64_t seed, const std::string& out_dir) {
  SynthResult synth = generate_synthetic_log(spec, seed);
  fs::create_directories(out_dir);
  write_log_csv((fs::path(out_dir) / "log.csv").string(), synth.traces);
  auto write_text = [&](const char* name, const std::string& text) {
    std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
    if (!out) throw RuntimeFailure(std::string("cannot write ") + name);
    out << text;
  };
  write_text("rules_true.txt", synth.rules_dsl);
  write_text("rules_adversarial.txt", synth.adversarial_rules_dsl);
  write_text("rules_compliance.txt", synth.compliance_rules_dsl);

  std::size_t positives = 0;
  for (const auto& t : synth.traces)
    if (t.label == Label::positive) ++positives;
  std::cout << "wrote " << synth.traces.size() << " traces (" << positives
            << " positive) and " << synth.planted_rule_ids.size()
            << " planted rules to " << out_dir << "\n";

  json resolved{{"traces", spec.n_traces},
                {"planted_rules", spec.planted_rules},
                {"fire_prob", spec.fire_prob},
                {"label_noise", spec.label_noise},
                {"marker_prob", spec.marker_prob},
                {"noncompliant_label_noise", spec.noncompliant_label_noise},
                {"min_len", spec.min_len},
                {"max_len", spec.max_len},
                {"seed", seed}};
  write_manifest(out_dir, "synth", resolved, {});
  return 0;
}

int cmd_suggest(const LogOptions& lopt, double min_support, std::size_t max_rules,
                const std::string& out_path) {
  LoadedLog ll = load_and_label(lopt);
  auto suggestions = suggest_rules(ll.traces, min_support, max_rules);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) throw RuntimeFailure("cannot write " + out_path);
    out = &file;
  }
  (*out) << "# heuristic frequency scan, support threshold " << min_support << "\n";
  for (const auto& s : suggestions) {
    char line[512];
    std::snprintf(line, sizeof line, "%s  # support=%.4f activations=%zu\n",
                  s.dsl.c_str(), s.support, s.activations);
    (*out) << line;
  }
  if (!out_path.empty())
    std::cout << "wrote " << suggestions.size() << " candidates to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neuro-symbolic outcome prediction on event logs"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key-value config file with [train]/[experiment] sections; "
                 "flags override file values");

  LogOptions lopt;
  SplitOptions sopt;
  ModelOptions mopt;
  TrainOptions topt;
  std::string rules_path, out_dir = "out", checkpoint_path;
  std::string variants_csv = "bce,ltn-data,ltn-nop,two-stage";
  std::string seeds_arg = "5";
  std::string dataset_name = "log";
  std::size_t jobs = 1;
  bool single_prefix = false;

  auto* train = app.add_subcommand("train", "train one variant end to end");
  add_log_options(train, lopt);
  add_split_options(train, sopt);
  add_model_options(train, mopt);
  add_train_options(train, topt);
  train->add_option("--rules", rules_path, "rule DSL file");
  train->add_option("--out", out_dir, "output directory");

  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a split");
  add_log_options(evaluate, lopt);
  add_split_options(evaluate, sopt);
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint.json")->required();
  evaluate->add_option("--rules", rules_path, "rule DSL file (compliance split)");
  evaluate->add_option("--seed", topt.seed, "split seed (compliance split)");
  evaluate->add_option("--out", out_dir, "output directory");

  auto* experiment =
      app.add_subcommand("experiment", "multi-variant multi-seed benchmark matrix");
  add_log_options(experiment, lopt);
  add_split_options(experiment, sopt);
  add_model_options(experiment, mopt);
  add_train_options(experiment, topt);
  experiment->add_option("--rules", rules_path, "rule DSL file");
  experiment->add_option("--variants", variants_csv, "comma-separated variant list");
  experiment->add_option("--seeds", seeds_arg, "seed count N (1..N) or explicit list");
  experiment->add_option("--jobs", jobs, "parallel workers");
  experiment->add_option("--dataset-name", dataset_name, "name in the summary table");
  experiment->add_flag("--single-prefix", single_prefix,
                       "evaluate one prefix per test trace instead of all prefixes");
  experiment->add_option("--out", out_dir, "output directory");

  SynthSpec synth_spec;
  std::uint64_t synth_seed = 7;
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled log");
  synth->add_option("--traces", synth_spec.n_traces, "trace count");
  synth->add_option("--planted-rules", synth_spec.planted_rules, "planted rules (1-3)");
  synth->add_option("--fire-prob", synth_spec.fire_prob, "antecedent firing probability");
  synth->add_option("--noise", synth_spec.label_noise, "label flip probability");
  synth->add_option("--min-len", synth_spec.min_len, "min trace length");
  synth->add_option("--max-len", synth_spec.max_len, "max trace length");
  synth->add_option("--marker-prob", synth_spec.marker_prob,
                    "compliance marker probability (negative disables)");
  synth->add_option("--nc-noise", synth_spec.noncompliant_label_noise,
                    "label noise on unmarked traces");
  synth->add_option("--fillers", synth_spec.n_filler_activities, "filler activity count");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", out_dir, "output directory");

  double min_support = 0.9;
  std::size_t max_rules = 30;
  std::string suggest_out;
  auto* suggest = app.add_subcommand(
      "suggest", "frequency-scan candidate Declare rules from a log");
  add_log_options(suggest, lopt, /*need_labeler=*/false);
  suggest->add_option("--min-support", min_support, "support threshold");
  suggest->add_option("--max-rules", max_rules, "cap on emitted rules");
  suggest->add_option("--out", suggest_out, "write rules here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(lopt, sopt, mopt, topt, rules_path, out_dir);
    if (evaluate->parsed())
      return cmd_evaluate(lopt, sopt, checkpoint_path, rules_path, topt, out_dir);
    if (experiment->parsed())
      return cmd_experiment(lopt, sopt, mopt, topt, rules_path, variants_csv, seeds_arg,
                            jobs, single_prefix, dataset_name, out_dir);
    if (synth->parsed()) return cmd_synth(synth_spec, synth_seed, out_dir);
    if (suggest->parsed()) return cmd_suggest(lopt, min_support, max_rules, suggest_out);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
