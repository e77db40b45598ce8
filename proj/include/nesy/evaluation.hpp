#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nesy/eventlog.hpp"
#include "nesy/metrics.hpp"
#include "nesy/rules.hpp"
#include "nesy/training.hpp"

namespace nesy {

// -- synthetic log generation -------------------------------------------------

// Desk-scale generator: trace labels are a stochastic function of planted
// rule antecedents, and the true rule set is returned so experiments can
// inject correct, redundant, and adversarial (label-inverted) rules.
struct SynthSpec {
  std::size_t n_traces = 500;
  std::size_t n_filler_activities = 6;
  std::size_t min_len = 4;
  std::size_t max_len = 10;
  std::size_t planted_rules = 2;  // cycles wait_time / payload / occ_count
  double fire_prob = 0.45;        // per-rule antecedent firing probability
  double label_noise = 0.0;       // flip probability after the rule OR

  // Compliance scenario: when marker_prob >= 0, traces carry the marker
  // activity with this probability; marked traces keep exactly the
  // rule-implied label while unmarked traces are flipped with
  // noncompliant_label_noise instead of label_noise.
  double marker_prob = -1.0;
  double noncompliant_label_noise = -1.0;

  void validate() const;
};

struct SynthResult {
  std::vector<Trace> traces;
  std::vector<std::string> activities;
  std::string rules_dsl;              // the planted (correct) rules
  std::string adversarial_rules_dsl;  // same antecedents, inverted consequent
  std::string compliance_rules_dsl;   // planted rules + existence(marker)
  std::vector<std::string> planted_rule_ids;
  std::vector<std::string> adversarial_rule_ids;
};

SynthResult generate_synthetic_log(const SynthSpec& spec, std::uint64_t seed);

// Writes case_id, activity, timestamp, attribute columns and a per-case
// `outcome` column (1/0).
void write_log_csv(const std::string& path, const std::vector<Trace>& traces);

// -- experiment harness -------------------------------------------------------

struct ExperimentConfig {
  std::vector<Variant> variants;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  SplitSpec split;
  TrainConfig base;  // variant and seed are overwritten per run
  std::vector<std::string> exclude_attrs;  // kept away from the encoder
  bool single_prefix_per_trace = false;    // evaluate all prefixes by default
  std::size_t jobs = 1;
};

struct RunRecord {
  Variant variant = Variant::two_stage;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricSet test_metrics;
  double tau_used = 0.0;
  std::vector<GatingRecord> gating;
  double train_compliant_fraction = 0.0;
  double test_compliant_fraction = 0.0;
};

struct VariantSummary {
  Variant variant = Variant::two_stage;
  std::size_t completed = 0;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double f1_mean = 0.0, f1_std = 0.0;
};

struct ExperimentReport {
  std::vector<RunRecord> runs;          // variant-major, seed-minor order
  std::vector<VariantSummary> summaries;
};

// For each seed: one split shared by every variant; then (variant, seed)
// runs fan out over a bounded worker pool. A failed run is recorded and the
// rest continue.
ExperimentReport run_experiment(const std::vector<Trace>& traces, const KnowledgeBase& kb,
                                const ExperimentConfig& cfg);

// Summary table shaped variant x {accuracy, f1} mean/std.
void write_experiment_csv(const std::string& path, const ExperimentReport& report,
                          const std::string& dataset_name);
void write_experiment_json(const std::string& path, const ExperimentReport& report,
                           const std::string& dataset_name);
void write_gating_csv(const std::string& path, const std::vector<GatingRecord>& records);

}  // namespace nesy
