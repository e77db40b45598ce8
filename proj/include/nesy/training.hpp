#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nesy/eventlog.hpp"
#include "nesy/logic.hpp"
#include "nesy/model.hpp"
#include "nesy/optim.hpp"
#include "nesy/rng.hpp"
#include "nesy/rules.hpp"

namespace nesy {

enum class Variant { bce_baseline, ltn_data, ltn_nop, two_stage };

std::string variant_str(Variant v);
Variant parse_variant(const std::string& s);

struct TrainConfig {
  Variant variant = Variant::two_stage;
  SplitMode mode = SplitMode::temporal;

  // phase-1 weighted loss; alpha + beta must equal 1
  double alpha = 0.8;
  double beta = 0.2;
  std::size_t epochs_pretrain = 5;  // E_p
  std::size_t epochs_finetune = 50; // E_f
  double lambda = 2.0;              // gating variance penalty
  std::optional<double> tau;        // pruning threshold; nullopt = validate
  std::vector<double> tau_grid = {0.0, 0.2, 0.4, 0.6, 0.8};
  double aggregator_p = 2.0;        // quantifier and SatAgg exponent

  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;

  EncoderConfig encoder;
  std::string semantics = "product";
  bool smooth_comparisons = false;
  double comparison_temperature = 1.0;
  // Whether phase 2 in compliance-aware mode keeps the phase-1 alpha/beta
  // weighting rather than switching to the joint loss.
  bool weighted_finetune_in_compliance_mode = true;

  void validate() const;  // throws ValidationError on inconsistencies
  LogicConfig logic() const;
};

// Per-rule satisfaction statistics on the validation set after phase 1.
// score = mean * exp(-lambda * variance), computed analytically.
struct GatingRecord {
  std::string rule_id;
  double mean_sat = 0.0;
  double var_sat = 0.0;
  double score = 0.0;
  bool kept = false;
  bool vacuous = false;           // no applicable validation sample
  std::size_t n_samples = 0;
  std::vector<double> samples;    // logged per-sample body truths
};

struct EpochSatRow {
  std::size_t epoch = 0;  // 1-based, global across phases
  std::string axiom_id;
  double mean_sat = 0.0;
};

struct TrainOutput {
  Params params;
  std::vector<GatingRecord> gating;
  double tau_used = 0.0;
  std::vector<EpochSatRow> sat_log;
  std::vector<double> epoch_losses;  // mean batch loss per epoch
  KnowledgeBase kb;  // k_p_pruned populated for two_stage
  std::size_t epochs_run = 0;
};

// g = mean * exp(-lambda * variance); the analytic rule-quality score.
inline double gating_score(double mean_sat, double var_sat, double lambda) {
  return mean_sat * std::exp(-lambda * var_sat);
}

// One deterministic training run: ltn baselines, BCE baseline, or the
// two-stage optimization (weighted pretraining -> analytic gating-score
// pruning on validation -> fine-tuning on the pruned knowledge base).
class Trainer {
 public:
  Trainer(std::vector<Prefix> train, std::vector<Prefix> validation,
          EncodingSchema schema, KnowledgeBase kb, TrainConfig cfg);

  TrainOutput run();

  // --- building blocks, exposed for tests ---

  // L = 1 - (alpha * SatAgg(K_D) + beta * SatAgg(active K_P)); falls back to
  // 1 - SatAgg(K_D) when no knowledge axiom is evaluable on the batch.
  Tensor weighted_loss(const GroundBatch& batch, double alpha, double beta,
                       const std::vector<Axiom>& active_kp);
  // L = 1 - SatAgg(K_D u active K_P), jointly.
  Tensor joint_loss(const GroundBatch& batch, const std::vector<Axiom>& active_kp);
  Tensor bce_loss(const GroundBatch& batch);

  GroundBatch make_ground_batch(const std::vector<Prefix>& dataset,
                                const FeatureCache& cache,
                                const std::vector<std::size_t>& subset);

  std::vector<GatingRecord> compute_gating(double lambda);
  static std::vector<Axiom> prune(const std::vector<Axiom>& k_p,
                                  std::vector<GatingRecord>& records, double tau);
  double select_tau(const std::vector<double>& grid,
                    const std::vector<GatingRecord>& records);

  std::vector<double> predict(const std::vector<Prefix>& prefixes);

  const Params& params() const { return params_; }
  const EncodingSchema& schema() const { return schema_; }

 private:
  enum class LossMode { bce, weighted, joint };

  struct Snapshot {
    Params params;
    AdamState adam;
    Rng rng;
    std::vector<std::size_t> perm;
  };

  void run_epochs(std::size_t n, LossMode mode, const std::vector<Axiom>& active_kp,
                  double alpha, double beta, bool log_sats);
  Snapshot snapshot() const;
  void restore(const Snapshot& snap);
  double validation_f1();

  std::vector<Prefix> train_;
  std::vector<Prefix> val_;
  EncodingSchema schema_;
  KnowledgeBase kb_;
  TrainConfig cfg_;
  FeatureCache train_cache_;
  FeatureCache val_cache_;
  Params params_;
  AdamState adam_;
  Rng rng_;
  // Batch permutation, reshuffled once per epoch. Trainer state rather than
  // a run_epochs local so that phase boundaries never alter batch order.
  std::vector<std::size_t> perm_;
  std::size_t epoch_counter_ = 0;
  std::vector<EpochSatRow> sat_log_;
  std::vector<double> epoch_losses_;
};

// Artifact writers named by the training contract: per-epoch satisfaction
// CSV (epoch, axiom_id, mean_sat) and the pruning report JSON.
void write_satisfaction_csv(const std::string& path, const std::vector<EpochSatRow>& rows);
void write_pruning_report(const std::string& path, const std::vector<GatingRecord>& records,
                          double tau, double lambda);

}  // namespace nesy
