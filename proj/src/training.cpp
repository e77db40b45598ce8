#include "nesy/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "nesy/error.hpp"
#include "nesy/metrics.hpp"

namespace nesy {

using nlohmann::json;

std::string variant_str(Variant v) {
  switch (v) {
    case Variant::bce_baseline: return "bce";
    case Variant::ltn_data: return "ltn-data";
    case Variant::ltn_nop: return "ltn-nop";
    case Variant::two_stage: return "two-stage";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "bce" || s == "bce-baseline") return Variant::bce_baseline;
  if (s == "ltn-data") return Variant::ltn_data;
  if (s == "ltn-nop") return Variant::ltn_nop;
  if (s == "two-stage") return Variant::two_stage;
  throw ValidationError("unknown variant '" + s +
                        "' (expected bce, ltn-data, ltn-nop or two-stage)");
}

void TrainConfig::validate() const {
  if (std::abs(alpha + beta - 1.0) > 1e-12)
    throw ValidationError("alpha + beta must equal 1 (got " + std::to_string(alpha) +
                          " + " + std::to_string(beta) + ")");
  if (alpha < 0.0 || beta < 0.0) throw ValidationError("alpha and beta must be >= 0");
  if (variant == Variant::two_stage && (epochs_pretrain < 1 || epochs_finetune < 1))
    throw ValidationError("two-stage training needs E_p >= 1 and E_f >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (aggregator_p < 1.0) throw ValidationError("aggregator exponent p must be >= 1");
  if (lr <= 0.0) throw ValidationError("learning rate must be positive");
  if (variant == Variant::two_stage && !tau && tau_grid.empty())
    throw ValidationError("tau selection needs a non-empty candidate grid");
}

LogicConfig TrainConfig::logic() const {
  LogicConfig lc;
  lc.semantics = &semantics_by_name(semantics);
  lc.p_forall = aggregator_p;
  lc.p_exists = aggregator_p;
  lc.p_sat = aggregator_p;
  lc.smooth_comparisons = smooth_comparisons;
  lc.comparison_temperature = comparison_temperature;
  return lc;
}

Trainer::Trainer(std::vector<Prefix> train, std::vector<Prefix> validation,
                 EncodingSchema schema, KnowledgeBase kb, TrainConfig cfg)
    : train_(std::move(train)),
      val_(std::move(validation)),
      schema_(std::move(schema)),
      kb_(std::move(kb)),
      cfg_(std::move(cfg)),
      train_cache_(train_),
      val_cache_(val_),
      params_(init_params(cfg_.encoder, schema_, cfg_.seed)),
      rng_(Rng(cfg_.seed).split(0x747261696eULL)) {
  cfg_.validate();
  if (train_.empty()) throw ValidationError("training set has no prefixes");
  perm_.resize(train_.size());
  for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = i;
}

GroundBatch Trainer::make_ground_batch(const std::vector<Prefix>& dataset,
                                       const FeatureCache& cache,
                                       const std::vector<std::size_t>& subset) {
  EncodedBatch enc = encode_batch(dataset, subset, schema_);
  GroundBatch gb;
  gb.prefixes.reserve(subset.size());
  for (std::size_t idx : subset) gb.prefixes.push_back(dataset[idx]);
  gb.labels = enc.labels;
  gb.predicate = predicate_forward(enc, params_, cfg_.encoder, schema_);
  gb.cache = &cache;
  gb.dataset_indices = subset;
  return gb;
}

namespace {

// Grounds each axiom, skipping vacuous batches; nullopt when none evaluable.
std::optional<Tensor> sat_agg_over(const std::vector<const Axiom*>& axioms,
                                   const GroundBatch& batch, const LogicConfig& lc,
                                   double p,
                                   std::vector<std::pair<std::string, double>>* sats_out) {
  std::vector<Tensor> sats;
  for (const Axiom* axiom : axioms) {
    auto res = ground_formula(*axiom, batch, lc);
    if (!res) continue;
    sats.push_back(res->aggregated);
    if (sats_out) sats_out->emplace_back(axiom->id, res->aggregated.item());
  }
  if (sats.empty()) return std::nullopt;
  return sat_agg(sats, p);
}

std::vector<const Axiom*> pointers(const std::vector<Axiom>& axioms) {
  std::vector<const Axiom*> out;
  out.reserve(axioms.size());
  for (const auto& a : axioms) out.push_back(&a);
  return out;
}

}  // namespace

Tensor Trainer::weighted_loss(const GroundBatch& batch, double alpha, double beta,
                              const std::vector<Axiom>& active_kp) {
  LogicConfig lc = cfg_.logic();
  auto sat_d = sat_agg_over(pointers(kb_.k_data), batch, lc, cfg_.aggregator_p, nullptr);
  if (!sat_d) throw RuntimeFailure("no data axiom evaluable on batch");
  auto sat_p = sat_agg_over(pointers(active_kp), batch, lc, cfg_.aggregator_p, nullptr);
  if (!sat_p) return 1.0 - *sat_d;
  return 1.0 - (Tensor::scalar(alpha) * *sat_d + Tensor::scalar(beta) * *sat_p);
}

Tensor Trainer::joint_loss(const GroundBatch& batch, const std::vector<Axiom>& active_kp) {
  LogicConfig lc = cfg_.logic();
  std::vector<const Axiom*> all = pointers(kb_.k_data);
  for (const auto& a : active_kp) all.push_back(&a);
  auto sat = sat_agg_over(all, batch, lc, cfg_.aggregator_p, nullptr);
  if (!sat) throw RuntimeFailure("no axiom evaluable on batch");
  return 1.0 - *sat;
}

Tensor Trainer::bce_loss(const GroundBatch& batch) {
  std::vector<double> y(batch.labels.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = batch.labels[i];
  Tensor labels = Tensor::vector(std::move(y));
  Tensor ll = labels * log(batch.predicate) +
              (1.0 - labels) * log(1.0 - batch.predicate);
  return neg(mean(ll));
}

void Trainer::run_epochs(std::size_t n, LossMode mode, const std::vector<Axiom>& active_kp,
                         double alpha, double beta, bool log_sats) {
  LogicConfig lc = cfg_.logic();
  std::vector<std::size_t>& order = perm_;

  for (std::size_t e = 0; e < n; ++e) {
    Params epoch_start = params_.clone();
    rng_.shuffle(order);
    std::map<std::string, std::pair<double, std::size_t>> sat_acc;
    double loss_sum = 0.0;
    std::size_t n_batches = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg_.batch_size);
      std::vector<std::size_t> subset(order.begin() + start, order.begin() + end);
      GroundBatch gb = make_ground_batch(train_, train_cache_, subset);

      std::vector<std::pair<std::string, double>> sats;
      Tensor loss;
      if (mode == LossMode::bce) {
        loss = bce_loss(gb);
      } else if (mode == LossMode::weighted) {
        auto sat_d =
            sat_agg_over(pointers(kb_.k_data), gb, lc, cfg_.aggregator_p, &sats);
        if (!sat_d) throw RuntimeFailure("no data axiom evaluable on batch");
        auto sat_p = sat_agg_over(pointers(active_kp), gb, lc, cfg_.aggregator_p, &sats);
        loss = sat_p ? 1.0 - (Tensor::scalar(alpha) * *sat_d +
                              Tensor::scalar(beta) * *sat_p)
                     : 1.0 - *sat_d;
      } else {
        std::vector<const Axiom*> all = pointers(kb_.k_data);
        for (const auto& a : active_kp) all.push_back(&a);
        auto sat = sat_agg_over(all, gb, lc, cfg_.aggregator_p, &sats);
        if (!sat) throw RuntimeFailure("no axiom evaluable on batch");
        loss = 1.0 - *sat;
      }

      if (!std::isfinite(loss.item())) {
        params_ = std::move(epoch_start);  // keep the last good parameters
        throw RuntimeFailure("non-finite loss at epoch " +
                             std::to_string(epoch_counter_ + 1) +
                             "; aborting with parameters from the last completed epoch");
      }

      backward(loss);
      AdamConfig ac;
      ac.lr = cfg_.lr;
      adam_step(params_.tensors, adam_, ac);
      for (auto& t : params_.tensors) t.zero_grad();

      loss_sum += loss.item();
      ++n_batches;
      for (const auto& [id, sat] : sats) {
        auto& acc = sat_acc[id];
        acc.first += sat;
        acc.second += 1;
      }
    }

    ++epoch_counter_;
    if (log_sats) {
      epoch_losses_.push_back(loss_sum / static_cast<double>(n_batches));
      for (const auto& [id, acc] : sat_acc)
        sat_log_.push_back({epoch_counter_, id, acc.first / static_cast<double>(acc.second)});
    }
  }
}

std::vector<GatingRecord> Trainer::compute_gating(double lambda) {
  std::vector<GatingRecord> records(kb_.k_p.size());
  for (std::size_t i = 0; i < kb_.k_p.size(); ++i) records[i].rule_id = kb_.k_p[i].id;

  LogicConfig lc = cfg_.logic();
  for (std::size_t start = 0; start < val_.size(); start += cfg_.batch_size) {
    std::size_t end = std::min(val_.size(), start + cfg_.batch_size);
    std::vector<std::size_t> subset;
    for (std::size_t i = start; i < end; ++i) subset.push_back(i);
    GroundBatch gb = make_ground_batch(val_, val_cache_, subset);
    for (std::size_t i = 0; i < kb_.k_p.size(); ++i) {
      auto res = ground_formula(kb_.k_p[i], gb, lc);
      if (!res) continue;
      const auto& vals = res->per_sample.values();
      records[i].samples.insert(records[i].samples.end(), vals.begin(), vals.end());
    }
  }

  for (auto& rec : records) {
    rec.n_samples = rec.samples.size();
    if (rec.samples.empty()) {
      rec.vacuous = true;  // no applicable sample: scores zero, gets pruned
      rec.score = 0.0;
      continue;
    }
    const double n = static_cast<double>(rec.samples.size());
    double mean = 0.0;
    for (double s : rec.samples) mean += s;
    mean /= n;
    double var = 0.0;
    for (double s : rec.samples) var += (s - mean) * (s - mean);
    var /= n;
    rec.mean_sat = mean;
    rec.var_sat = var;
    rec.score = gating_score(mean, var, lambda);
  }
  return records;
}

std::vector<Axiom> Trainer::prune(const std::vector<Axiom>& k_p,
                                  std::vector<GatingRecord>& records, double tau) {
  if (records.size() != k_p.size())
    throw ValidationError("gating records do not match the knowledge axioms");
  std::vector<Axiom> kept;
  for (std::size_t i = 0; i < k_p.size(); ++i) {
    records[i].kept = records[i].score >= tau;  // boundary g = tau is kept
    if (records[i].kept) kept.push_back(k_p[i]);
  }
  return kept;
}

Trainer::Snapshot Trainer::snapshot() const {
  return Snapshot{params_.clone(), adam_, rng_, perm_};
}

void Trainer::restore(const Snapshot& snap) {
  params_ = snap.params.clone();
  adam_ = snap.adam;
  rng_ = snap.rng;
  perm_ = snap.perm;
}

double Trainer::validation_f1() {
  if (val_.empty()) throw ValidationError("validation set is empty");
  std::vector<double> preds = predict(val_);
  std::vector<int> labels(val_.size());
  for (std::size_t i = 0; i < val_.size(); ++i)
    labels[i] = val_[i].label() == Label::positive ? 1 : 0;
  return compute_metrics(preds, labels).f1;
}

double Trainer::select_tau(const std::vector<double>& grid,
                           const std::vector<GatingRecord>& records) {
  if (grid.empty()) throw ValidationError("tau grid is empty");
  if (val_.empty())
    throw ValidationError("tau selection requires a validation split");
  std::vector<double> candidates = grid;
  std::sort(candidates.begin(), candidates.end());

  const Snapshot base = snapshot();
  const std::size_t saved_epoch = epoch_counter_;
  const std::size_t short_budget =
      std::max<std::size_t>(5, cfg_.epochs_finetune / 5);

  double best_tau = candidates.front();
  double best_f1 = -1.0;
  for (double tau : candidates) {
    restore(base);
    epoch_counter_ = saved_epoch;
    std::vector<GatingRecord> recs = records;
    std::vector<Axiom> active = prune(kb_.k_p, recs, tau);
    if (cfg_.mode == SplitMode::compliance_aware && cfg_.weighted_finetune_in_compliance_mode)
      run_epochs(short_budget, LossMode::weighted, active, cfg_.alpha, cfg_.beta, false);
    else
      run_epochs(short_budget, LossMode::joint, active, 0.0, 0.0, false);
    double f1 = validation_f1();
    if (f1 >= best_f1) {  // ties resolve to the larger tau
      best_f1 = f1;
      best_tau = tau;
    }
  }
  restore(base);
  epoch_counter_ = saved_epoch;
  return best_tau;
}

std::vector<double> Trainer::predict(const std::vector<Prefix>& prefixes) {
  std::vector<double> out;
  out.reserve(prefixes.size());
  for (std::size_t start = 0; start < prefixes.size(); start += cfg_.batch_size) {
    std::size_t end = std::min(prefixes.size(), start + cfg_.batch_size);
    std::vector<std::size_t> subset;
    for (std::size_t i = start; i < end; ++i) subset.push_back(i);
    EncodedBatch enc = encode_batch(prefixes, subset, schema_);
    Tensor pred = predicate_forward(enc, params_, cfg_.encoder, schema_);
    const auto& v = pred.values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

TrainOutput Trainer::run() {
  cfg_.validate();
  const std::size_t total = cfg_.epochs_pretrain + cfg_.epochs_finetune;

  TrainOutput out;
  switch (cfg_.variant) {
    case Variant::bce_baseline:
      run_epochs(total, LossMode::bce, {}, 0.0, 0.0, true);
      break;
    case Variant::ltn_data:
      run_epochs(total, LossMode::joint, {}, 0.0, 0.0, true);
      break;
    case Variant::ltn_nop:
      // matched budget, unweighted, no pruning
      run_epochs(total, LossMode::joint, kb_.k_p, 0.0, 0.0, true);
      break;
    case Variant::two_stage: {
      run_epochs(cfg_.epochs_pretrain, LossMode::weighted, kb_.k_p, cfg_.alpha,
                 cfg_.beta, true);
      std::vector<GatingRecord> records = compute_gating(cfg_.lambda);
      const double tau = cfg_.tau ? *cfg_.tau : select_tau(cfg_.tau_grid, records);
      std::vector<Axiom> pruned = prune(kb_.k_p, records, tau);
      kb_.k_p_pruned = pruned;
      if (cfg_.mode == SplitMode::compliance_aware &&
          cfg_.weighted_finetune_in_compliance_mode)
        run_epochs(cfg_.epochs_finetune, LossMode::weighted, pruned, cfg_.alpha,
                   cfg_.beta, true);
      else
        run_epochs(cfg_.epochs_finetune, LossMode::joint, pruned, 0.0, 0.0, true);
      out.gating = std::move(records);
      out.tau_used = tau;
      break;
    }
  }

  out.params = params_.clone();
  out.sat_log = sat_log_;
  out.epoch_losses = epoch_losses_;
  out.kb = kb_;
  out.epochs_run = epoch_counter_;
  return out;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_satisfaction_csv(const std::string& path, const std::vector<EpochSatRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write satisfaction log: " + path);
  out << "epoch,axiom_id,mean_sat\n";
  for (const auto& r : rows)
    out << r.epoch << "," << r.axiom_id << "," << fmt_double(r.mean_sat) << "\n";
}

void write_pruning_report(const std::string& path, const std::vector<GatingRecord>& records,
                          double tau, double lambda) {
  json j;
  j["tau"] = tau;
  j["lambda"] = lambda;
  j["rules"] = json::array();
  for (const auto& r : records) {
    j["rules"].push_back({{"rule_id", r.rule_id},
                          {"mean_sat", r.mean_sat},
                          {"var_sat", r.var_sat},
                          {"score", r.score},
                          {"kept", r.kept},
                          {"vacuous", r.vacuous},
                          {"n_samples", r.n_samples}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write pruning report: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace nesy
