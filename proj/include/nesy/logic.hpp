#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nesy/compare.hpp"
#include "nesy/eventlog.hpp"
#include "nesy/features.hpp"
#include "nesy/tensor.hpp"

namespace nesy {

// Truth tensors are plain tensors whose values live in [0,1]; predicate
// outputs are clamped to [TRUTH_EPS, 1-TRUTH_EPS] before entering log/pow.
using TruthTensor = Tensor;

inline constexpr double TRUTH_EPS = 1e-6;

enum class DomainSelector { all, positive_class, negative_class };

std::string domain_var(DomainSelector d);  // "l", "l+", "l-"

// Fuzzy first-order formula. Quantifiers may appear only as the outermost
// node; bodies are quantifier-free.
struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  enum class Kind {
    predicate,      // the learned predicate P(l)
    bool_feature,   // crisp boolean feature atom, e.g. HasAct(l,Rev)
    comparison,     // feature <op> constant, e.g. WaitTime(l,a,b) > 2
    negation,
    conjunction,
    disjunction,
    implication,
    biconditional,
    forall,
    exists,
  };

  Kind kind;
  FeatureCall feature;              // bool_feature / comparison
  CompareOp op = CompareOp::GT;     // comparison
  double constant = 0.0;            // comparison
  DomainSelector domain = DomainSelector::all;  // forall / exists
  std::vector<FormulaPtr> children;

  static FormulaPtr predicate();
  static FormulaPtr atom(FeatureCall feature);
  static FormulaPtr comparison(FeatureCall feature, CompareOp op, double constant);
  static FormulaPtr negate(FormulaPtr f);
  static FormulaPtr conj(FormulaPtr a, FormulaPtr b);
  static FormulaPtr disj(FormulaPtr a, FormulaPtr b);
  static FormulaPtr implies(FormulaPtr a, FormulaPtr b);
  static FormulaPtr iff(FormulaPtr a, FormulaPtr b);
  static FormulaPtr forall(DomainSelector d, FormulaPtr body);
  static FormulaPtr exists(DomainSelector d, FormulaPtr body);

  bool is_quantifier() const { return kind == Kind::forall || kind == Kind::exists; }
  bool mentions_predicate() const;
};

bool structurally_equal(const Formula& a, const Formula& b);
std::string to_string(const Formula& f);

struct Axiom {
  enum class Partition { data, knowledge };
  enum class Provenance { control_flow, temporal, payload, data };

  std::string id;
  FormulaPtr formula;
  Partition partition = Partition::knowledge;
  Provenance provenance = Provenance::control_flow;
};

// -- fuzzy operator semantics -------------------------------------------------

// Differentiable connective family over equal-shape truth tensors.
class FuzzySemantics {
 public:
  virtual ~FuzzySemantics() = default;
  virtual std::string name() const = 0;
  virtual Tensor neg(const Tensor& a) const = 0;
  virtual Tensor conj(const Tensor& a, const Tensor& b) const = 0;
  virtual Tensor disj(const Tensor& a, const Tensor& b) const = 0;
  virtual Tensor implies(const Tensor& a, const Tensor& b) const = 0;
  virtual Tensor iff(const Tensor& a, const Tensor& b) const;
};

// Product t-norm with Reichenbach implication (default).
const FuzzySemantics& product_semantics();
const FuzzySemantics& lukasiewicz_semantics();
const FuzzySemantics& godel_semantics();
const FuzzySemantics& semantics_by_name(const std::string& name);

Tensor eval_connective(Formula::Kind kind, const FuzzySemantics& sem,
                       const std::vector<Tensor>& operands);

// -- quantifier aggregators ---------------------------------------------------

// pMean(u; p)      = (1/n * sum u_i^p)^(1/p)          (exists)
// pMeanError(u; p) = 1 - (1/n * sum (1-u_i)^p)^(1/p)  (forall)
// Fused ops: gradients stay finite at the all-0 / all-1 corners where the
// generic pow-chain would produce inf * 0.
Tensor p_mean(const Tensor& u, double p);
Tensor p_mean_error(const Tensor& u, double p);

// -- grounding ----------------------------------------------------------------

// Per-dataset memo of crisp feature evaluations; grounding the same axioms
// epoch after epoch then costs one gather instead of a feature scan.
class FeatureCache {
 public:
  explicit FeatureCache(std::vector<Prefix> dataset) : dataset_(std::move(dataset)) {}
  const std::vector<Prefix>& dataset() const { return dataset_; }
  const FeatureValue& get(const FeatureCall& call, std::size_t index) const;

 private:
  std::vector<Prefix> dataset_;
  mutable std::unordered_map<std::string, std::vector<FeatureValue>> memo_;
};

struct LogicConfig {
  const FuzzySemantics* semantics = &product_semantics();
  double p_forall = 2.0;
  double p_exists = 2.0;
  double p_sat = 2.0;  // SatAgg exponent
  // Optional smooth comparison atoms sigma((f-c)/T) for sensitivity studies;
  // default is crisp {0,1} evaluation.
  bool smooth_comparisons = false;
  double comparison_temperature = 1.0;
};

struct GroundBatch {
  std::vector<Prefix> prefixes;
  std::vector<int> labels;                   // 0/1 aligned with prefixes
  Tensor predicate;                          // [B] clamped truth degrees
  const FeatureCache* cache = nullptr;       // optional
  std::vector<std::size_t> dataset_indices;  // cache coordinates, if cache set
};

struct GroundResult {
  Tensor per_sample;   // quantifier-stripped body truths over the domain
  Tensor aggregated;   // scalar satisfaction of the axiom
  std::size_t n_selected = 0;
};

std::vector<std::size_t> domain_indices(DomainSelector d, const std::vector<int>& labels);

// Grounds one axiom over a batch. Returns nullopt when the quantifier
// domain matches no sample (vacuous batch): the axiom is skipped rather
// than counted as satisfied.
std::optional<GroundResult> ground_formula(const Axiom& axiom, const GroundBatch& batch,
                                           const LogicConfig& cfg);

// pMeanError aggregation of per-axiom satisfactions; throws when empty.
Tensor sat_agg(const std::vector<Tensor>& axiom_sats, double p);

}  // namespace nesy
