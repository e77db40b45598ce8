#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nesy/eventlog.hpp"
#include "nesy/logic.hpp"

namespace nesy {

enum class RuleCategory { control_flow, temporal, payload };
enum class ClassScope { all, positive, negative };
enum class ExpectedEffect { implies_positive, implies_negative, none };

std::string class_scope_str(ClassScope s);

struct RuleCondition {
  FeatureCall feature;
  CompareOp op = CompareOp::GT;
  double constant = 0.0;
};

// One parsed line of the rule DSL: either a Declare-style control-flow
// template or an IF-THEN rule over feature expressions.
struct RuleSpec {
  std::string id;
  RuleCategory category = RuleCategory::control_flow;
  std::size_t line = 0;

  // control-flow template form
  std::string template_name;  // existence, response, chain_response,
                              // precedence, not_coexistence
  std::vector<std::string> args;

  // if-then form
  std::vector<RuleCondition> conditions;
  ClassScope scope = ClassScope::all;
  bool consequent_positive = true;

  ExpectedEffect effect = ExpectedEffect::none;

  bool is_template() const { return !template_name.empty(); }
  std::string to_dsl() const;
};

struct RuleParseResult {
  std::vector<RuleSpec> specs;
  std::vector<std::string> diagnostics;  // "line N: message"

  bool ok() const { return diagnostics.empty(); }
};

// Parses DSL text (one rule per line, '#' comments). When an activity
// alphabet / attribute name set is supplied, unknown names are diagnosed.
RuleParseResult parse_rules(const std::string& source,
                            const std::set<std::string>* activities = nullptr,
                            const std::set<std::string>* attributes = nullptr);

// parse_rules, throwing a ValidationError that lists every diagnostic.
std::vector<RuleSpec> parse_rules_or_throw(const std::string& source,
                                           const std::set<std::string>* activities = nullptr,
                                           const std::set<std::string>* attributes = nullptr);

struct CompileOptions {
  // The control-flow FOL templates conjoin the activation atom
  // (HasAct and Follows); the guarded variant uses an implication instead.
  bool guarded_control_flow = false;
  bool strict_is_next = false;
};

Axiom compile_rule(const RuleSpec& spec, const CompileOptions& opts = {});

struct KnowledgeBase {
  std::vector<Axiom> k_data;      // the two class axioms
  std::vector<Axiom> k_p;         // knowledge axioms, aligned with `specs`
  std::vector<Axiom> k_p_pruned;  // written once by training
  std::vector<RuleSpec> specs;

  const RuleSpec* spec_for(const std::string& axiom_id) const;
};

// K_D = { forall l+ P(l+), forall l- not P(l-) }; compiled knowledge rules
// fill K_P. Zero rules is allowed (data-only baseline).
KnowledgeBase build_kb(const std::vector<RuleSpec>& specs, const CompileOptions& opts = {});

struct ComplianceResult {
  std::vector<std::pair<std::string, bool>> per_rule;
  bool overall = true;
};

// Crisp evaluation of every knowledge rule on the full trace, with the
// predicate atom pinned to the trace's true label.
ComplianceResult crisp_trace_compliance(const Trace& trace, const KnowledgeBase& kb);

// eventlog::compliance_aware_split with the compliance callback bound to
// crisp_trace_compliance over this knowledge base.
SplitResult compliance_aware_split(const std::vector<Trace>& traces, const SplitSpec& spec,
                                   const KnowledgeBase& kb, Rng rng);

// Frequency-based Declare template scan; a heuristic bootstrap for rule
// files, not a mining algorithm.
struct SuggestedRule {
  std::string dsl;
  double support = 0.0;        // satisfied traces / activated traces
  std::size_t activations = 0; // traces where the template is activated
};

std::vector<SuggestedRule> suggest_rules(const std::vector<Trace>& traces,
                                         double min_support, std::size_t max_rules);

}  // namespace nesy
