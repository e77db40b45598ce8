#include "nesy/rules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include "nesy/error.hpp"

namespace nesy {

std::string class_scope_str(ClassScope s) {
  switch (s) {
    case ClassScope::all: return "all";
    case ClassScope::positive: return "positive";
    case ClassScope::negative: return "negative";
  }
  return "all";
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end && *end == '\0' && end != begin;
}

std::vector<std::string> split_args(const std::string& inner) {
  std::vector<std::string> args;
  std::string cur;
  for (char c : inner) {
    if (c == ',') {
      args.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !args.empty()) args.push_back(trim(cur));
  return args;
}

// splits "name(a, b)" -> name, {a, b}
bool parse_call(const std::string& s, std::string& name, std::vector<std::string>& args) {
  std::size_t open = s.find('(');
  if (open == std::string::npos || s.back() != ')') return false;
  name = trim(s.substr(0, open));
  std::string inner = s.substr(open + 1, s.size() - open - 2);
  args = trim(inner).empty() ? std::vector<std::string>{} : split_args(inner);
  return !name.empty();
}

const std::map<std::string, std::size_t>& declare_templates() {
  static const std::map<std::string, std::size_t> t = {
      {"existence", 1},
      {"response", 2},
      {"chain_response", 2},
      {"precedence", 2},
      {"not_coexistence", 2},
  };
  return t;
}

RuleCondition parse_condition(const std::string& text,
                              const std::set<std::string>* activities,
                              const std::set<std::string>* attributes) {
  // <feature_call> <op> <number>
  static const char* ops[] = {">=", "<=", "!=", "==", ">", "<", "="};
  std::size_t op_pos = std::string::npos;
  std::string op_tok;
  for (const char* cand : ops) {
    std::size_t pos = text.find(cand);
    if (pos != std::string::npos && (op_pos == std::string::npos || pos < op_pos ||
                                     (pos == op_pos && std::string(cand).size() > op_tok.size()))) {
      op_pos = pos;
      op_tok = cand;
    }
  }
  if (op_pos == std::string::npos)
    throw ValidationError("expected comparison in feature expression '" + text + "'");
  std::string lhs = trim(text.substr(0, op_pos));
  std::string rhs = trim(text.substr(op_pos + op_tok.size()));

  std::string name;
  std::vector<std::string> args;
  if (!parse_call(lhs, name, args))
    throw ValidationError("malformed feature call '" + lhs + "'");

  RuleCondition cond;
  if (name == "wait_time") {
    if (args.size() != 2) throw ValidationError("wait_time expects 2 activities");
    cond.feature = make_feature_call("wait_time", args);
  } else if (name == "cycle_time") {
    if (!args.empty()) throw ValidationError("cycle_time takes no arguments");
    cond.feature = make_feature_call("cycle_time", {});
  } else if (name == "occ_count") {
    if (args.size() != 1) throw ValidationError("occ_count expects 1 activity");
    cond.feature = make_feature_call("occ_count", args);
  } else if (name == "payload") {
    if (args.size() != 2)
      throw ValidationError("payload expects (attribute, aggregation)");
    PayloadAgg agg = parse_payload_agg(args[1]);
    cond.feature = make_feature_call("payload", {args[0]}, agg);
    if (attributes && !attributes->count(args[0]))
      throw ValidationError("unknown attribute '" + args[0] + "'");
  } else {
    throw ValidationError("unknown feature '" + name +
                          "' (expected wait_time, cycle_time, payload or occ_count)");
  }
  if (activities && name != "payload" && name != "cycle_time")
    for (const auto& a : cond.feature.args)
      if (!activities->count(a))
        throw ValidationError("unknown activity '" + a + "'");

  cond.op = parse_compare_op(op_tok == "==" ? "=" : op_tok);
  if (!parse_number(rhs, cond.constant))
    throw ValidationError("expected numeric constant, got '" + rhs + "'");
  return cond;
}

RuleCategory infer_category(const std::vector<RuleCondition>& conds) {
  bool temporal = false, payload = false;
  for (const auto& c : conds) {
    if (c.feature.name == "wait_time" || c.feature.name == "cycle_time") temporal = true;
    if (c.feature.name == "payload") payload = true;
  }
  if (temporal) return RuleCategory::temporal;
  if (payload) return RuleCategory::payload;
  return RuleCategory::control_flow;
}

RuleSpec parse_line(const std::string& body, const std::set<std::string>* activities,
                    const std::set<std::string>* attributes) {
  RuleSpec spec;
  std::size_t colon = body.find(':');
  if (colon == std::string::npos)
    throw ValidationError("expected '<id>: <rule>'");
  spec.id = trim(body.substr(0, colon));
  if (spec.id.empty()) throw ValidationError("empty rule id");
  std::string rest = trim(body.substr(colon + 1));
  if (rest.empty()) throw ValidationError("empty rule body");

  if (rest.rfind("if ", 0) == 0) {
    std::size_t then_pos = rest.rfind(" then ");
    if (then_pos == std::string::npos)
      throw ValidationError("if-rule is missing ' then '");
    std::string head = rest.substr(3, then_pos - 3);
    std::string consequent = trim(rest.substr(then_pos + 6));
    std::size_t on_pos = head.rfind(" on ");
    if (on_pos == std::string::npos)
      throw ValidationError("if-rule is missing ' on <all|positive|negative> '");
    std::string scope_tok = trim(head.substr(on_pos + 4));
    head = trim(head.substr(0, on_pos));

    if (scope_tok == "all") spec.scope = ClassScope::all;
    else if (scope_tok == "positive") spec.scope = ClassScope::positive;
    else if (scope_tok == "negative") spec.scope = ClassScope::negative;
    else throw ValidationError("unknown class scope '" + scope_tok + "'");

    if (consequent == "P") spec.consequent_positive = true;
    else if (consequent == "not P") spec.consequent_positive = false;
    else throw ValidationError("consequent must be 'P' or 'not P', got '" + consequent + "'");

    // conditions joined by top-level " and "
    std::size_t pos = 0;
    while (true) {
      std::size_t next = head.find(" and ", pos);
      std::string tok =
          next == std::string::npos ? head.substr(pos) : head.substr(pos, next - pos);
      spec.conditions.push_back(parse_condition(trim(tok), activities, attributes));
      if (next == std::string::npos) break;
      pos = next + 5;
    }
    spec.category = infer_category(spec.conditions);
    spec.effect = spec.consequent_positive ? ExpectedEffect::implies_positive
                                           : ExpectedEffect::implies_negative;
    return spec;
  }

  std::string name;
  std::vector<std::string> args;
  if (!parse_call(rest, name, args))
    throw ValidationError("malformed rule '" + rest + "'");
  auto it = declare_templates().find(name);
  if (it == declare_templates().end())
    throw ValidationError("unknown template '" + name + "'");
  if (args.size() != it->second)
    throw ValidationError("template '" + name + "' expects " +
                          std::to_string(it->second) + " argument(s)");
  for (const auto& a : args) {
    if (a.empty()) throw ValidationError("empty activity argument in '" + name + "'");
    if (activities && !activities->count(a))
      throw ValidationError("unknown activity '" + a + "'");
  }
  spec.template_name = name;
  spec.args = args;
  spec.category = RuleCategory::control_flow;
  spec.effect = ExpectedEffect::none;
  return spec;
}

}  // namespace

std::string RuleSpec::to_dsl() const {
  std::ostringstream out;
  out << id << ": ";
  if (is_template()) {
    out << template_name << "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out << ", ";
      out << args[i];
    }
    out << ")";
    return out.str();
  }
  out << "if ";
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    if (i) out << " and ";
    const auto& c = conditions[i];
    out << c.feature.dsl() << " " << compare_op_str(c.op) << " ";
    std::ostringstream num;
    num << c.constant;
    out << num.str();
  }
  out << " on " << class_scope_str(scope) << " then " << (consequent_positive ? "P" : "not P");
  return out.str();
}

RuleParseResult parse_rules(const std::string& source,
                            const std::set<std::string>* activities,
                            const std::set<std::string>* attributes) {
  RuleParseResult result;
  std::set<std::string> seen_ids;
  std::istringstream in(source);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      RuleSpec spec = parse_line(line, activities, attributes);
      spec.line = line_no;
      if (!seen_ids.insert(spec.id).second)
        throw ValidationError("duplicate rule id '" + spec.id + "'");
      result.specs.push_back(std::move(spec));
    } catch (const ValidationError& e) {
      result.diagnostics.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return result;
}

std::vector<RuleSpec> parse_rules_or_throw(const std::string& source,
                                           const std::set<std::string>* activities,
                                           const std::set<std::string>* attributes) {
  RuleParseResult res = parse_rules(source, activities, attributes);
  if (!res.ok()) {
    std::string msg = "rule file has " + std::to_string(res.diagnostics.size()) +
                      " error(s):";
    for (const auto& d : res.diagnostics) msg += "\n  " + d;
    throw ValidationError(msg);
  }
  return std::move(res.specs);
}

Axiom compile_rule(const RuleSpec& spec, const CompileOptions& opts) {
  Axiom axiom;
  axiom.id = spec.id;
  axiom.partition = Axiom::Partition::knowledge;
  switch (spec.category) {
    case RuleCategory::control_flow: axiom.provenance = Axiom::Provenance::control_flow; break;
    case RuleCategory::temporal: axiom.provenance = Axiom::Provenance::temporal; break;
    case RuleCategory::payload: axiom.provenance = Axiom::Provenance::payload; break;
  }

  if (spec.is_template()) {
    const auto& a = spec.args;
    FormulaPtr body;
    if (spec.template_name == "existence") {
      body = Formula::atom(make_feature_call("has_act", {a[0]}));
    } else if (spec.template_name == "response" || spec.template_name == "chain_response") {
      auto follows = spec.template_name == "response"
                         ? make_feature_call("eventually_follows", {a[0], a[1]})
                         : make_feature_call("is_next", {a[0], a[1]},
                                             PayloadAgg::last, opts.strict_is_next);
      auto trigger = Formula::atom(make_feature_call("has_act", {a[0]}));
      auto follow_atom = Formula::atom(std::move(follows));
      body = opts.guarded_control_flow
                 ? Formula::implies(std::move(trigger), std::move(follow_atom))
                 : Formula::conj(std::move(trigger), std::move(follow_atom));
    } else if (spec.template_name == "precedence") {
      body = Formula::atom(make_feature_call("precedes", {a[0], a[1]}));
    } else if (spec.template_name == "not_coexistence") {
      body = Formula::negate(
          Formula::conj(Formula::atom(make_feature_call("has_act", {a[0]})),
                        Formula::atom(make_feature_call("has_act", {a[1]}))));
    } else {
      throw ValidationError("unknown template '" + spec.template_name + "'");
    }
    axiom.formula = Formula::forall(DomainSelector::all, std::move(body));
    return axiom;
  }

  if (spec.conditions.empty())
    throw ValidationError("rule '" + spec.id + "' has no conditions");
  FormulaPtr antecedent;
  for (const auto& c : spec.conditions) {
    auto atom = Formula::comparison(c.feature, c.op, c.constant);
    antecedent = antecedent ? Formula::conj(std::move(antecedent), std::move(atom))
                            : std::move(atom);
  }
  FormulaPtr consequent = Formula::predicate();
  if (!spec.consequent_positive) consequent = Formula::negate(std::move(consequent));
  auto body = Formula::implies(std::move(antecedent), std::move(consequent));

  DomainSelector domain = DomainSelector::all;
  if (spec.scope == ClassScope::positive) domain = DomainSelector::positive_class;
  if (spec.scope == ClassScope::negative) domain = DomainSelector::negative_class;
  axiom.formula = Formula::forall(domain, std::move(body));

  if (!axiom.formula->mentions_predicate() && spec.effect != ExpectedEffect::none)
    throw ValidationError("rule '" + spec.id +
                          "' can never influence the classifier (no predicate atom)");
  return axiom;
}

const RuleSpec* KnowledgeBase::spec_for(const std::string& axiom_id) const {
  for (const auto& s : specs)
    if (s.id == axiom_id) return &s;
  return nullptr;
}

KnowledgeBase build_kb(const std::vector<RuleSpec>& specs, const CompileOptions& opts) {
  KnowledgeBase kb;
  Axiom pos;
  pos.id = "data_positive";
  pos.partition = Axiom::Partition::data;
  pos.provenance = Axiom::Provenance::data;
  pos.formula = Formula::forall(DomainSelector::positive_class, Formula::predicate());
  Axiom neg;
  neg.id = "data_negative";
  neg.partition = Axiom::Partition::data;
  neg.provenance = Axiom::Provenance::data;
  neg.formula =
      Formula::forall(DomainSelector::negative_class, Formula::negate(Formula::predicate()));
  kb.k_data = {std::move(pos), std::move(neg)};
  for (const auto& s : specs) kb.k_p.push_back(compile_rule(s, opts));
  kb.specs = specs;
  return kb;
}

namespace {

bool crisp_eval_body(const Formula& f, const Prefix& l, bool predicate_truth) {
  switch (f.kind) {
    case Formula::Kind::predicate: return predicate_truth;
    case Formula::Kind::bool_feature: {
      FeatureValue fv = f.feature.eval(l);
      return fv.defined && fv.num != 0.0;
    }
    case Formula::Kind::comparison: {
      FeatureValue fv = f.feature.eval(l);
      if (!fv.defined || fv.kind == FeatureValue::Kind::categorical) return false;
      return compare(fv.num, f.op, f.constant);
    }
    case Formula::Kind::negation: return !crisp_eval_body(*f.children[0], l, predicate_truth);
    case Formula::Kind::conjunction:
      return crisp_eval_body(*f.children[0], l, predicate_truth) &&
             crisp_eval_body(*f.children[1], l, predicate_truth);
    case Formula::Kind::disjunction:
      return crisp_eval_body(*f.children[0], l, predicate_truth) ||
             crisp_eval_body(*f.children[1], l, predicate_truth);
    case Formula::Kind::implication:
      return !crisp_eval_body(*f.children[0], l, predicate_truth) ||
             crisp_eval_body(*f.children[1], l, predicate_truth);
    case Formula::Kind::biconditional:
      return crisp_eval_body(*f.children[0], l, predicate_truth) ==
             crisp_eval_body(*f.children[1], l, predicate_truth);
    default:
      throw ValidationError("nested quantifier in crisp evaluation");
  }
}

}  // namespace

ComplianceResult crisp_trace_compliance(const Trace& trace, const KnowledgeBase& kb) {
  ComplianceResult res;
  Prefix whole{&trace, trace.events.size()};
  const bool label_true = trace.label == Label::positive;
  for (const auto& axiom : kb.k_p) {
    const Formula& f = *axiom.formula;
    bool sat = true;
    if (!f.is_quantifier())
      throw ValidationError("axiom '" + axiom.id + "' has no outermost quantifier");
    bool in_domain = f.domain == DomainSelector::all ||
                     (f.domain == DomainSelector::positive_class && label_true) ||
                     (f.domain == DomainSelector::negative_class && !label_true);
    if (in_domain) sat = crisp_eval_body(*f.children[0], whole, label_true);
    res.per_rule.emplace_back(axiom.id, sat);
    res.overall = res.overall && sat;
  }
  return res;
}

SplitResult compliance_aware_split(const std::vector<Trace>& traces, const SplitSpec& spec,
                                   const KnowledgeBase& kb, Rng rng) {
  return compliance_aware_split(
      traces, spec,
      [&kb](const Trace& t) { return crisp_trace_compliance(t, kb).overall; }, rng);
}

std::vector<SuggestedRule> suggest_rules(const std::vector<Trace>& traces,
                                         double min_support, std::size_t max_rules) {
  if (traces.empty()) return {};
  std::set<std::string> acts;
  for (const auto& t : traces)
    for (const auto& e : t.events) acts.insert(e.activity);

  struct Stat {
    std::size_t activated = 0;
    std::size_t satisfied = 0;
  };
  std::vector<SuggestedRule> out;
  auto push = [&](const std::string& dsl, const Stat& s) {
    if (s.activated == 0) return;
    double support = static_cast<double>(s.satisfied) / static_cast<double>(s.activated);
    if (support >= min_support)
      out.push_back({dsl, support, s.activated});
  };

  std::size_t serial = 0;
  for (const auto& a : acts) {
    Stat st;
    for (const auto& t : traces) {
      st.activated++;
      Prefix whole{&t, t.events.size()};
      if (has_act(whole, a).num != 0.0) st.satisfied++;
    }
    push("cf" + std::to_string(serial++) + ": existence(" + a + ")", st);
  }
  for (const auto& a : acts) {
    for (const auto& b : acts) {
      if (a == b) continue;
      Stat resp, chain, prec;
      for (const auto& t : traces) {
        Prefix whole{&t, t.events.size()};
        bool has_a = has_act(whole, a).num != 0.0;
        bool has_b = has_act(whole, b).num != 0.0;
        if (has_a) {
          resp.activated++;
          if (eventually_follows(whole, a, b).num != 0.0) resp.satisfied++;
          chain.activated++;
          if (is_next(whole, a, b).num != 0.0) chain.satisfied++;
        }
        if (has_b) {
          prec.activated++;
          if (precedes(whole, a, b).num != 0.0) prec.satisfied++;
        }
      }
      push("cf" + std::to_string(serial++) + ": response(" + a + ", " + b + ")", resp);
      push("cf" + std::to_string(serial++) + ": chain_response(" + a + ", " + b + ")", chain);
      push("cf" + std::to_string(serial++) + ": precedence(" + a + ", " + b + ")", prec);
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const SuggestedRule& x, const SuggestedRule& y) {
    return x.support > y.support;
  });
  if (out.size() > max_rules) out.resize(max_rules);
  return out;
}

}  // namespace nesy
