#include "nesy/logic.hpp"

#include <cmath>
#include <cstdio>

#include "nesy/error.hpp"

namespace nesy {

std::string domain_var(DomainSelector d) {
  switch (d) {
    case DomainSelector::all: return "l";
    case DomainSelector::positive_class: return "l+";
    case DomainSelector::negative_class: return "l-";
  }
  return "l";
}

namespace {

FormulaPtr make_node(Formula f) { return std::make_shared<Formula>(std::move(f)); }

void require_quantifier_free(const FormulaPtr& f) {
  if (f->is_quantifier())
    throw ValidationError("quantifiers may only appear as the outermost node");
  for (const auto& c : f->children) require_quantifier_free(c);
}

}  // namespace

FormulaPtr Formula::predicate() {
  Formula f;
  f.kind = Kind::predicate;
  return make_node(std::move(f));
}

FormulaPtr Formula::atom(FeatureCall feature) {
  Formula f;
  f.kind = Kind::bool_feature;
  f.feature = std::move(feature);
  return make_node(std::move(f));
}

FormulaPtr Formula::comparison(FeatureCall feature, CompareOp op, double constant) {
  Formula f;
  f.kind = Kind::comparison;
  f.feature = std::move(feature);
  f.op = op;
  f.constant = constant;
  return make_node(std::move(f));
}

FormulaPtr Formula::negate(FormulaPtr child) {
  require_quantifier_free(child);
  Formula f;
  f.kind = Kind::negation;
  f.children = {std::move(child)};
  return make_node(std::move(f));
}

namespace {
FormulaPtr binary(Formula::Kind kind, FormulaPtr a, FormulaPtr b) {
  require_quantifier_free(a);
  require_quantifier_free(b);
  Formula f;
  f.kind = kind;
  f.children = {std::move(a), std::move(b)};
  return make_node(std::move(f));
}
}  // namespace

FormulaPtr Formula::conj(FormulaPtr a, FormulaPtr b) {
  return binary(Kind::conjunction, std::move(a), std::move(b));
}
FormulaPtr Formula::disj(FormulaPtr a, FormulaPtr b) {
  return binary(Kind::disjunction, std::move(a), std::move(b));
}
FormulaPtr Formula::implies(FormulaPtr a, FormulaPtr b) {
  return binary(Kind::implication, std::move(a), std::move(b));
}
FormulaPtr Formula::iff(FormulaPtr a, FormulaPtr b) {
  return binary(Kind::biconditional, std::move(a), std::move(b));
}

FormulaPtr Formula::forall(DomainSelector d, FormulaPtr body) {
  require_quantifier_free(body);
  Formula f;
  f.kind = Kind::forall;
  f.domain = d;
  f.children = {std::move(body)};
  return make_node(std::move(f));
}

FormulaPtr Formula::exists(DomainSelector d, FormulaPtr body) {
  require_quantifier_free(body);
  Formula f;
  f.kind = Kind::exists;
  f.domain = d;
  f.children = {std::move(body)};
  return make_node(std::move(f));
}

bool Formula::mentions_predicate() const {
  if (kind == Kind::predicate) return true;
  for (const auto& c : children)
    if (c->mentions_predicate()) return true;
  return false;
}

bool structurally_equal(const Formula& a, const Formula& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Formula::Kind::bool_feature || a.kind == Formula::Kind::comparison) {
    if (a.feature.key() != b.feature.key()) return false;
    if (a.kind == Formula::Kind::comparison && (a.op != b.op || a.constant != b.constant))
      return false;
  }
  if (a.is_quantifier() && a.domain != b.domain) return false;
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

namespace {

std::string format_constant(double c) {
  if (c == static_cast<long long>(c) && std::abs(c) < 1e15) {
    return std::to_string(static_cast<long long>(c));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", c);
  return buf;
}

std::string print_body(const Formula& f, const std::string& var) {
  switch (f.kind) {
    case Formula::Kind::predicate: return "P(" + var + ")";
    case Formula::Kind::bool_feature: return f.feature.display(var);
    case Formula::Kind::comparison:
      return f.feature.display(var) + " " + compare_op_str(f.op) + " " +
             format_constant(f.constant);
    case Formula::Kind::negation: return "not " + print_body(*f.children[0], var);
    case Formula::Kind::conjunction:
      return "(" + print_body(*f.children[0], var) + " and " +
             print_body(*f.children[1], var) + ")";
    case Formula::Kind::disjunction:
      return "(" + print_body(*f.children[0], var) + " or " +
             print_body(*f.children[1], var) + ")";
    case Formula::Kind::implication:
      return "(" + print_body(*f.children[0], var) + " -> " +
             print_body(*f.children[1], var) + ")";
    case Formula::Kind::biconditional:
      return "(" + print_body(*f.children[0], var) + " <-> " +
             print_body(*f.children[1], var) + ")";
    default: return "?";
  }
}

}  // namespace

std::string to_string(const Formula& f) {
  if (f.is_quantifier()) {
    std::string var = domain_var(f.domain);
    std::string q = f.kind == Formula::Kind::forall ? "forall" : "exists";
    return q + " " + var + " " + print_body(*f.children[0], var);
  }
  return print_body(f, "l");
}

// -- semantics ----------------------------------------------------------------

Tensor FuzzySemantics::iff(const Tensor& a, const Tensor& b) const {
  return conj(implies(a, b), implies(b, a));
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ValidationError("connective operand shapes differ: " + shape_str(a.shape()) +
                          " vs " + shape_str(b.shape()));
}

class ProductSemantics final : public FuzzySemantics {
 public:
  std::string name() const override { return "product"; }
  Tensor neg(const Tensor& a) const override { return 1.0 - a; }
  Tensor conj(const Tensor& a, const Tensor& b) const override {
    check_same_shape(a, b);
    return a * b;
  }
  Tensor disj(const Tensor& a, const Tensor& b) const override {
    check_same_shape(a, b);
    return a + b - a * b;
  }
  Tensor implies(const Tensor& a, const Tensor& b) const override {  // Reichenbach
    check_same_shape(a, b);
    return 1.0 - a + a * b;
  }
};

class LukasiewiczSemantics final : public FuzzySemantics {
 public:
  std::string name() const override { return "lukasiewicz"; }
  Tensor neg(const Tensor& a) const override { return 1.0 - a; }
  Tensor conj(const Tensor& a, const Tensor& b) const override {
    check_same_shape(a, b);
    return maximum(a + b - 1.0, Tensor::zeros(a.shape()));
  }
  Tensor disj(const Tensor& a, const Tensor& b) const override {
    check_same_shape(a, b);
    return minimum(a + b, Tensor::full(a.shape(), 1.0));
  }
  Tensor implies(const Tensor& a, const Tensor& b) const override {
    check_same_shape(a, b);
    return minimum(1.0 - a + b, Tensor::full(a.shape(), 1.0));
  }
};

class GodelSemantics final : public FuzzySemantics {
 public:
  std::string name() const override { return "godel"; }
  Tensor neg(const Tensor& a) const override { return 1.0 - a; }
  Tensor conj(const Tensor& a, const Tensor& b) const override {
    check_same_shape(a, b);
    return minimum(a, b);
  }
  Tensor disj(const Tensor& a, const Tensor& b) const override {
    check_same_shape(a, b);
    return maximum(a, b);
  }
  Tensor implies(const Tensor& a, const Tensor& b) const override {
    // residuum: 1 where a <= b, else b; subgradient flows to b on the
    // violated entries
    check_same_shape(a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = a.values()[i] <= b.values()[i] ? 1.0 : b.values()[i];
    auto an = a.node();
    auto bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode& n) {
      if (!bn->requires_grad) return;
      bn->ensure_grad();
      for (std::size_t i = 0; i < n.value.size(); ++i)
        if (an->value[i] > bn->value[i]) bn->grad[i] += n.grad[i];
    });
  }
};

}  // namespace

const FuzzySemantics& product_semantics() {
  static const ProductSemantics s;
  return s;
}
const FuzzySemantics& lukasiewicz_semantics() {
  static const LukasiewiczSemantics s;
  return s;
}
const FuzzySemantics& godel_semantics() {
  static const GodelSemantics s;
  return s;
}

const FuzzySemantics& semantics_by_name(const std::string& name) {
  if (name == "product") return product_semantics();
  if (name == "lukasiewicz") return lukasiewicz_semantics();
  if (name == "godel") return godel_semantics();
  throw ValidationError("unknown fuzzy semantics '" + name + "'");
}

Tensor eval_connective(Formula::Kind kind, const FuzzySemantics& sem,
                       const std::vector<Tensor>& operands) {
  switch (kind) {
    case Formula::Kind::negation: return sem.neg(operands.at(0));
    case Formula::Kind::conjunction: return sem.conj(operands.at(0), operands.at(1));
    case Formula::Kind::disjunction: return sem.disj(operands.at(0), operands.at(1));
    case Formula::Kind::implication: return sem.implies(operands.at(0), operands.at(1));
    case Formula::Kind::biconditional: return sem.iff(operands.at(0), operands.at(1));
    default:
      throw ValidationError("eval_connective: not a connective kind");
  }
}

// -- aggregators ----------------------------------------------------------------

Tensor p_mean(const Tensor& u, double p) {
  if (!u.defined() || u.size() == 0) throw ValidationError("p_mean of empty tensor");
  if (p < 1.0) throw ValidationError("p_mean requires p >= 1");
  const auto& v = u.values();
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += std::pow(x, p);
  s /= n;
  const double out = std::pow(s, 1.0 / p);
  auto un = u.node();
  return make_op(Shape{}, {out}, {u}, [un, p, s, n](TensorNode& node) {
    un->ensure_grad();
    const double g = node.grad[0];
    if (s == 0.0) {
      // diagonal limit; downstream sensitivities are zero here anyway
      for (double& gi : un->grad) gi += g / n;
      return;
    }
    const double outer = std::pow(s, 1.0 / p - 1.0) / n;
    for (std::size_t i = 0; i < un->value.size(); ++i)
      un->grad[i] += g * outer * std::pow(un->value[i], p - 1.0);
  });
}

Tensor p_mean_error(const Tensor& u, double p) {
  if (!u.defined() || u.size() == 0)
    throw ValidationError("p_mean_error of empty tensor");
  if (p < 1.0) throw ValidationError("p_mean_error requires p >= 1");
  const auto& v = u.values();
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += std::pow(1.0 - x, p);
  s /= n;
  const double out = 1.0 - std::pow(s, 1.0 / p);
  auto un = u.node();
  return make_op(Shape{}, {out}, {u}, [un, p, s, n](TensorNode& node) {
    un->ensure_grad();
    const double g = node.grad[0];
    if (s == 0.0) {
      for (double& gi : un->grad) gi += g / n;
      return;
    }
    const double outer = std::pow(s, 1.0 / p - 1.0) / n;
    for (std::size_t i = 0; i < un->value.size(); ++i)
      un->grad[i] += g * outer * std::pow(1.0 - un->value[i], p - 1.0);
  });
}

// -- grounding ----------------------------------------------------------------

const FeatureValue& FeatureCache::get(const FeatureCall& call, std::size_t index) const {
  auto key = call.key();
  auto it = memo_.find(key);
  if (it == memo_.end()) {
    std::vector<FeatureValue> col;
    col.reserve(dataset_.size());
    for (const auto& pfx : dataset_) col.push_back(call.eval(pfx));
    it = memo_.emplace(std::move(key), std::move(col)).first;
  }
  return it->second[index];
}

std::vector<std::size_t> domain_indices(DomainSelector d, const std::vector<int>& labels) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (d == DomainSelector::all || (d == DomainSelector::positive_class && labels[i] == 1) ||
        (d == DomainSelector::negative_class && labels[i] == 0))
      out.push_back(i);
  }
  return out;
}

namespace {

double crisp_compare_truth(const FeatureValue& fv, CompareOp op, double constant) {
  if (!fv.defined || fv.kind == FeatureValue::Kind::categorical) return 0.0;
  return compare(fv.num, op, constant) ? 1.0 : 0.0;
}

double smooth_compare_truth(const FeatureValue& fv, CompareOp op, double constant,
                            double temp) {
  if (!fv.defined || fv.kind == FeatureValue::Kind::categorical) return 0.0;
  auto sig = [](double z) {
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  };
  const double d = (fv.num - constant) / temp;
  switch (op) {
    case CompareOp::GT:
    case CompareOp::GE: return sig(d);
    case CompareOp::LT:
    case CompareOp::LE: return sig(-d);
    case CompareOp::EQ: return std::exp(-d * d);
    case CompareOp::NE: return 1.0 - std::exp(-d * d);
  }
  return 0.0;
}

Tensor eval_body(const Formula& f, const std::vector<std::size_t>& sel,
                 const GroundBatch& batch, const LogicConfig& cfg) {
  switch (f.kind) {
    case Formula::Kind::predicate:
      return index_rows(batch.predicate, sel);
    case Formula::Kind::bool_feature:
    case Formula::Kind::comparison: {
      std::vector<double> truths(sel.size());
      for (std::size_t i = 0; i < sel.size(); ++i) {
        const FeatureValue fv =
            batch.cache ? batch.cache->get(f.feature, batch.dataset_indices[sel[i]])
                        : f.feature.eval(batch.prefixes[sel[i]]);
        if (f.kind == Formula::Kind::bool_feature) {
          truths[i] = fv.defined && fv.num != 0.0 ? 1.0 : 0.0;
        } else {
          truths[i] = cfg.smooth_comparisons
                          ? smooth_compare_truth(fv, f.op, f.constant,
                                                 cfg.comparison_temperature)
                          : crisp_compare_truth(fv, f.op, f.constant);
        }
      }
      return Tensor::vector(std::move(truths));
    }
    case Formula::Kind::negation:
      return cfg.semantics->neg(eval_body(*f.children[0], sel, batch, cfg));
    case Formula::Kind::conjunction:
    case Formula::Kind::disjunction:
    case Formula::Kind::implication:
    case Formula::Kind::biconditional: {
      Tensor a = eval_body(*f.children[0], sel, batch, cfg);
      Tensor b = eval_body(*f.children[1], sel, batch, cfg);
      return eval_connective(f.kind, *cfg.semantics, {a, b});
    }
    default:
      throw ValidationError("quantifier nested inside a formula body");
  }
}

}  // namespace

std::optional<GroundResult> ground_formula(const Axiom& axiom, const GroundBatch& batch,
                                           const LogicConfig& cfg) {
  const Formula& f = *axiom.formula;
  if (!f.is_quantifier())
    throw ValidationError("axiom '" + axiom.id + "' has no outermost quantifier");
  if (batch.cache && batch.dataset_indices.size() != batch.prefixes.size())
    throw ValidationError("ground batch cache indices misaligned");

  auto sel = domain_indices(f.domain, batch.labels);
  if (sel.empty()) return std::nullopt;  // vacuous batch: skip, never score 1

  GroundResult res;
  res.per_sample = eval_body(*f.children[0], sel, batch, cfg);
  res.aggregated = f.kind == Formula::Kind::forall
                       ? p_mean_error(res.per_sample, cfg.p_forall)
                       : p_mean(res.per_sample, cfg.p_exists);
  res.n_selected = sel.size();
  return res;
}

Tensor sat_agg(const std::vector<Tensor>& axiom_sats, double p) {
  if (axiom_sats.empty())
    throw ValidationError("sat_agg over zero evaluable axioms");
  if (axiom_sats.size() == 1) return axiom_sats[0];
  return p_mean_error(stack_scalars(axiom_sats), p);
}

}  // namespace nesy
