#pragma once

#include <string>
#include <vector>

#include "nesy/eventlog.hpp"

namespace nesy {

// Result of a feature function over a prefix. `defined` is false when the
// feature does not apply (missing anchor activity, absent attribute);
// comparisons over undefined values evaluate to crisp 0.
struct FeatureValue {
  enum class Kind { boolean, numeric, categorical };
  Kind kind = Kind::numeric;
  double num = 0.0;
  std::string cat;
  bool defined = true;

  static FeatureValue boolean(bool b) {
    return {Kind::boolean, b ? 1.0 : 0.0, {}, true};
  }
  static FeatureValue numeric(double v) { return {Kind::numeric, v, {}, true}; }
  static FeatureValue categorical(std::string v) {
    return {Kind::categorical, 0.0, std::move(v), true};
  }
  static FeatureValue undefined() { return {Kind::numeric, 0.0, {}, false}; }
};

enum class PayloadAgg { last, first, mean, max, min, case_level };

std::string payload_agg_str(PayloadAgg agg);
PayloadAgg parse_payload_agg(const std::string& s);

// -- control-flow ------------------------------------------------------------

// 1 iff some event of the prefix has activity a.
FeatureValue has_act(const Prefix& l, const std::string& a);

// 1 iff every occurrence of a is immediately followed by b. Vacuously 1
// when a is absent (chain-response convention); the strict variant returns
// 0 instead.
FeatureValue is_next(const Prefix& l, const std::string& a, const std::string& b,
                     bool strict = false);

// 1 iff every occurrence of a is eventually followed by a later b
// (response semantics); vacuously 1 when a is absent.
FeatureValue eventually_follows(const Prefix& l, const std::string& a,
                                const std::string& b);

// 1 iff every occurrence of b has an earlier occurrence of a; vacuously 1
// when b is absent.
FeatureValue precedes(const Prefix& l, const std::string& a, const std::string& b);

// Number of occurrences of a in the prefix.
FeatureValue occ_count(const Prefix& l, const std::string& a);

// -- temporal ----------------------------------------------------------------

// Hours between the last occurrence of a and the first occurrence of b
// after it; undefined when either anchor is missing.
FeatureValue wait_time_hours(const Prefix& l, const std::string& a,
                             const std::string& b);

// Hours between the first and last event of the prefix.
FeatureValue cycle_time_hours(const Prefix& l);

// -- payload -----------------------------------------------------------------

// Aggregation over the events where the attribute is present; case_level
// reads the case attribute instead. mean/max/min require numeric values.
FeatureValue payload_feature(const Prefix& l, const std::string& attr, PayloadAgg agg);

// ----------------------------------------------------------------------------

// A named, argument-bound feature reference: the unit the rule DSL and
// formula atoms address. Evaluation dispatches to the functions above.
struct FeatureCall {
  std::string name;               // has_act, is_next, eventually_follows,
                                  // precedes, occ_count, wait_time,
                                  // cycle_time, payload
  std::vector<std::string> args;  // activities, or [attribute] for payload
  PayloadAgg agg = PayloadAgg::last;
  bool strict = false;

  FeatureValue eval(const Prefix& l) const;
  bool is_boolean() const;
  std::string display(const std::string& var) const;  // e.g. WaitTime(l,Surg,ATB)
  std::string dsl() const;                            // e.g. wait_time(Surg,ATB)
  std::string key() const;                            // stable cache identity
};

// Name/arity validation for the templates above; unknown names throw.
FeatureCall make_feature_call(const std::string& name, std::vector<std::string> args,
                              PayloadAgg agg = PayloadAgg::last, bool strict = false);

const std::vector<std::string>& feature_template_names();

}  // namespace nesy
