#include "nesy/features.hpp"

#include <algorithm>
#include <limits>

#include "nesy/error.hpp"
#include "nesy/timeutil.hpp"

namespace nesy {

std::string payload_agg_str(PayloadAgg agg) {
  switch (agg) {
    case PayloadAgg::last: return "last";
    case PayloadAgg::first: return "first";
    case PayloadAgg::mean: return "mean";
    case PayloadAgg::max: return "max";
    case PayloadAgg::min: return "min";
    case PayloadAgg::case_level: return "case";
  }
  return "?";
}

PayloadAgg parse_payload_agg(const std::string& s) {
  if (s == "last") return PayloadAgg::last;
  if (s == "first") return PayloadAgg::first;
  if (s == "mean") return PayloadAgg::mean;
  if (s == "max") return PayloadAgg::max;
  if (s == "min") return PayloadAgg::min;
  if (s == "case") return PayloadAgg::case_level;
  throw ValidationError("unknown payload aggregation '" + s + "'");
}

FeatureValue has_act(const Prefix& l, const std::string& a) {
  for (std::size_t i = 0; i < l.size(); ++i)
    if (l.event(i).activity == a) return FeatureValue::boolean(true);
  return FeatureValue::boolean(false);
}

FeatureValue is_next(const Prefix& l, const std::string& a, const std::string& b,
                     bool strict) {
  bool seen = false;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l.event(i).activity != a) continue;
    seen = true;
    if (i + 1 >= l.size() || l.event(i + 1).activity != b)
      return FeatureValue::boolean(false);
  }
  if (!seen) return FeatureValue::boolean(!strict);
  return FeatureValue::boolean(true);
}

FeatureValue eventually_follows(const Prefix& l, const std::string& a,
                                const std::string& b) {
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l.event(i).activity != a) continue;
    bool followed = false;
    for (std::size_t j = i + 1; j < l.size(); ++j)
      if (l.event(j).activity == b) {
        followed = true;
        break;
      }
    if (!followed) return FeatureValue::boolean(false);
  }
  return FeatureValue::boolean(true);
}

FeatureValue precedes(const Prefix& l, const std::string& a, const std::string& b) {
  bool a_seen = false;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l.event(i).activity == a) a_seen = true;
    if (l.event(i).activity == b && !a_seen) return FeatureValue::boolean(false);
  }
  return FeatureValue::boolean(true);
}

FeatureValue occ_count(const Prefix& l, const std::string& a) {
  double count = 0;
  for (std::size_t i = 0; i < l.size(); ++i)
    if (l.event(i).activity == a) ++count;
  return FeatureValue::numeric(count);
}

FeatureValue wait_time_hours(const Prefix& l, const std::string& a,
                             const std::string& b) {
  std::size_t last_a = l.size();
  for (std::size_t i = 0; i < l.size(); ++i)
    if (l.event(i).activity == a) last_a = i;
  if (last_a == l.size()) return FeatureValue::undefined();
  for (std::size_t j = last_a + 1; j < l.size(); ++j)
    if (l.event(j).activity == b)
      return FeatureValue::numeric(
          ms_to_hours(l.event(j).timestamp_ms - l.event(last_a).timestamp_ms));
  return FeatureValue::undefined();
}

FeatureValue cycle_time_hours(const Prefix& l) {
  if (l.size() == 0) return FeatureValue::undefined();
  return FeatureValue::numeric(
      ms_to_hours(l.event(l.size() - 1).timestamp_ms - l.event(0).timestamp_ms));
}

FeatureValue payload_feature(const Prefix& l, const std::string& attr, PayloadAgg agg) {
  if (agg == PayloadAgg::case_level) {
    auto it = l.case_attributes().find(attr);
    if (it == l.case_attributes().end()) return FeatureValue::undefined();
    return it->second.is_numeric() ? FeatureValue::numeric(it->second.num)
                                   : FeatureValue::categorical(it->second.cat);
  }

  std::vector<const AttrValue*> present;
  for (std::size_t i = 0; i < l.size(); ++i) {
    auto it = l.event(i).attributes.find(attr);
    if (it != l.event(i).attributes.end()) present.push_back(&it->second);
  }
  if (present.empty()) return FeatureValue::undefined();

  switch (agg) {
    case PayloadAgg::last: {
      const AttrValue* v = present.back();
      return v->is_numeric() ? FeatureValue::numeric(v->num)
                             : FeatureValue::categorical(v->cat);
    }
    case PayloadAgg::first: {
      const AttrValue* v = present.front();
      return v->is_numeric() ? FeatureValue::numeric(v->num)
                             : FeatureValue::categorical(v->cat);
    }
    case PayloadAgg::mean:
    case PayloadAgg::max:
    case PayloadAgg::min: {
      double acc = agg == PayloadAgg::mean ? 0.0
                   : agg == PayloadAgg::max ? -std::numeric_limits<double>::infinity()
                                            : std::numeric_limits<double>::infinity();
      for (const AttrValue* v : present) {
        if (!v->is_numeric())
          throw ValidationError("payload aggregation '" + payload_agg_str(agg) +
                                "' on categorical attribute '" + attr + "'");
        if (agg == PayloadAgg::mean) acc += v->num;
        else if (agg == PayloadAgg::max) acc = std::max(acc, v->num);
        else acc = std::min(acc, v->num);
      }
      if (agg == PayloadAgg::mean) acc /= static_cast<double>(present.size());
      return FeatureValue::numeric(acc);
    }
    case PayloadAgg::case_level: break;  // handled above
  }
  return FeatureValue::undefined();
}

FeatureValue FeatureCall::eval(const Prefix& l) const {
  if (name == "has_act") return has_act(l, args[0]);
  if (name == "is_next") return is_next(l, args[0], args[1], strict);
  if (name == "eventually_follows") return eventually_follows(l, args[0], args[1]);
  if (name == "precedes") return precedes(l, args[0], args[1]);
  if (name == "occ_count") return occ_count(l, args[0]);
  if (name == "wait_time") return wait_time_hours(l, args[0], args[1]);
  if (name == "cycle_time") return cycle_time_hours(l);
  if (name == "payload") return payload_feature(l, args[0], agg);
  throw ValidationError("unknown feature '" + name + "'");
}

bool FeatureCall::is_boolean() const {
  return name == "has_act" || name == "is_next" || name == "eventually_follows" ||
         name == "precedes";
}

std::string FeatureCall::display(const std::string& var) const {
  auto with_args = [&](const std::string& label) {
    std::string out = label + "(" + var;
    for (const auto& a : args) out += "," + a;
    return out + ")";
  };
  if (name == "has_act") return with_args("HasAct");
  if (name == "is_next") return with_args("IsNext");
  if (name == "eventually_follows") return with_args("Next");
  if (name == "precedes") return with_args("Precedes");
  if (name == "occ_count") return with_args("OccCount");
  if (name == "wait_time") return with_args("WaitTime");
  if (name == "cycle_time") return "CycleTime(" + var + ")";
  if (name == "payload") return args[0] + "(" + var + ")";
  return with_args(name);
}

std::string FeatureCall::dsl() const {
  std::string out = name + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i];
  }
  if (name == "payload") out += ", " + payload_agg_str(agg);
  return out + ")";
}

std::string FeatureCall::key() const {
  std::string out = name;
  for (const auto& a : args) out += "\x1f" + a;
  if (name == "payload") out += "\x1f" + payload_agg_str(agg);
  if (name == "is_next" && strict) out += "\x1fstrict";
  return out;
}

const std::vector<std::string>& feature_template_names() {
  static const std::vector<std::string> names = {
      "has_act",  "is_next",   "eventually_follows", "precedes",
      "occ_count", "wait_time", "cycle_time",        "payload"};
  return names;
}

FeatureCall make_feature_call(const std::string& name, std::vector<std::string> args,
                              PayloadAgg agg, bool strict) {
  std::size_t arity;
  if (name == "has_act" || name == "occ_count") arity = 1;
  else if (name == "is_next" || name == "eventually_follows" || name == "precedes" ||
           name == "wait_time") arity = 2;
  else if (name == "cycle_time") arity = 0;
  else if (name == "payload") arity = 1;
  else throw ValidationError("unknown feature template '" + name + "'");
  if (args.size() != arity)
    throw ValidationError("feature '" + name + "' expects " + std::to_string(arity) +
                          " argument(s), got " + std::to_string(args.size()));
  FeatureCall call;
  call.name = name;
  call.args = std::move(args);
  call.agg = agg;
  call.strict = strict;
  return call;
}

}  // namespace nesy
