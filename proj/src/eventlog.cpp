#include "nesy/eventlog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nesy/csv.hpp"
#include "nesy/error.hpp"
#include "nesy/timeutil.hpp"

namespace nesy {

namespace {

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  return end && *end == '\0' && end != begin;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<Trace> parse_log_csv(const std::string& csv_text, const LogSchema& schema) {
  CsvTable table = parse_csv(csv_text);
  if (table.header.empty()) throw ValidationError("event log is empty");
  int ci = table.column(schema.case_column);
  int ai = table.column(schema.activity_column);
  int ti = table.column(schema.timestamp_column);
  if (ci < 0) throw ValidationError("missing case column '" + schema.case_column + "'");
  if (ai < 0) throw ValidationError("missing activity column '" + schema.activity_column + "'");
  if (ti < 0) throw ValidationError("missing timestamp column '" + schema.timestamp_column + "'");
  if (table.rows.empty()) throw ValidationError("event log has a header but no rows");

  std::vector<std::pair<std::string, int>> attr_cols;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    int idx = static_cast<int>(i);
    if (idx == ci || idx == ai || idx == ti) continue;
    attr_cols.emplace_back(table.header[i], idx);
  }

  // numeric iff every nonempty value parses as a number
  std::map<std::string, bool> col_numeric;
  for (const auto& [name, idx] : attr_cols) col_numeric[name] = true;
  for (const auto& row : table.rows) {
    for (const auto& [name, idx] : attr_cols) {
      if (static_cast<std::size_t>(idx) >= row.fields.size()) continue;
      const std::string v = trim(row.fields[idx]);
      double d;
      if (!v.empty() && !parse_number(v, d)) col_numeric[name] = false;
    }
  }

  struct RawCase {
    std::vector<Event> events;
    std::vector<std::size_t> order;  // original row order for stable sort
  };
  std::map<std::string, RawCase> cases;
  std::size_t row_counter = 0;
  for (const auto& row : table.rows) {
    auto field = [&](int idx) -> std::string {
      return static_cast<std::size_t>(idx) < row.fields.size() ? trim(row.fields[idx]) : "";
    };
    Event ev;
    ev.case_id = field(ci);
    ev.activity = field(ai);
    if (ev.case_id.empty())
      throw ValidationError("row " + std::to_string(row.line) + ": empty case id");
    if (ev.activity.empty())
      throw ValidationError("row " + std::to_string(row.line) + ": empty activity");
    auto ts = parse_iso8601_ms(field(ti));
    if (!ts)
      throw ValidationError("row " + std::to_string(row.line) +
                            ": unparseable timestamp '" + field(ti) + "'");
    ev.timestamp_ms = *ts;
    for (const auto& [name, idx] : attr_cols) {
      std::string v = field(idx);
      if (v.empty()) continue;
      if (col_numeric[name]) {
        double d = 0;
        parse_number(v, d);
        ev.attributes[name] = AttrValue::numeric(d);
      } else {
        ev.attributes[name] = AttrValue::categorical(v);
      }
    }
    auto& rc = cases[ev.case_id];
    rc.order.push_back(row_counter++);
    rc.events.push_back(std::move(ev));
  }

  // columns constant (over nonempty values) within every case become
  // case attributes
  std::set<std::string> case_level;
  for (const auto& [name, idx] : attr_cols) case_level.insert(name);
  for (const auto& [cid, rc] : cases) {
    for (const auto& [name, idx] : attr_cols) {
      if (!case_level.count(name)) continue;
      const AttrValue* first = nullptr;
      for (const auto& ev : rc.events) {
        auto it = ev.attributes.find(name);
        if (it == ev.attributes.end()) continue;
        if (!first) {
          first = &it->second;
        } else {
          bool same = first->kind == it->second.kind &&
                      (first->is_numeric() ? first->num == it->second.num
                                           : first->cat == it->second.cat);
          if (!same) {
            case_level.erase(name);
            break;
          }
        }
      }
    }
  }

  std::vector<Trace> traces;
  traces.reserve(cases.size());
  for (auto& [cid, rc] : cases) {
    Trace t;
    t.case_id = cid;
    // stable sort by timestamp, preserving file order on ties
    std::vector<std::size_t> perm(rc.events.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
      return rc.events[a].timestamp_ms < rc.events[b].timestamp_ms;
    });
    for (std::size_t i : perm) t.events.push_back(std::move(rc.events[i]));
    for (const auto& name : case_level) {
      for (auto& ev : t.events) {
        auto it = ev.attributes.find(name);
        if (it != ev.attributes.end()) {
          t.case_attributes[name] = it->second;
          break;
        }
      }
    }
    if (!case_level.empty())
      for (auto& ev : t.events)
        for (const auto& name : case_level) ev.attributes.erase(name);
    traces.push_back(std::move(t));
  }
  return traces;
}

std::vector<Trace> load_log(const std::string& path, const LogSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open event log: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_log_csv(buf.str(), schema);
}

LabelRule parse_label_rule(const std::string& raw) {
  std::string s = trim(raw);
  LabelRule rule;
  if (s.rfind("not ", 0) == 0) {
    rule.negate = true;
    s = trim(s.substr(4));
  }
  if (s.rfind("contains(", 0) == 0 && s.back() == ')') {
    rule.kind = LabelRule::Kind::contains_activity;
    rule.activity = trim(s.substr(9, s.size() - 10));
    if (rule.activity.empty()) throw ValidationError("labeler: empty activity in contains()");
    return rule;
  }
  if (s.rfind("attr(", 0) == 0) {
    std::size_t close = s.find(')');
    if (close == std::string::npos) throw ValidationError("labeler: missing ')' in attr()");
    rule.kind = LabelRule::Kind::attribute_compare;
    rule.attribute = trim(s.substr(5, close - 5));
    if (rule.attribute.empty()) throw ValidationError("labeler: empty attribute name");
    std::string rest = trim(s.substr(close + 1));
    std::size_t oplen = 0;
    for (const char* cand : {">=", "<=", "!=", "==", ">", "<", "="}) {
      if (rest.rfind(cand, 0) == 0) {
        rule.op = parse_compare_op(cand);
        oplen = std::string(cand).size();
        break;
      }
    }
    if (oplen == 0) throw ValidationError("labeler: expected comparison operator after attr()");
    std::string value = trim(rest.substr(oplen));
    if (value.empty()) throw ValidationError("labeler: missing comparison constant");
    rule.numeric_constant = parse_number(value, rule.number);
    rule.text_constant = value;
    return rule;
  }
  throw ValidationError("labeler: expected contains(<activity>) or attr(<name>) <op> <value>");
}

namespace {

const AttrValue* find_trace_attr(const Trace& t, const std::string& name) {
  auto it = t.case_attributes.find(name);
  if (it != t.case_attributes.end()) return &it->second;
  for (auto ev = t.events.rbegin(); ev != t.events.rend(); ++ev) {
    auto ait = ev->attributes.find(name);
    if (ait != ev->attributes.end()) return &ait->second;
  }
  return nullptr;
}

bool eval_label_rule(const Trace& t, const LabelRule& rule) {
  bool result = false;
  if (rule.kind == LabelRule::Kind::contains_activity) {
    for (const auto& ev : t.events)
      if (ev.activity == rule.activity) {
        result = true;
        break;
      }
  } else {
    const AttrValue* v = find_trace_attr(t, rule.attribute);
    if (v) {
      if (rule.numeric_constant) {
        result = v->is_numeric() && compare(v->num, rule.op, rule.number);
      } else if (rule.op == CompareOp::EQ) {
        result = !v->is_numeric() && v->cat == rule.text_constant;
      } else if (rule.op == CompareOp::NE) {
        result = v->is_numeric() || v->cat != rule.text_constant;
      } else {
        throw ValidationError("labeler: ordering comparison against non-numeric constant '" +
                              rule.text_constant + "'");
      }
    }
  }
  return rule.negate ? !result : result;
}

}  // namespace

LabelCounts label_traces(std::vector<Trace>& traces, const LabelRule& rule) {
  if (rule.kind == LabelRule::Kind::attribute_compare) {
    bool known = false;
    for (const auto& t : traces)
      if (find_trace_attr(t, rule.attribute)) {
        known = true;
        break;
      }
    if (!known)
      throw ValidationError("labeler references unknown attribute '" + rule.attribute + "'");
  }
  LabelCounts counts;
  for (auto& t : traces) {
    bool pos = eval_label_rule(t, rule);
    t.label = pos ? Label::positive : Label::negative;
    (pos ? counts.positives : counts.negatives)++;
  }
  return counts;
}

std::vector<Prefix> generate_prefixes(const std::vector<Trace>& traces,
                                      const std::vector<std::size_t>& subset,
                                      std::size_t min_len, std::size_t max_len) {
  if (min_len < 1) throw ValidationError("min prefix length must be >= 1");
  std::vector<Prefix> out;
  for (std::size_t idx : subset) {
    const Trace& t = traces[idx];
    std::size_t hi = t.events.size();
    if (max_len > 0) hi = std::min(hi, max_len);
    for (std::size_t k = min_len; k <= hi; ++k) out.push_back({&t, k});
  }
  return out;
}

std::vector<Prefix> generate_prefixes(const std::vector<Trace>& traces,
                                      std::size_t min_len, std::size_t max_len) {
  std::vector<std::size_t> all(traces.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return generate_prefixes(traces, all, min_len, max_len);
}

SplitResult temporal_split(const std::vector<Trace>& traces, const SplitSpec& spec) {
  if (traces.size() < 3)
    throw ValidationError("temporal split needs at least 3 traces, got " +
                          std::to_string(traces.size()));
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ValidationError("train fraction must lie in (0,1)");
  if (spec.validation_fraction < 0.0 ||
      spec.train_fraction + spec.validation_fraction >= 1.0)
    throw ValidationError("train + validation fractions must stay below 1");

  std::vector<std::size_t> order(traces.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ta = traces[a].completion_ms();
    auto tb = traces[b].completion_ms();
    if (ta != tb) return ta < tb;
    return traces[a].case_id < traces[b].case_id;  // documented tie-break
  });

  const double n = static_cast<double>(order.size());
  std::size_t n_train = static_cast<std::size_t>(std::llround(n * spec.train_fraction));
  std::size_t n_val = static_cast<std::size_t>(std::llround(n * spec.validation_fraction));
  n_train = std::min(n_train, order.size() - 1);
  if (n_train == 0) n_train = 1;
  n_val = std::min(n_val, order.size() - n_train - 1);

  SplitResult res;
  res.train.assign(order.begin(), order.begin() + n_train);
  res.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  res.test.assign(order.begin() + n_train + n_val, order.end());
  return res;
}

SplitResult compliance_aware_split(const std::vector<Trace>& traces, const SplitSpec& spec,
                                   const std::function<bool(const Trace&)>& is_compliant,
                                   Rng rng) {
  SplitResult res = temporal_split(traces, spec);

  std::vector<bool> compliant(traces.size(), false);
  std::size_t n_compliant = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    compliant[i] = is_compliant(traces[i]);
    if (compliant[i]) ++n_compliant;
  }
  if (n_compliant == 0)
    throw ValidationError(
        "no trace satisfies all knowledge rules; review the rule file before "
        "using the compliance-aware split");

  auto compliant_count = [&](const std::vector<std::size_t>& ids) {
    std::size_t c = 0;
    for (std::size_t i : ids)
      if (compliant[i]) ++c;
    return c;
  };

  if (spec.compliant_enrichment_ratio > 0.0) {
    std::vector<std::size_t> pool;
    for (std::size_t i : res.train)
      if (compliant[i]) pool.push_back(i);
    rng.shuffle(pool);

    std::size_t test_compliant = compliant_count(res.test);
    std::size_t moved = 0;
    while (!pool.empty()) {
      double frac = res.test.empty()
                        ? 0.0
                        : static_cast<double>(test_compliant) /
                              static_cast<double>(res.test.size());
      if (frac >= spec.compliant_enrichment_ratio) break;
      std::size_t donor = pool.back();
      pool.pop_back();
      res.test.push_back(donor);
      res.train.erase(std::find(res.train.begin(), res.train.end(), donor));
      ++test_compliant;
      ++moved;
    }
    res.moved_for_enrichment = moved;
  }

  res.train_compliant_fraction =
      res.train.empty() ? 0.0
                        : static_cast<double>(compliant_count(res.train)) /
                              static_cast<double>(res.train.size());
  res.test_compliant_fraction =
      res.test.empty() ? 0.0
                       : static_cast<double>(compliant_count(res.test)) /
                             static_cast<double>(res.test.size());
  return res;
}

}  // namespace nesy
