#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nesy/compare.hpp"
#include "nesy/rng.hpp"

namespace nesy {

struct AttrValue {
  enum class Kind { numeric, categorical };
  Kind kind = Kind::categorical;
  double num = 0.0;
  std::string cat;

  static AttrValue numeric(double v) { return {Kind::numeric, v, {}}; }
  static AttrValue categorical(std::string v) { return {Kind::categorical, 0.0, std::move(v)}; }
  bool is_numeric() const { return kind == Kind::numeric; }
};

using AttrMap = std::map<std::string, AttrValue>;

struct Event {
  std::string activity;
  std::string case_id;
  std::int64_t timestamp_ms = 0;
  AttrMap attributes;
};

enum class Label { negative = 0, positive = 1 };

struct Trace {
  std::string case_id;
  std::vector<Event> events;  // sorted by timestamp, non-decreasing
  AttrMap case_attributes;
  Label label = Label::negative;

  std::int64_t completion_ms() const { return events.back().timestamp_ms; }
};

// First k events of a trace; a non-owning view, so prefixes stay cheap and
// by construction always equal the source trace's first k events.
struct Prefix {
  const Trace* trace = nullptr;
  std::size_t length = 0;

  std::size_t size() const { return length; }
  const Event& event(std::size_t i) const { return trace->events[i]; }
  const std::string& case_id() const { return trace->case_id; }
  Label label() const { return trace->label; }
  const AttrMap& case_attributes() const { return trace->case_attributes; }
};

struct LogSchema {
  std::string case_column = "case_id";
  std::string activity_column = "activity";
  std::string timestamp_column = "timestamp";
};

// Reads a CSV event log: groups rows by case, sorts events stably by
// timestamp, infers attribute types (numeric iff every nonempty value
// parses), and promotes columns that are constant within every case to
// case attributes.
std::vector<Trace> load_log(const std::string& path, const LogSchema& schema = {});
std::vector<Trace> parse_log_csv(const std::string& csv_text, const LogSchema& schema = {});

// Declarative outcome labeler: "contains(<activity>)" or
// "attr(<name>) <op> <value>", optionally prefixed with "not ".
struct LabelRule {
  enum class Kind { contains_activity, attribute_compare };
  Kind kind = Kind::contains_activity;
  bool negate = false;
  std::string activity;
  std::string attribute;
  CompareOp op = CompareOp::GT;
  bool numeric_constant = false;
  double number = 0.0;
  std::string text_constant;
};

LabelRule parse_label_rule(const std::string& text);

struct LabelCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

LabelCounts label_traces(std::vector<Trace>& traces, const LabelRule& rule);

// One prefix per k in [min_len, min(max_len, length)] for each trace;
// max_len = 0 means unbounded. Traces shorter than min_len contribute none.
std::vector<Prefix> generate_prefixes(const std::vector<Trace>& traces,
                                      std::size_t min_len, std::size_t max_len);
std::vector<Prefix> generate_prefixes(const std::vector<Trace>& traces,
                                      const std::vector<std::size_t>& subset,
                                      std::size_t min_len, std::size_t max_len);

enum class SplitMode { temporal, compliance_aware };

struct SplitSpec {
  SplitMode mode = SplitMode::temporal;
  double train_fraction = 0.64;
  double validation_fraction = 0.16;
  double compliant_enrichment_ratio = 0.0;
  std::size_t min_prefix_len = 2;
  std::size_t max_prefix_len = 0;  // 0 = unbounded
};

struct SplitResult {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  double train_compliant_fraction = 0.0;
  double test_compliant_fraction = 0.0;
  std::size_t moved_for_enrichment = 0;
};

// Chronological split on completion timestamps (ties broken by case_id):
// earliest train_fraction to train, the middle validation_fraction slice to
// validation, the remainder to test.
SplitResult temporal_split(const std::vector<Trace>& traces, const SplitSpec& spec);

// Temporal split, then rule-compliant traces are moved from the train pool
// into the test set (in seeded random order) until the test compliant
// fraction reaches the enrichment ratio or the pool runs dry. The original
// temporal test members serve as the random-sample remainder.
SplitResult compliance_aware_split(const std::vector<Trace>& traces, const SplitSpec& spec,
                                   const std::function<bool(const Trace&)>& is_compliant,
                                   Rng rng);

}  // namespace nesy
