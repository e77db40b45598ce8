#include "nesy/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nesy/csv.hpp"
#include "nesy/error.hpp"
#include "nesy/timeutil.hpp"

namespace nesy {

using nlohmann::json;

// -- synthetic log generation -------------------------------------------------

void SynthSpec::validate() const {
  if (n_traces == 0) throw ValidationError("synthetic log needs at least 1 trace");
  if (min_len < 2 || max_len < min_len)
    throw ValidationError("trace length bounds must satisfy 2 <= min <= max");
  if (planted_rules < 1 || planted_rules > 3)
    throw ValidationError("the generator supports 1 to 3 planted rules");
  if (planted_rules >= 3 && min_len < 5)
    throw ValidationError("3 planted rules need min trace length >= 5");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(fire_prob)) throw ValidationError("fire_prob outside [0,1]");
  if (!prob(label_noise)) throw ValidationError("label_noise outside [0,1]");
  if (marker_prob >= 0.0 && !prob(marker_prob))
    throw ValidationError("marker_prob outside [0,1]");
  if (noncompliant_label_noise >= 0.0 && !prob(noncompliant_label_noise))
    throw ValidationError("noncompliant_label_noise outside [0,1]");
}

namespace {

constexpr const char* kActSurg = "Surg";
constexpr const char* kActAtb = "ATB";
constexpr const char* kActLab = "Lab";
constexpr const char* kActMarker = "Chk";
constexpr const char* kAttrRisk = "risk";
constexpr double kWaitThresholdH = 2.0;
constexpr double kRiskThreshold = 0.6;
// 2023-01-01T00:00:00Z
constexpr std::int64_t kSynthEpochMs = 1672531200000LL;

struct PlantedRuleDef {
  std::string correct_dsl_body;
  std::string inverted_dsl_body;
};

// The adversarial counterparts keep the planted feature but corrupt the
// threshold to fire on (nearly) every case and invert the consequent: the
// wrong-expert shape that asserts the opposite label wherever it applies.
PlantedRuleDef rule_def(std::size_t j) {
  switch (j) {
    case 0:
      return {"if wait_time(Surg, ATB) > 2 on all then P",
              "if wait_time(Surg, ATB) >= 0 on positive then not P"};
    case 1:
      return {"if payload(risk, case) > 0.6 on all then P",
              "if payload(risk, case) >= 0 on positive then not P"};
    default:
      return {"if occ_count(Lab) >= 2 on all then P",
              "if occ_count(Lab) >= 0 on positive then not P"};
  }
}

}  // namespace

SynthResult generate_synthetic_log(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = Rng(seed).split(0x73796e7468ULL);

  std::vector<std::string> fillers;
  for (std::size_t i = 0; i < spec.n_filler_activities; ++i)
    fillers.push_back("act_" + std::string(1, static_cast<char>('a' + i % 26)) +
                      (i >= 26 ? std::to_string(i / 26) : ""));

  SynthResult result;
  result.activities = fillers;
  result.activities.push_back(kActSurg);
  if (spec.planted_rules >= 1) result.activities.push_back(kActAtb);
  if (spec.planted_rules >= 3) result.activities.push_back(kActLab);
  if (spec.marker_prob >= 0.0) result.activities.push_back(kActMarker);

  const bool marker_mode = spec.marker_prob >= 0.0;
  result.traces.reserve(spec.n_traces);

  for (std::size_t tix = 0; tix < spec.n_traces; ++tix) {
    const std::size_t len = rng.index(spec.min_len, spec.max_len);
    std::vector<std::string> acts(len);
    for (auto& a : acts) a = rng.choice(fillers);
    std::vector<double> gap_hours(len, 0.0);
    for (std::size_t t = 1; t < len; ++t) gap_hours[t] = rng.uniform(0.2, 1.0);

    std::vector<bool> fires(spec.planted_rules, false);
    for (std::size_t j = 0; j < spec.planted_rules; ++j)
      fires[j] = rng.bernoulli(spec.fire_prob);

    std::vector<bool> slot_used(len, false);
    double risk_value = rng.uniform(0.0, 0.55);

    for (std::size_t j = 0; j < spec.planted_rules; ++j) {
      if (j == 0) {  // wait_time(Surg, ATB) > 2
        std::size_t pos = rng.index(len - 1);
        while (slot_used[pos] || slot_used[pos + 1]) pos = rng.index(len - 1);
        acts[pos] = kActSurg;
        slot_used[pos] = true;
        const bool with_atb = fires[j] || rng.bernoulli(0.5);
        if (with_atb) {
          acts[pos + 1] = kActAtb;
          slot_used[pos + 1] = true;
          gap_hours[pos + 1] = fires[j] ? rng.uniform(kWaitThresholdH + 0.5, 6.0)
                                        : rng.uniform(0.2, kWaitThresholdH - 0.5);
        }
      } else if (j == 1) {  // payload(risk, case) > 0.6
        risk_value = fires[j] ? rng.uniform(kRiskThreshold + 0.05, 1.0)
                              : rng.uniform(0.0, kRiskThreshold - 0.05);
      } else {  // occ_count(Lab) >= 2
        std::size_t want = fires[j] ? 2 + rng.index(2) : rng.index(2);
        for (std::size_t placed = 0; placed < want;) {
          std::size_t pos = rng.index(len);
          if (slot_used[pos]) {
            bool any_free = false;
            for (std::size_t q = 0; q < len; ++q) any_free = any_free || !slot_used[q];
            if (!any_free) break;
            continue;
          }
          acts[pos] = kActLab;
          slot_used[pos] = true;
          ++placed;
        }
      }
    }

    bool marked = false;
    if (marker_mode && rng.bernoulli(spec.marker_prob)) {
      marked = true;
      std::size_t pos = 0;
      bool placed = false;
      for (std::size_t q = 0; q < len; ++q)
        if (!slot_used[q]) {
          pos = q;
          placed = true;
          break;
        }
      if (placed) {
        acts[pos] = kActMarker;
        slot_used[pos] = true;
      } else {
        acts.push_back(kActMarker);
        gap_hours.push_back(rng.uniform(0.2, 1.0));
      }
    }

    bool label_raw = false;
    for (bool f : fires) label_raw = label_raw || f;
    bool label = label_raw;
    if (marker_mode) {
      if (!marked) {
        const double noise = spec.noncompliant_label_noise >= 0.0
                                 ? spec.noncompliant_label_noise
                                 : spec.label_noise;
        if (rng.bernoulli(noise)) label = !label;
      }
    } else if (rng.bernoulli(spec.label_noise)) {
      label = !label;
    }

    Trace trace;
    trace.case_id = "case_" + std::to_string(1000000 + tix);
    trace.label = label ? Label::positive : Label::negative;
    if (spec.planted_rules >= 2)
      trace.case_attributes[kAttrRisk] = AttrValue::numeric(risk_value);
    std::int64_t ts = kSynthEpochMs + static_cast<std::int64_t>(tix) * 3 * 3600000LL;
    for (std::size_t t = 0; t < acts.size(); ++t) {
      ts += static_cast<std::int64_t>(gap_hours[t] * 3600000.0);
      Event ev;
      ev.case_id = trace.case_id;
      ev.activity = acts[t];
      ev.timestamp_ms = ts;
      trace.events.push_back(std::move(ev));
    }
    result.traces.push_back(std::move(trace));
  }

  std::ostringstream correct, inverted, compliance;
  correct << "# planted rules (ground truth)\n";
  inverted << "# adversarial rules (label-inverted antecedents)\n";
  for (std::size_t j = 0; j < spec.planted_rules; ++j) {
    PlantedRuleDef def = rule_def(j);
    std::string rid = "r" + std::to_string(j);
    std::string aid = "adv" + std::to_string(j);
    correct << rid << ": " << def.correct_dsl_body << "\n";
    inverted << aid << ": " << def.inverted_dsl_body << "\n";
    result.planted_rule_ids.push_back(rid);
    result.adversarial_rule_ids.push_back(aid);
  }
  compliance << correct.str();
  if (marker_mode) compliance << "c_marker: existence(" << kActMarker << ")\n";
  result.rules_dsl = correct.str();
  result.adversarial_rules_dsl = inverted.str();
  result.compliance_rules_dsl = compliance.str();
  return result;
}

void write_log_csv(const std::string& path, const std::vector<Trace>& traces) {
  std::set<std::string> attr_names;
  for (const auto& t : traces) {
    for (const auto& [name, v] : t.case_attributes) attr_names.insert(name);
    for (const auto& e : t.events)
      for (const auto& [name, v] : e.attributes) attr_names.insert(name);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write log: " + path);
  out << "case_id,activity,timestamp";
  for (const auto& name : attr_names) out << "," << csv_escape(name);
  out << ",outcome\n";

  auto attr_str = [](const AttrValue& v) {
    if (!v.is_numeric()) return v.cat;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v.num);
    return std::string(buf);
  };
  for (const auto& t : traces) {
    for (const auto& e : t.events) {
      out << csv_escape(t.case_id) << "," << csv_escape(e.activity) << ","
          << format_iso8601_ms(e.timestamp_ms);
      for (const auto& name : attr_names) {
        out << ",";
        auto it = e.attributes.find(name);
        if (it != e.attributes.end()) {
          out << csv_escape(attr_str(it->second));
        } else {
          auto cit = t.case_attributes.find(name);
          if (cit != t.case_attributes.end()) out << csv_escape(attr_str(cit->second));
        }
      }
      out << "," << (t.label == Label::positive ? 1 : 0) << "\n";
    }
  }
}

// -- experiment harness -------------------------------------------------------

namespace {

struct SeedData {
  SplitResult split;
  std::vector<Prefix> train, val, test;
  EncodingSchema schema;
};

std::vector<Prefix> test_prefixes(const std::vector<Trace>& traces,
                                  const std::vector<std::size_t>& subset,
                                  const SplitSpec& spec, bool single) {
  if (!single) return generate_prefixes(traces, subset, spec.min_prefix_len,
                                        spec.max_prefix_len);
  std::vector<Prefix> out;
  for (std::size_t idx : subset) {
    std::size_t len = traces[idx].events.size();
    if (spec.max_prefix_len > 0) len = std::min(len, spec.max_prefix_len);
    if (len >= spec.min_prefix_len) out.push_back({&traces[idx], len});
  }
  return out;
}

}  // namespace

ExperimentReport run_experiment(const std::vector<Trace>& traces, const KnowledgeBase& kb,
                                const ExperimentConfig& cfg) {
  if (cfg.variants.empty()) throw ValidationError("experiment needs at least one variant");
  if (cfg.seeds.empty()) throw ValidationError("experiment needs at least one seed");

  std::vector<SeedData> per_seed(cfg.seeds.size());
  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    SeedData& sd = per_seed[s];
    if (cfg.split.mode == SplitMode::temporal) {
      sd.split = temporal_split(traces, cfg.split);
    } else {
      sd.split = compliance_aware_split(traces, cfg.split, kb,
                                        Rng(cfg.seeds[s]).split(0x73706c6974ULL));
    }
    sd.train = generate_prefixes(traces, sd.split.train, cfg.split.min_prefix_len,
                                 cfg.split.max_prefix_len);
    sd.val = generate_prefixes(traces, sd.split.validation, cfg.split.min_prefix_len,
                               cfg.split.max_prefix_len);
    sd.test = test_prefixes(traces, sd.split.test, cfg.split, cfg.single_prefix_per_trace);
    sd.schema = EncodingSchema::fit(sd.train, cfg.base.encoder.time_features,
                                    cfg.exclude_attrs);
  }

  const std::size_t n_runs = cfg.variants.size() * cfg.seeds.size();
  ExperimentReport report;
  report.runs.resize(n_runs);

  auto run_one = [&](std::size_t task) {
    const std::size_t vi = task / cfg.seeds.size();
    const std::size_t si = task % cfg.seeds.size();
    RunRecord& rec = report.runs[task];
    rec.variant = cfg.variants[vi];
    rec.seed = cfg.seeds[si];
    const SeedData& sd = per_seed[si];
    rec.train_compliant_fraction = sd.split.train_compliant_fraction;
    rec.test_compliant_fraction = sd.split.test_compliant_fraction;
    try {
      TrainConfig rc = cfg.base;
      rc.variant = rec.variant;
      rc.seed = rec.seed;
      rc.mode = cfg.split.mode;
      Trainer trainer(sd.train, sd.val, sd.schema, kb, rc);
      TrainOutput out = trainer.run();
      if (sd.test.empty()) throw ValidationError("test split produced no prefixes");
      std::vector<double> preds = trainer.predict(sd.test);
      std::vector<int> labels(sd.test.size());
      for (std::size_t i = 0; i < sd.test.size(); ++i)
        labels[i] = sd.test[i].label() == Label::positive ? 1 : 0;
      rec.test_metrics = compute_metrics(preds, labels);
      rec.tau_used = out.tau_used;
      rec.gating = std::move(out.gating);
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, n_runs));
  if (jobs == 1) {
    for (std::size_t task = 0; task < n_runs; ++task) run_one(task);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        while (true) {
          std::size_t task = next.fetch_add(1);
          if (task >= n_runs) return;
          run_one(task);
        }
      });
    for (auto& t : workers) t.join();
  }

  for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
    VariantSummary sum;
    sum.variant = cfg.variants[vi];
    std::vector<double> accs, f1s;
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      const RunRecord& rec = report.runs[vi * cfg.seeds.size() + si];
      if (!rec.ok) continue;
      accs.push_back(rec.test_metrics.accuracy);
      f1s.push_back(rec.test_metrics.f1);
    }
    sum.completed = accs.size();
    auto mean_std = [](const std::vector<double>& xs, double& mean, double& sd) {
      if (xs.empty()) {
        mean = sd = 0.0;
        return;
      }
      mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      sd = 0.0;
      for (double x : xs) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(xs.size()));
    };
    mean_std(accs, sum.accuracy_mean, sum.accuracy_std);
    mean_std(f1s, sum.f1_mean, sum.f1_std);
    report.summaries.push_back(std::move(sum));
  }
  return report;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_experiment_csv(const std::string& path, const ExperimentReport& report,
                          const std::string& dataset_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write experiment csv: " + path);
  out << "dataset,variant,runs,accuracy_mean,accuracy_std,f1_mean,f1_std\n";
  for (const auto& s : report.summaries) {
    out << csv_escape(dataset_name) << "," << variant_str(s.variant) << ","
        << s.completed << "," << fmt_double(s.accuracy_mean) << ","
        << fmt_double(s.accuracy_std) << "," << fmt_double(s.f1_mean) << ","
        << fmt_double(s.f1_std) << "\n";
  }
}

void write_experiment_json(const std::string& path, const ExperimentReport& report,
                           const std::string& dataset_name) {
  json j;
  j["dataset"] = dataset_name;
  j["runs"] = json::array();
  for (const auto& r : report.runs) {
    json run = {{"variant", variant_str(r.variant)},
                {"seed", r.seed},
                {"ok", r.ok},
                {"train_compliant_fraction", r.train_compliant_fraction},
                {"test_compliant_fraction", r.test_compliant_fraction}};
    if (r.ok) {
      run["accuracy"] = r.test_metrics.accuracy;
      run["f1"] = r.test_metrics.f1;
      run["macro_f1"] = r.test_metrics.macro_f1;
      run["tau"] = r.tau_used;
      if (!r.gating.empty()) {
        json g = json::array();
        for (const auto& rec : r.gating)
          g.push_back({{"rule_id", rec.rule_id},
                       {"mean_sat", rec.mean_sat},
                       {"var_sat", rec.var_sat},
                       {"score", rec.score},
                       {"kept", rec.kept},
                       {"vacuous", rec.vacuous}});
        run["gating"] = std::move(g);
      }
    } else {
      run["error"] = r.error;
    }
    j["runs"].push_back(std::move(run));
  }
  j["summaries"] = json::array();
  for (const auto& s : report.summaries)
    j["summaries"].push_back({{"variant", variant_str(s.variant)},
                              {"runs", s.completed},
                              {"accuracy_mean", s.accuracy_mean},
                              {"accuracy_std", s.accuracy_std},
                              {"f1_mean", s.f1_mean},
                              {"f1_std", s.f1_std}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write experiment json: " + path);
  out << j.dump(2) << "\n";
}

void write_gating_csv(const std::string& path, const std::vector<GatingRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write gating csv: " + path);
  out << "rule_id,mean_sat,var_sat,score,kept,vacuous,n_samples\n";
  for (const auto& r : records)
    out << r.rule_id << "," << fmt_double(r.mean_sat) << "," << fmt_double(r.var_sat)
        << "," << fmt_double(r.score) << "," << (r.kept ? 1 : 0) << ","
        << (r.vacuous ? 1 : 0) << "," << r.n_samples << "\n";
}

}  // namespace nesy
