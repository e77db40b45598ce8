#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "nesy/error.hpp"
#include "nesy/evaluation.hpp"
#include "nesy/metrics.hpp"

using namespace nesy;

TEST_SUITE_BEGIN("evaluation");

TEST_CASE("metrics") {
  SUBCASE("perfect predictions") {
    auto m = compute_metrics({0.9, 0.1, 0.8, 0.2}, {1, 0, 1, 0});
    CHECK(m.accuracy == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.support_positive == 2);
    CHECK(m.support_negative == 2);
  }
  SUBCASE("all-negative predictor on balanced labels") {
    auto m = compute_metrics({0.1, 0.2, 0.3, 0.4}, {1, 0, 1, 0});
    CHECK(m.accuracy == 0.5);
    CHECK(m.f1 == 0.0);
  }
  SUBCASE("hand-counted confusion matrix") {
    // preds [0.9,0.2,0.6,0.4], labels [1,0,0,1]: TP=1 FP=1 FN=1 TN=1
    auto m = compute_metrics({0.9, 0.2, 0.6, 0.4}, {1, 0, 0, 1});
    CHECK(m.tp == 1);
    CHECK(m.fp == 1);
    CHECK(m.fn == 1);
    CHECK(m.tn == 1);
    CHECK(m.accuracy == 0.5);
    CHECK(m.f1 == 0.5);
  }
  SUBCASE("empty input is an error") {
    CHECK_THROWS_AS(compute_metrics({}, {}), ValidationError);
    CHECK_THROWS_AS(compute_metrics({0.5}, {1, 0}), ValidationError);
  }
  SUBCASE("agrees with a brute-force confusion count on random inputs") {
    Rng rng(17);
    for (int rep = 0; rep < 50; ++rep) {
      std::size_t n = 1 + rng.index(40);
      std::vector<double> preds(n);
      std::vector<int> labels(n);
      for (std::size_t i = 0; i < n; ++i) {
        preds[i] = rng.uniform();
        labels[i] = rng.bernoulli(0.5) ? 1 : 0;
      }
      auto m = compute_metrics(preds, labels);
      std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        bool p = preds[i] >= 0.5, y = labels[i] == 1;
        tp += p && y;
        fp += p && !y;
        fn += !p && y;
        tn += !p && !y;
      }
      CHECK(m.tp == tp);
      CHECK(m.fp == fp);
      CHECK(m.tn == tn);
      CHECK(m.fn == fn);
      double acc = double(tp + tn) / double(n);
      CHECK(m.accuracy == doctest::Approx(acc));
      double prec = tp + fp ? double(tp) / double(tp + fp) : 0.0;
      double rec = tp + fn ? double(tp) / double(tp + fn) : 0.0;
      double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
      CHECK(m.f1 == doctest::Approx(f1));
    }
  }
}

TEST_CASE("synthetic generator") {
  SUBCASE("requested trace count is produced") {
    SynthSpec spec;
    spec.n_traces = 200;
    CHECK(generate_synthetic_log(spec, 1).traces.size() == 200);
  }
  SUBCASE("zero noise, one planted rule: label equals the antecedent") {
    SynthSpec spec;
    spec.n_traces = 300;
    spec.planted_rules = 1;
    spec.label_noise = 0.0;
    auto synth = generate_synthetic_log(spec, 3);
    auto kb = build_kb(parse_rules_or_throw(synth.rules_dsl));
    REQUIRE(kb.k_p.size() == 1);
    for (const auto& t : synth.traces) {
      Prefix p{&t, t.events.size()};
      auto v = wait_time_hours(p, "Surg", "ATB");
      bool fired = v.defined && v.num > 2.0;
      CHECK((t.label == Label::positive) == fired);
    }
  }
  SUBCASE("firing probability concentrates around the requested rate") {
    SynthSpec spec;
    spec.n_traces = 1000;
    spec.planted_rules = 1;
    spec.fire_prob = 0.3;
    auto synth = generate_synthetic_log(spec, 9);
    std::size_t fired = 0;
    for (const auto& t : synth.traces)
      if (t.label == Label::positive) ++fired;
    double rate = static_cast<double>(fired) / 1000.0;
    CHECK(rate >= 0.25);
    CHECK(rate <= 0.35);
  }
  SUBCASE("invalid spec is rejected") {
    SynthSpec spec;
    spec.fire_prob = 1.4;
    CHECK_THROWS_AS(generate_synthetic_log(spec, 1), ValidationError);
  }
  SUBCASE("generated rules parse and adversarial mirrors invert the consequent") {
    SynthSpec spec;
    spec.planted_rules = 3;
    spec.min_len = 5;
    spec.n_traces = 30;
    auto synth = generate_synthetic_log(spec, 4);
    auto correct = parse_rules_or_throw(synth.rules_dsl);
    auto adversarial = parse_rules_or_throw(synth.adversarial_rules_dsl);
    REQUIRE(correct.size() == 3);
    REQUIRE(adversarial.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(correct[i].consequent_positive);
      CHECK_FALSE(adversarial[i].consequent_positive);
    }
  }
  SUBCASE("marker mode controls the compliant fraction") {
    SynthSpec spec;
    spec.n_traces = 400;
    spec.marker_prob = 0.15;
    spec.noncompliant_label_noise = 0.4;
    auto synth = generate_synthetic_log(spec, 6);
    auto kb = build_kb(parse_rules_or_throw(synth.compliance_rules_dsl));
    std::size_t compliant = 0;
    for (const auto& t : synth.traces)
      if (crisp_trace_compliance(t, kb).overall) ++compliant;
    double frac = static_cast<double>(compliant) / 400.0;
    CHECK(frac >= 0.10);
    CHECK(frac <= 0.20);
  }
  SUBCASE("csv round-trip preserves traces and labels") {
    SynthSpec spec;
    spec.n_traces = 25;
    auto synth = generate_synthetic_log(spec, 8);
    write_log_csv("synth_test.csv", synth.traces);
    auto loaded = load_log("synth_test.csv");
    std::remove("synth_test.csv");
    REQUIRE(loaded.size() == synth.traces.size());
    label_traces(loaded, parse_label_rule("attr(outcome) = 1"));
    for (std::size_t i = 0; i < loaded.size(); ++i) {
      CHECK(loaded[i].case_id == synth.traces[i].case_id);
      CHECK(loaded[i].events.size() == synth.traces[i].events.size());
      CHECK(loaded[i].label == synth.traces[i].label);
      for (std::size_t e = 0; e < loaded[i].events.size(); ++e) {
        CHECK(loaded[i].events[e].activity == synth.traces[i].events[e].activity);
        CHECK(loaded[i].events[e].timestamp_ms == synth.traces[i].events[e].timestamp_ms);
      }
    }
  }
}

namespace {

ExperimentConfig tiny_experiment(const std::vector<Variant>& variants,
                                 std::vector<std::uint64_t> seeds) {
  ExperimentConfig cfg;
  cfg.variants = variants;
  cfg.seeds = std::move(seeds);
  cfg.split.train_fraction = 0.7;
  cfg.split.validation_fraction = 0.15;
  cfg.split.min_prefix_len = 2;
  cfg.split.max_prefix_len = 4;
  cfg.base.epochs_pretrain = 1;
  cfg.base.epochs_finetune = 2;
  cfg.base.encoder.hidden = 6;
  cfg.base.encoder.embed_dim = 3;
  cfg.base.tau = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("experiment harness") {
  SynthSpec spec;
  spec.n_traces = 40;
  spec.min_len = 4;
  spec.max_len = 6;
  auto synth = generate_synthetic_log(spec, 12);
  auto kb = build_kb(parse_rules_or_throw(synth.rules_dsl));

  SUBCASE("five seeds produce five runs with a std over five values") {
    auto cfg = tiny_experiment({Variant::ltn_data}, {1, 2, 3, 4, 5});
    auto report = run_experiment(synth.traces, kb, cfg);
    CHECK(report.runs.size() == 5);
    REQUIRE(report.summaries.size() == 1);
    CHECK(report.summaries[0].completed == 5);
  }
  SUBCASE("one seed gives zero std") {
    auto cfg = tiny_experiment({Variant::ltn_data}, {1});
    auto report = run_experiment(synth.traces, kb, cfg);
    CHECK(report.summaries[0].accuracy_std == 0.0);
    CHECK(report.summaries[0].f1_std == 0.0);
  }
  SUBCASE("variant order does not change per-run metrics") {
    auto ab = run_experiment(synth.traces, kb,
                             tiny_experiment({Variant::bce_baseline, Variant::ltn_data},
                                             {1, 2}));
    auto ba = run_experiment(synth.traces, kb,
                             tiny_experiment({Variant::ltn_data, Variant::bce_baseline},
                                             {1, 2}));
    // match runs by (variant, seed)
    for (const auto& r1 : ab.runs) {
      bool found = false;
      for (const auto& r2 : ba.runs)
        if (r1.variant == r2.variant && r1.seed == r2.seed) {
          found = true;
          CHECK(r1.test_metrics.accuracy == r2.test_metrics.accuracy);
          CHECK(r1.test_metrics.f1 == r2.test_metrics.f1);
        }
      CHECK(found);
    }
  }
  SUBCASE("parallel execution matches sequential") {
    auto cfg = tiny_experiment({Variant::bce_baseline, Variant::ltn_data}, {1, 2});
    auto seq = run_experiment(synth.traces, kb, cfg);
    cfg.jobs = 2;
    auto par = run_experiment(synth.traces, kb, cfg);
    REQUIRE(seq.runs.size() == par.runs.size());
    for (std::size_t i = 0; i < seq.runs.size(); ++i) {
      CHECK(seq.runs[i].test_metrics.accuracy == par.runs[i].test_metrics.accuracy);
      CHECK(seq.runs[i].test_metrics.f1 == par.runs[i].test_metrics.f1);
    }
  }
  SUBCASE("summary csv is deterministic for identical reports") {
    auto cfg = tiny_experiment({Variant::ltn_data}, {1, 2});
    auto report = run_experiment(synth.traces, kb, cfg);
    write_experiment_csv("exp_a.csv", report, "synth");
    write_experiment_csv("exp_b.csv", report, "synth");
    std::ifstream a("exp_a.csv"), b("exp_b.csv");
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    CHECK(sa.find("dataset,variant") == 0);
    std::remove("exp_a.csv");
    std::remove("exp_b.csv");
  }
  SUBCASE("a failing run is recorded and the rest continue") {
    auto cfg = tiny_experiment({Variant::two_stage, Variant::ltn_data}, {1});
    cfg.base.tau.reset();
    cfg.split.validation_fraction = 0.0;  // two_stage with tau=auto will fail
    auto report = run_experiment(synth.traces, kb, cfg);
    REQUIRE(report.runs.size() == 2);
    CHECK_FALSE(report.runs[0].ok);
    CHECK(!report.runs[0].error.empty());
    CHECK(report.runs[1].ok);
  }
}

TEST_SUITE_END();
