#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "nesy/error.hpp"
#include "nesy/logic.hpp"
#include "nesy/model.hpp"

using namespace nesy;
using nesy::testing::make_trace;
using nesy::testing::whole;

TEST_SUITE_BEGIN("model");

namespace {

std::vector<Trace> small_log() {
  std::vector<Trace> traces;
  traces.push_back(make_trace("a", {{"Rev", 0.0}, {"Exam", 1.0}}, Label::positive));
  traces.push_back(make_trace("b", {{"Rev", 0.0}, {"Lab", 0.5}, {"Surg", 2.0},
                                    {"ATB", 5.0}},
                              Label::negative));
  traces[0].events[0].attributes["amount"] = AttrValue::numeric(12.0);
  traces[1].events[1].attributes["amount"] = AttrValue::numeric(8.0);
  traces[1].case_attributes["dept"] = AttrValue::categorical("surgery");
  return traces;
}

}  // namespace

TEST_CASE("padding and masks") {
  auto traces = small_log();
  std::vector<Prefix> prefixes{{&traces[0], 2}, {&traces[1], 4}};
  auto schema = EncodingSchema::fit(prefixes);
  auto batch = encode_batch(prefixes, schema);
  CHECK(batch.batch_size == 2);
  CHECK(batch.max_len == 4);
  CHECK(std::vector<double>(batch.mask.begin(), batch.mask.begin() + 4) ==
        std::vector<double>{1, 1, 0, 0});
  CHECK(std::vector<double>(batch.mask.begin() + 4, batch.mask.end()) ==
        std::vector<double>{1, 1, 1, 1});
  CHECK(batch.labels == std::vector<int>{1, 0});
}

TEST_CASE("z-score standardization") {
  // two events with amount 8 and 12: mean 10, population std 2
  auto traces = small_log();
  std::vector<Prefix> prefixes{{&traces[0], 2}, {&traces[1], 4}};
  auto schema = EncodingSchema::fit(prefixes, /*time_features=*/false);
  REQUIRE(schema.num_attrs == std::vector<std::string>{"amount"});
  CHECK(schema.num_mean[0] == doctest::Approx(10.0));
  CHECK(schema.num_std[0] == doctest::Approx(2.0));
  auto batch = encode_batch(prefixes, schema);
  CHECK(batch.num_vals[0][0] == doctest::Approx(1.0));  // (12-10)/2
}

TEST_CASE("out-of-vocabulary activities map to the OOV bucket") {
  auto traces = small_log();
  std::vector<Prefix> train{{&traces[0], 2}};
  auto schema = EncodingSchema::fit(train);
  Trace unseen = make_trace("u", {{"Zzz", 0.0}, {"Rev", 1.0}});
  std::vector<Prefix> test{whole(unseen)};
  auto batch = encode_batch(test, schema);
  CHECK(batch.act_ids[0] == schema.activities.oov_index());
  CHECK(batch.act_ids[1] == schema.activities.index_of("Rev"));
}

TEST_CASE("zero-event prefix is an error") {
  auto traces = small_log();
  std::vector<Prefix> bad{{&traces[0], 0}};
  auto schema = EncodingSchema::fit(bad);
  CHECK_THROWS_AS(encode_batch(bad, schema), ValidationError);
}

TEST_CASE("schema exclusions keep the outcome column away from the encoder") {
  auto traces = small_log();
  traces[0].case_attributes["outcome"] = AttrValue::numeric(1);
  traces[1].case_attributes["outcome"] = AttrValue::numeric(0);
  std::vector<Prefix> prefixes{whole(traces[0]), whole(traces[1])};
  auto schema = EncodingSchema::fit(prefixes, true, {"outcome"});
  for (const auto& name : schema.num_attrs) CHECK(name != "outcome");
}

TEST_CASE("parameter initialization") {
  auto traces = small_log();
  std::vector<Prefix> prefixes{whole(traces[0]), whole(traces[1])};
  auto schema = EncodingSchema::fit(prefixes);
  EncoderConfig cfg;
  cfg.hidden = 8;
  cfg.embed_dim = 4;

  SUBCASE("seed determinism") {
    auto p1 = init_params(cfg, schema, 42);
    auto p2 = init_params(cfg, schema, 42);
    REQUIRE(p1.names == p2.names);
    for (std::size_t i = 0; i < p1.tensors.size(); ++i)
      CHECK(p1.tensors[i].values() == p2.tensors[i].values());
    auto p3 = init_params(cfg, schema, 43);
    bool any_diff = false;
    for (std::size_t i = 0; i < p1.tensors.size(); ++i)
      any_diff = any_diff || p1.tensors[i].values() != p3.tensors[i].values();
    CHECK(any_diff);
  }
  SUBCASE("weights respect the per-tensor glorot bound") {
    auto p = init_params(cfg, schema, 7);
    for (std::size_t i = 0; i < p.tensors.size(); ++i) {
      const auto& shape = p.tensors[i].shape();
      if (shape.size() != 2) continue;  // biases are zero
      const double limit = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      for (double v : p.tensors[i].values()) {
        CHECK(v <= limit);
        CHECK(v >= -limit);
      }
    }
  }
}

TEST_CASE("predicate forward contracts") {
  auto traces = small_log();
  std::vector<Prefix> prefixes{{&traces[0], 2}, {&traces[1], 3}, {&traces[1], 4}};
  auto schema = EncodingSchema::fit(prefixes);

  for (auto backbone : {Backbone::recurrent, Backbone::pooled_mlp}) {
    EncoderConfig cfg;
    cfg.backbone = backbone;
    cfg.hidden = 8;
    cfg.embed_dim = 4;
    cfg.layers = 2;
    auto params = init_params(cfg, schema, 5);

    SUBCASE((backbone == Backbone::recurrent ? "recurrent outputs" : "pooled outputs")) {
      auto out = predicate_forward(encode_batch(prefixes, schema), params, cfg, schema);
      REQUIRE(out.size() == 3);
      for (double v : out.values()) {
        CHECK(v >= TRUTH_EPS);
        CHECK(v <= 1.0 - TRUTH_EPS);
      }
      // identical prefixes in one batch produce identical outputs
      std::vector<Prefix> twice{prefixes[0], prefixes[0]};
      auto out2 = predicate_forward(encode_batch(twice, schema), params, cfg, schema);
      CHECK(out2.values()[0] == out2.values()[1]);
    }
  }
}

TEST_CASE("padding invariance and batch permutation equivariance") {
  auto traces = small_log();
  std::vector<Prefix> short_only{{&traces[0], 2}};
  std::vector<Prefix> mixed{{&traces[0], 2}, {&traces[1], 4}};
  std::vector<Prefix> swapped{{&traces[1], 4}, {&traces[0], 2}};
  auto schema = EncodingSchema::fit(mixed);
  for (auto backbone : {Backbone::recurrent, Backbone::pooled_mlp}) {
    EncoderConfig cfg;
    cfg.backbone = backbone;
    cfg.hidden = 6;
    cfg.embed_dim = 3;
    auto params = init_params(cfg, schema, 11);
    double alone =
        predicate_forward(encode_batch(short_only, schema), params, cfg, schema).values()[0];
    auto batched = predicate_forward(encode_batch(mixed, schema), params, cfg, schema);
    CHECK(batched.values()[0] == alone);  // padding must not leak
    auto perm = predicate_forward(encode_batch(swapped, schema), params, cfg, schema);
    CHECK(perm.values()[1] == batched.values()[0]);
    CHECK(perm.values()[0] == batched.values()[1]);
  }
}

TEST_CASE("model gradients match finite differences") {
  auto traces = small_log();
  std::vector<Prefix> prefixes{{&traces[0], 2}, {&traces[1], 3}, {&traces[1], 4}};
  auto schema = EncodingSchema::fit(prefixes);
  for (auto [backbone, cell] :
       {std::pair{Backbone::recurrent, CellType::gru},
        std::pair{Backbone::recurrent, CellType::lstm},
        std::pair{Backbone::pooled_mlp, CellType::gru}}) {
    EncoderConfig cfg;
    cfg.backbone = backbone;
    cfg.cell = cell;
    cfg.hidden = 4;
    cfg.embed_dim = 3;
    auto params = init_params(cfg, schema, 3);
    auto batch = encode_batch(prefixes, schema);
    auto rep = nesy::testing::check_gradients(
        [&] { return mean(predicate_forward(batch, params, cfg, schema)); },
        params.tensors);
    char label[64];
    std::snprintf(label, sizeof label, "backbone=%d cell=%d", static_cast<int>(backbone),
                  static_cast<int>(cell));
    CHECK_MESSAGE(rep.pass, label << " " << rep.worst_detail);
  }
}

TEST_CASE("NaN guard fires on corrupted parameters") {
  auto traces = small_log();
  std::vector<Prefix> prefixes{{&traces[0], 2}};
  auto schema = EncodingSchema::fit(prefixes);
  EncoderConfig cfg;
  cfg.hidden = 4;
  cfg.embed_dim = 3;
  auto params = init_params(cfg, schema, 1);
  std::vector<double> bad = params.get("out_w").values();
  bad[0] = std::nan("");
  params.get("out_w").set_values(bad);
  CHECK_THROWS_AS(predicate_forward(encode_batch(prefixes, schema), params, cfg, schema),
                  RuntimeFailure);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  auto traces = small_log();
  std::vector<Prefix> prefixes{{&traces[0], 2}, {&traces[1], 4}};
  auto schema = EncodingSchema::fit(prefixes);
  EncoderConfig cfg;
  cfg.hidden = 5;
  cfg.embed_dim = 3;
  Checkpoint ckpt{cfg, schema, init_params(cfg, schema, 99)};

  const std::string path = "test_checkpoint.json";
  save_checkpoint(path, ckpt);
  Checkpoint loaded = load_checkpoint(path);
  std::remove(path.c_str());

  REQUIRE(loaded.params.names == ckpt.params.names);
  for (std::size_t i = 0; i < ckpt.params.tensors.size(); ++i)
    CHECK(loaded.params.tensors[i].values() == ckpt.params.tensors[i].values());
  CHECK(loaded.schema.activities.items == ckpt.schema.activities.items);
  CHECK(loaded.schema.num_mean == ckpt.schema.num_mean);

  auto before = predicate_forward(encode_batch(prefixes, schema), ckpt.params, cfg, schema);
  auto after = predicate_forward(encode_batch(prefixes, loaded.schema), loaded.params,
                                 loaded.config, loaded.schema);
  CHECK(before.values() == after.values());
}

TEST_SUITE_END();
