#include "nesy/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "nesy/error.hpp"
#include "nesy/logic.hpp"
#include "nesy/rng.hpp"
#include "nesy/timeutil.hpp"

namespace nesy {

using nlohmann::json;

std::string backbone_str(Backbone b) {
  return b == Backbone::recurrent ? "recurrent" : "pooled_mlp";
}

Backbone parse_backbone(const std::string& s) {
  if (s == "recurrent") return Backbone::recurrent;
  if (s == "pooled_mlp") return Backbone::pooled_mlp;
  throw ValidationError("unknown backbone '" + s + "'");
}

std::string cell_str(CellType c) { return c == CellType::gru ? "gru" : "lstm"; }

CellType parse_cell(const std::string& s) {
  if (s == "gru") return CellType::gru;
  if (s == "lstm") return CellType::lstm;
  throw ValidationError("unknown recurrent cell '" + s + "'");
}

Vocab Vocab::build(std::vector<std::string> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  Vocab v;
  v.items = std::move(values);
  return v;
}

std::size_t Vocab::index_of(const std::string& v) const {
  auto it = std::lower_bound(items.begin(), items.end(), v);
  if (it != items.end() && *it == v) return static_cast<std::size_t>(it - items.begin());
  return oov_index();
}

namespace {

constexpr const char* kDeltaHours = "__delta_hours";
constexpr const char* kElapsedHours = "__elapsed_hours";

// event attribute first, then case attribute
const AttrValue* lookup_attr(const Prefix& l, std::size_t event_idx, const std::string& name) {
  const auto& ev = l.event(event_idx);
  auto it = ev.attributes.find(name);
  if (it != ev.attributes.end()) return &it->second;
  auto cit = l.case_attributes().find(name);
  if (cit != l.case_attributes().end()) return &cit->second;
  return nullptr;
}

double time_feature(const Prefix& l, std::size_t i, bool elapsed) {
  if (elapsed) return ms_to_hours(l.event(i).timestamp_ms - l.event(0).timestamp_ms);
  if (i == 0) return 0.0;
  return ms_to_hours(l.event(i).timestamp_ms - l.event(i - 1).timestamp_ms);
}

}  // namespace

EncodingSchema EncodingSchema::fit(const std::vector<Prefix>& train_prefixes,
                                   bool time_features,
                                   const std::vector<std::string>& exclude_attrs) {
  EncodingSchema schema;
  schema.time_features = time_features;
  const std::set<std::string> excluded(exclude_attrs.begin(), exclude_attrs.end());

  std::vector<std::string> acts;
  std::set<std::string> cat_names, num_names;
  for (const auto& pfx : train_prefixes) {
    for (std::size_t i = 0; i < pfx.size(); ++i) {
      acts.push_back(pfx.event(i).activity);
      for (const auto& [name, val] : pfx.event(i).attributes)
        if (!excluded.count(name)) (val.is_numeric() ? num_names : cat_names).insert(name);
    }
    for (const auto& [name, val] : pfx.case_attributes())
      if (!excluded.count(name)) (val.is_numeric() ? num_names : cat_names).insert(name);
  }
  schema.activities = Vocab::build(std::move(acts));

  for (const auto& name : cat_names) {
    std::vector<std::string> vals;
    for (const auto& pfx : train_prefixes)
      for (std::size_t i = 0; i < pfx.size(); ++i)
        if (const AttrValue* v = lookup_attr(pfx, i, name); v && !v->is_numeric())
          vals.push_back(v->cat);
    schema.cat_attrs.push_back(name);
    schema.cat_vocabs.push_back(Vocab::build(std::move(vals)));
  }

  schema.num_attrs.assign(num_names.begin(), num_names.end());
  if (time_features) {
    schema.num_attrs.push_back(kDeltaHours);
    schema.num_attrs.push_back(kElapsedHours);
  }

  schema.num_mean.assign(schema.num_attrs.size(), 0.0);
  schema.num_std.assign(schema.num_attrs.size(), 1.0);
  for (std::size_t f = 0; f < schema.num_attrs.size(); ++f) {
    const std::string& name = schema.num_attrs[f];
    const bool is_delta = name == kDeltaHours;
    const bool is_elapsed = name == kElapsedHours;
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& pfx : train_prefixes) {
      for (std::size_t i = 0; i < pfx.size(); ++i) {
        double v;
        if (is_delta || is_elapsed) {
          v = time_feature(pfx, i, is_elapsed);
        } else {
          const AttrValue* av = lookup_attr(pfx, i, name);
          if (!av || !av->is_numeric()) continue;
          v = av->num;
        }
        sum += v;
        sq += v * v;
        ++n;
      }
    }
    if (n > 0) {
      double mean = sum / static_cast<double>(n);
      double var = sq / static_cast<double>(n) - mean * mean;
      schema.num_mean[f] = mean;
      schema.num_std[f] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
  }
  return schema;
}

EncodedBatch encode_batch(const std::vector<Prefix>& prefixes,
                          const std::vector<std::size_t>& subset,
                          const EncodingSchema& schema) {
  EncodedBatch batch;
  batch.batch_size = subset.size();
  for (std::size_t idx : subset) {
    if (prefixes[idx].size() == 0)
      throw ValidationError("cannot encode a zero-event prefix");
    batch.max_len = std::max(batch.max_len, prefixes[idx].size());
  }
  const std::size_t B = batch.batch_size, T = batch.max_len;
  batch.act_ids.assign(B * T, schema.activities.oov_index());
  batch.cat_ids.assign(schema.cat_attrs.size(), std::vector<std::size_t>(B * T, 0));
  batch.num_vals.assign(schema.num_attrs.size(), std::vector<double>(B * T, 0.0));
  batch.mask.assign(B * T, 0.0);
  batch.labels.resize(B);

  for (std::size_t a = 0; a < schema.cat_attrs.size(); ++a)
    std::fill(batch.cat_ids[a].begin(), batch.cat_ids[a].end(),
              schema.cat_vocabs[a].oov_index());

  for (std::size_t b = 0; b < B; ++b) {
    const Prefix& pfx = prefixes[subset[b]];
    batch.labels[b] = pfx.label() == Label::positive ? 1 : 0;
    for (std::size_t t = 0; t < pfx.size(); ++t) {
      const std::size_t at = b * T + t;
      batch.mask[at] = 1.0;
      batch.act_ids[at] = schema.activities.index_of(pfx.event(t).activity);
      for (std::size_t a = 0; a < schema.cat_attrs.size(); ++a) {
        const AttrValue* v = lookup_attr(pfx, t, schema.cat_attrs[a]);
        if (v && !v->is_numeric())
          batch.cat_ids[a][at] = schema.cat_vocabs[a].index_of(v->cat);
      }
      for (std::size_t f = 0; f < schema.num_attrs.size(); ++f) {
        const std::string& name = schema.num_attrs[f];
        double raw;
        if (name == kDeltaHours) raw = time_feature(pfx, t, false);
        else if (name == kElapsedHours) raw = time_feature(pfx, t, true);
        else {
          const AttrValue* v = lookup_attr(pfx, t, name);
          if (!v || !v->is_numeric()) continue;  // absent -> stays at mean (0)
          raw = v->num;
        }
        batch.num_vals[f][at] = (raw - schema.num_mean[f]) / schema.num_std[f];
      }
    }
  }
  return batch;
}

EncodedBatch encode_batch(const std::vector<Prefix>& prefixes, const EncodingSchema& schema) {
  std::vector<std::size_t> all(prefixes.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return encode_batch(prefixes, all, schema);
}

Tensor& Params::get(const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return tensors[i];
  throw ValidationError("unknown parameter '" + name + "'");
}

const Tensor& Params::get(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return tensors[i];
  throw ValidationError("unknown parameter '" + name + "'");
}

void Params::add(const std::string& name, Tensor t) {
  names.push_back(name);
  tensors.push_back(std::move(t));
}

Params Params::clone() const {
  Params out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<double> vals = tensors[i].values();
    out.add(names[i], Tensor::from(std::move(vals), tensors[i].shape(), true));
  }
  return out;
}

namespace {

Tensor glorot(Rng& rng, std::size_t rows, std::size_t cols) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> vals(rows * cols);
  for (double& v : vals) v = rng.uniform(-limit, limit);
  return Tensor::from(std::move(vals), {rows, cols}, true);
}

void add_gate(Params& p, Rng& rng, const std::string& prefix, std::size_t in,
              std::size_t hidden) {
  p.add(prefix + "_w", glorot(rng, in, hidden));
  p.add(prefix + "_u", glorot(rng, hidden, hidden));
  p.add(prefix + "_b", Tensor::zeros({hidden}, true));
}

}  // namespace

Params init_params(const EncoderConfig& cfg, const EncodingSchema& schema,
                   std::uint64_t seed) {
  if (cfg.hidden < 1 || cfg.embed_dim < 1 || cfg.layers < 1)
    throw ValidationError("encoder sizes must be >= 1");
  Rng rng = Rng(seed).split(0x6d6f64656cULL);
  Params p;
  const std::size_t E = cfg.embed_dim;
  p.add("embed_act", glorot(rng, schema.activities.size_with_oov(), E));
  for (std::size_t a = 0; a < schema.cat_attrs.size(); ++a)
    p.add("embed_cat_" + std::to_string(a),
          glorot(rng, schema.cat_vocabs[a].size_with_oov(), E));
  const bool has_num = schema.numeric_width() > 0;
  if (has_num) {
    p.add("num_w", glorot(rng, schema.numeric_width(), E));
    p.add("num_b", Tensor::zeros({E}, true));
  }
  const std::size_t input_width = E * (1 + schema.cat_attrs.size() + (has_num ? 1 : 0));

  if (cfg.backbone == Backbone::recurrent) {
    for (std::size_t layer = 0; layer < cfg.layers; ++layer) {
      const std::size_t in = layer == 0 ? input_width : cfg.hidden;
      const std::string lp = "l" + std::to_string(layer);
      if (cfg.cell == CellType::gru) {
        add_gate(p, rng, lp + "_update", in, cfg.hidden);
        add_gate(p, rng, lp + "_reset", in, cfg.hidden);
        add_gate(p, rng, lp + "_cand", in, cfg.hidden);
      } else {
        add_gate(p, rng, lp + "_in", in, cfg.hidden);
        add_gate(p, rng, lp + "_forget", in, cfg.hidden);
        add_gate(p, rng, lp + "_out", in, cfg.hidden);
        add_gate(p, rng, lp + "_cell", in, cfg.hidden);
      }
    }
    p.add("out_w", glorot(rng, cfg.hidden, 1));
    p.add("out_b", Tensor::zeros({1}, true));
  } else {
    p.add("mlp1_w", glorot(rng, input_width, cfg.hidden));
    p.add("mlp1_b", Tensor::zeros({cfg.hidden}, true));
    p.add("mlp2_w", glorot(rng, cfg.hidden, 1));
    p.add("mlp2_b", Tensor::zeros({1}, true));
  }
  return p;
}

namespace {

// [B,E] inputs for one timestep
Tensor step_input(const EncodedBatch& batch, const Params& params,
                  const EncodingSchema& schema, std::size_t t) {
  const std::size_t B = batch.batch_size, T = batch.max_len;
  std::vector<std::size_t> act_idx(B);
  for (std::size_t b = 0; b < B; ++b) act_idx[b] = batch.act_ids[b * T + t];
  std::vector<Tensor> parts;
  parts.push_back(index_rows(params.get("embed_act"), act_idx));
  for (std::size_t a = 0; a < schema.cat_attrs.size(); ++a) {
    std::vector<std::size_t> idx(B);
    for (std::size_t b = 0; b < B; ++b) idx[b] = batch.cat_ids[a][b * T + t];
    parts.push_back(index_rows(params.get("embed_cat_" + std::to_string(a)), idx));
  }
  if (schema.numeric_width() > 0) {
    std::vector<double> num(B * schema.numeric_width());
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t f = 0; f < schema.numeric_width(); ++f)
        num[b * schema.numeric_width() + f] = batch.num_vals[f][b * T + t];
    Tensor nm = Tensor::from(std::move(num), {B, schema.numeric_width()});
    parts.push_back(matmul(nm, params.get("num_w")) + params.get("num_b"));
  }
  return parts.size() == 1 ? parts[0] : concat(parts, 1);
}

Tensor gate(const Params& p, const std::string& prefix, const Tensor& x, const Tensor& h) {
  return matmul(x, p.get(prefix + "_w")) + matmul(h, p.get(prefix + "_u")) +
         p.get(prefix + "_b");
}

}  // namespace

Tensor predicate_forward(const EncodedBatch& batch, const Params& params,
                         const EncoderConfig& cfg, const EncodingSchema& schema) {
  const std::size_t B = batch.batch_size, T = batch.max_len, H = cfg.hidden;
  if (B == 0) throw ValidationError("predicate_forward on empty batch");

  Tensor out;
  if (cfg.backbone == Backbone::recurrent) {
    std::vector<Tensor> h(cfg.layers, Tensor::zeros({B, H}));
    std::vector<Tensor> c(cfg.layers, Tensor::zeros({B, H}));
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> mk(B);
      for (std::size_t b = 0; b < B; ++b) mk[b] = batch.mask[b * T + t];
      Tensor mask_col = Tensor::from(std::move(mk), {B, 1});
      Tensor keep = 1.0 - mask_col;
      Tensor x = step_input(batch, params, schema, t);
      for (std::size_t layer = 0; layer < cfg.layers; ++layer) {
        const std::string lp = "l" + std::to_string(layer);
        if (cfg.cell == CellType::gru) {
          Tensor z = sigmoid(gate(params, lp + "_update", x, h[layer]));
          Tensor r = sigmoid(gate(params, lp + "_reset", x, h[layer]));
          Tensor cand = tanh(matmul(x, params.get(lp + "_cand_w")) +
                             matmul(r * h[layer], params.get(lp + "_cand_u")) +
                             params.get(lp + "_cand_b"));
          Tensor hnew = (1.0 - z) * h[layer] + z * cand;
          h[layer] = mask_col * hnew + keep * h[layer];
        } else {
          Tensor i = sigmoid(gate(params, lp + "_in", x, h[layer]));
          Tensor f = sigmoid(gate(params, lp + "_forget", x, h[layer]));
          Tensor o = sigmoid(gate(params, lp + "_out", x, h[layer]));
          Tensor g = tanh(gate(params, lp + "_cell", x, h[layer]));
          Tensor cnew = f * c[layer] + i * g;
          Tensor hnew = o * tanh(cnew);
          c[layer] = mask_col * cnew + keep * c[layer];
          h[layer] = mask_col * hnew + keep * h[layer];
        }
        x = h[layer];
      }
    }
    out = matmul(h[cfg.layers - 1], params.get("out_w")) + params.get("out_b");
  } else {
    Tensor count = Tensor::zeros({B, 1});
    bool first = true;
    Tensor sum_x;
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> mk(B);
      for (std::size_t b = 0; b < B; ++b) mk[b] = batch.mask[b * T + t];
      Tensor mask_col = Tensor::from(std::move(mk), {B, 1});
      Tensor x = step_input(batch, params, schema, t) * mask_col;
      sum_x = first ? x : sum_x + x;
      count = count + mask_col;
      first = false;
    }
    Tensor pooled = sum_x / count;
    Tensor hidden = tanh(matmul(pooled, params.get("mlp1_w")) + params.get("mlp1_b"));
    out = matmul(hidden, params.get("mlp2_w")) + params.get("mlp2_b");
  }

  // NaN check must precede the clamp: min/max comparisons absorb NaN
  for (double v : out.values())
    if (!std::isfinite(v))
      throw RuntimeFailure("predicate produced a non-finite output (NaN guard)");
  return clamp(sigmoid(reshape(out, {B})), TRUTH_EPS, 1.0 - TRUTH_EPS);
}

// -- checkpoint ---------------------------------------------------------------

namespace {

json vocab_to_json(const Vocab& v) { return json{{"items", v.items}}; }

Vocab vocab_from_json(const json& j) {
  Vocab v;
  v.items = j.at("items").get<std::vector<std::string>>();
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json j;
  j["format_version"] = 1;
  j["config"] = {{"backbone", backbone_str(ckpt.config.backbone)},
                 {"cell", cell_str(ckpt.config.cell)},
                 {"layers", ckpt.config.layers},
                 {"hidden", ckpt.config.hidden},
                 {"embed_dim", ckpt.config.embed_dim},
                 {"time_features", ckpt.config.time_features}};
  json schema;
  schema["activities"] = vocab_to_json(ckpt.schema.activities);
  schema["cat_attrs"] = ckpt.schema.cat_attrs;
  schema["cat_vocabs"] = json::array();
  for (const auto& v : ckpt.schema.cat_vocabs)
    schema["cat_vocabs"].push_back(vocab_to_json(v));
  schema["num_attrs"] = ckpt.schema.num_attrs;
  schema["num_mean"] = ckpt.schema.num_mean;
  schema["num_std"] = ckpt.schema.num_std;
  schema["time_features"] = ckpt.schema.time_features;
  j["schema"] = std::move(schema);
  json params = json::array();
  for (std::size_t i = 0; i < ckpt.params.names.size(); ++i) {
    params.push_back({{"name", ckpt.params.names[i]},
                      {"shape", ckpt.params.tensors[i].shape()},
                      {"values", ckpt.params.tensors[i].values()}});
  }
  j["params"] = std::move(params);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write checkpoint: " + path);
  out << j.dump();
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  json j = json::parse(in, nullptr, true);
  Checkpoint ckpt;
  const auto& jc = j.at("config");
  ckpt.config.backbone = parse_backbone(jc.at("backbone").get<std::string>());
  ckpt.config.cell = parse_cell(jc.at("cell").get<std::string>());
  ckpt.config.layers = jc.at("layers").get<std::size_t>();
  ckpt.config.hidden = jc.at("hidden").get<std::size_t>();
  ckpt.config.embed_dim = jc.at("embed_dim").get<std::size_t>();
  ckpt.config.time_features = jc.at("time_features").get<bool>();
  const auto& js = j.at("schema");
  ckpt.schema.activities = vocab_from_json(js.at("activities"));
  ckpt.schema.cat_attrs = js.at("cat_attrs").get<std::vector<std::string>>();
  for (const auto& v : js.at("cat_vocabs")) ckpt.schema.cat_vocabs.push_back(vocab_from_json(v));
  ckpt.schema.num_attrs = js.at("num_attrs").get<std::vector<std::string>>();
  ckpt.schema.num_mean = js.at("num_mean").get<std::vector<double>>();
  ckpt.schema.num_std = js.at("num_std").get<std::vector<double>>();
  ckpt.schema.time_features = js.at("time_features").get<bool>();
  for (const auto& p : j.at("params")) {
    ckpt.params.add(p.at("name").get<std::string>(),
                    Tensor::from(p.at("values").get<std::vector<double>>(),
                                 p.at("shape").get<Shape>(), true));
  }
  return ckpt;
}

}  // namespace nesy
