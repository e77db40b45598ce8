#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nesy/eventlog.hpp"
#include "nesy/tensor.hpp"

namespace nesy {

enum class Backbone { recurrent, pooled_mlp };
enum class CellType { gru, lstm };

std::string backbone_str(Backbone b);
Backbone parse_backbone(const std::string& s);
std::string cell_str(CellType c);
CellType parse_cell(const std::string& s);

struct EncoderConfig {
  Backbone backbone = Backbone::recurrent;
  CellType cell = CellType::gru;
  std::size_t layers = 1;
  std::size_t hidden = 32;
  std::size_t embed_dim = 16;
  // Appends standardized hours-since-previous-event and hours-since-start
  // to the numeric inputs so temporal rules have learnable counterparts.
  bool time_features = true;
};

struct Vocab {
  std::vector<std::string> items;  // sorted, unique

  static Vocab build(std::vector<std::string> values);
  // Unseen values map to the out-of-vocabulary bucket (last index).
  std::size_t index_of(const std::string& v) const;
  std::size_t oov_index() const { return items.size(); }
  std::size_t size_with_oov() const { return items.size() + 1; }
};

// Vocabularies and normalization statistics, fitted on training data only.
struct EncodingSchema {
  Vocab activities;
  std::vector<std::string> cat_attrs;
  std::vector<Vocab> cat_vocabs;
  std::vector<std::string> num_attrs;  // includes derived time features
  std::vector<double> num_mean;
  std::vector<double> num_std;
  bool time_features = true;

  // `exclude_attrs` keeps label-bearing columns (e.g. an outcome column the
  // labeler reads) out of the encoder inputs.
  static EncodingSchema fit(const std::vector<Prefix>& train_prefixes,
                            bool time_features = true,
                            const std::vector<std::string>& exclude_attrs = {});
  std::size_t numeric_width() const { return num_attrs.size(); }
};

// Fixed-width padded batch with masks; padding positions never reach any
// aggregation.
struct EncodedBatch {
  std::size_t batch_size = 0;
  std::size_t max_len = 0;
  std::vector<std::size_t> act_ids;               // [B*T], b-major
  std::vector<std::vector<std::size_t>> cat_ids;  // per categorical attr, [B*T]
  std::vector<std::vector<double>> num_vals;      // per numeric feature, [B*T]
  std::vector<double> mask;                       // [B*T], 1 real / 0 pad
  std::vector<int> labels;                        // [B]
};

EncodedBatch encode_batch(const std::vector<Prefix>& prefixes, const EncodingSchema& schema);
EncodedBatch encode_batch(const std::vector<Prefix>& prefixes,
                          const std::vector<std::size_t>& subset,
                          const EncodingSchema& schema);

// Named parameter registry; registration order is fixed by construction so
// optimizer trajectories are reproducible.
struct Params {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  void add(const std::string& name, Tensor t);
  Params clone() const;  // deep copy of values, fresh gradients
};

// Glorot-style uniform initialization, fully determined by the seed.
Params init_params(const EncoderConfig& cfg, const EncodingSchema& schema,
                   std::uint64_t seed);

// Truth degrees in [TRUTH_EPS, 1-TRUTH_EPS], one per prefix. Recurrent
// backbone: embeddings -> stacked cells -> last unmasked hidden -> linear
// -> sigmoid. pooled_mlp: embeddings -> masked mean pool -> 2-layer MLP ->
// sigmoid. Throws RuntimeFailure when outputs go non-finite.
Tensor predicate_forward(const EncodedBatch& batch, const Params& params,
                         const EncoderConfig& cfg, const EncodingSchema& schema);

struct Checkpoint {
  EncoderConfig config;
  EncodingSchema schema;
  Params params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nesy
