#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sqdmap/geometry.hpp"
#include "sqdmap/rng.hpp"

namespace sqdmap {

enum class Activation { kIdentity, kRelu };

/// Plain fully-connected network: per layer y = W x + b, with the activation
/// applied between layers (never after the last). Weights are row-major
/// (out x in). Evaluation is deterministic; specs are immutable once built.
class DenseNetworkSpec {
 public:
  DenseNetworkSpec(std::vector<int> layer_sizes, Activation activation,
                   std::vector<std::vector<double>> weights,
                   std::vector<std::vector<double>> biases);

  /// Single-layer identity map (unit diagonal, zero bias).
  static DenseNetworkSpec identity(int dim);

  /// Single-layer zero map (zero weights and bias): forward() is all zeros.
  static DenseNetworkSpec zero(int input_dim, int output_dim);

  /// Random weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero bias.
  static DenseNetworkSpec seeded(std::vector<int> layer_sizes,
                                 Activation activation, RngState& rng);

  int input_dim() const { return layer_sizes_.front(); }
  int output_dim() const { return layer_sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  Activation activation() const { return activation_; }
  const std::vector<std::vector<double>>& weights() const { return weights_; }
  const std::vector<std::vector<double>>& biases() const { return biases_; }

  /// Throws std::invalid_argument("dimension mismatch") on a wrong-size input.
  std::vector<double> forward(std::span<const double> input) const;

 private:
  std::vector<int> layer_sizes_;
  Activation activation_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> biases_;
};

/// Textual weight-file round trip (header with layer sizes and activation,
/// then per-layer weights and biases). Format documented in the README.
void save_network(const DenseNetworkSpec& net, const std::string& path);
DenseNetworkSpec load_network(const std::string& path);

struct EmbeddingConfig {
  int dim = 256;  // decoder embedding dimension D, divisible by 4
  int n_points = 20;
  int num_classes = 3;
  double pe_temperature = 10000.0;
  PerceptionRange coord_normalizer{30.0, 15.0};

  void validate() const;
};

struct QueryEmbedding {
  std::vector<double> values;

  bool operator==(const QueryEmbedding&) const = default;
};

/// One learnable row per class, dimension D/2.
class ClassEmbeddingTable {
 public:
  explicit ClassEmbeddingTable(std::vector<std::vector<double>> rows);
  static ClassEmbeddingTable seeded(int num_classes, int dim_half,
                                    RngState& rng);

  int num_classes() const { return static_cast<int>(rows_.size()); }
  int dim() const { return rows_.empty() ? 0 : static_cast<int>(rows_[0].size()); }
  const std::vector<double>& row(int cls) const;

 private:
  std::vector<std::vector<double>> rows_;
};

/// Sinusoidal encoding of one scalar into out_dim values: entry 2i is
/// sin(x / temperature^(2i/out_dim)), entry 2i+1 the matching cos. x is the
/// coordinate normalized to [0, 1] over the perception range.
std::vector<double> positional_encode(double x, int out_dim, double temperature);

/// One point's embedding: PE(x) ++ PE(y) (each D/4) through mlp_pt,
/// yielding D/2.
std::vector<double> point_embedding(Point2 p, const EmbeddingConfig& cfg,
                                    const DenseNetworkSpec& mlp_pt);

/// Concatenated point embeddings (n*D/2) through mlp_pos, yielding D/2.
/// Requires exactly cfg.n_points points.
std::vector<double> instance_pos_embedding(std::span<const Point2> points,
                                           const EmbeddingConfig& cfg,
                                           const DenseNetworkSpec& mlp_pt,
                                           const DenseNetworkSpec& mlp_pos);

/// Per-class learnable content vector (D/2), by lookup.
std::vector<double> content_embedding(int cls, const ClassEmbeddingTable& table);

/// Concat(content, pos) through mlp_fuse, yielding the final D-dim query.
QueryEmbedding fuse_denoise_query(std::span<const double> content,
                                  std::span<const double> pos,
                                  const DenseNetworkSpec& mlp_fuse);

/// The networks a pipeline run needs, plus the config they were sized for.
/// phi_t is the residual propagation net (input D + 9 for the flattened
/// homogeneous transform, output D).
struct NetworkBundle {
  EmbeddingConfig config;
  DenseNetworkSpec mlp_pt;
  DenseNetworkSpec mlp_pos;
  DenseNetworkSpec mlp_fuse;
  DenseNetworkSpec phi_t;
  ClassEmbeddingTable class_table;

  static NetworkBundle seeded(const EmbeddingConfig& cfg, std::uint64_t seed);
};

/// Full query construction for one element: content + instance position
/// embeddings fused into a D-dim query.
QueryEmbedding build_denoise_query(const MapElement& element,
                                   const NetworkBundle& nets);

}  // namespace sqdmap
