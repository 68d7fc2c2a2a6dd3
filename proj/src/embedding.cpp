#include "sqdmap/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sqdmap {

DenseNetworkSpec::DenseNetworkSpec(std::vector<int> layer_sizes,
                                   Activation activation,
                                   std::vector<std::vector<double>> weights,
                                   std::vector<std::vector<double>> biases)
    : layer_sizes_(std::move(layer_sizes)),
      activation_(activation),
      weights_(std::move(weights)),
      biases_(std::move(biases)) {
  if (layer_sizes_.size() < 2) {
    throw std::invalid_argument("network needs at least input and output sizes");
  }
  for (int s : layer_sizes_) {
    if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
  }
  const std::size_t num_layers = layer_sizes_.size() - 1;
  if (weights_.size() != num_layers || biases_.size() != num_layers) {
    throw std::invalid_argument("dimension mismatch");
  }
  for (std::size_t k = 0; k < num_layers; ++k) {
    const std::size_t in = static_cast<std::size_t>(layer_sizes_[k]);
    const std::size_t out = static_cast<std::size_t>(layer_sizes_[k + 1]);
    if (weights_[k].size() != in * out || biases_[k].size() != out) {
      throw std::invalid_argument("dimension mismatch");
    }
  }
}

DenseNetworkSpec DenseNetworkSpec::identity(int dim) {
  std::vector<double> w(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    w[static_cast<std::size_t>(i) * dim + i] = 1.0;
  }
  return DenseNetworkSpec({dim, dim}, Activation::kIdentity, {std::move(w)},
                          {std::vector<double>(dim, 0.0)});
}

DenseNetworkSpec DenseNetworkSpec::zero(int input_dim, int output_dim) {
  return DenseNetworkSpec(
      {input_dim, output_dim}, Activation::kIdentity,
      {std::vector<double>(static_cast<std::size_t>(input_dim) * output_dim, 0.0)},
      {std::vector<double>(output_dim, 0.0)});
}

DenseNetworkSpec DenseNetworkSpec::seeded(std::vector<int> layer_sizes,
                                          Activation activation,
                                          RngState& rng) {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    const int in = layer_sizes[k];
    const int out = layer_sizes[k + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(static_cast<std::size_t>(in) * out);
    for (double& v : w) v = rng.uniform(-scale, scale);
    weights.push_back(std::move(w));
    biases.emplace_back(out, 0.0);
  }
  return DenseNetworkSpec(std::move(layer_sizes), activation, std::move(weights),
                          std::move(biases));
}

std::vector<double> DenseNetworkSpec::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_dim()) {
    throw std::invalid_argument("dimension mismatch");
  }
  std::vector<double> x(input.begin(), input.end());
  const std::size_t num_layers = weights_.size();
  for (std::size_t k = 0; k < num_layers; ++k) {
    const std::size_t in = static_cast<std::size_t>(layer_sizes_[k]);
    const std::size_t out = static_cast<std::size_t>(layer_sizes_[k + 1]);
    std::vector<double> y(out);
    const std::vector<double>& w = weights_[k];
    for (std::size_t r = 0; r < out; ++r) {
      double acc = biases_[k][r];
      const double* row = w.data() + r * in;
      for (std::size_t c = 0; c < in; ++c) {
        acc += row[c] * x[c];
      }
      y[r] = acc;
    }
    if (k + 1 < num_layers && activation_ == Activation::kRelu) {
      for (double& v : y) v = v > 0.0 ? v : 0.0;
    }
    x = std::move(y);
  }
  return x;
}

void save_network(const DenseNetworkSpec& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open weight file for writing: " + path);
  out << "mlpw 1\n";
  out << "activation "
      << (net.activation() == Activation::kRelu ? "relu" : "identity") << "\n";
  out << "sizes";
  for (int s : net.layer_sizes()) out << ' ' << s;
  out << "\n";
  char buf[32];
  for (std::size_t k = 0; k < net.weights().size(); ++k) {
    for (double v : net.weights()[k]) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << '\n';
    }
    for (double v : net.biases()[k]) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing weight file: " + path);
}

DenseNetworkSpec load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weight file: " + path);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "mlpw" || version != 1) {
    throw std::runtime_error("bad weight file header: " + path);
  }
  std::string key, act_name;
  if (!(in >> key >> act_name) || key != "activation" ||
      (act_name != "relu" && act_name != "identity")) {
    throw std::runtime_error("bad weight file activation: " + path);
  }
  if (!(in >> key) || key != "sizes") {
    throw std::runtime_error("bad weight file sizes: " + path);
  }
  std::vector<int> sizes;
  {
    std::string rest;
    std::getline(in, rest);
    std::istringstream ss(rest);
    int s;
    while (ss >> s) sizes.push_back(s);
  }
  if (sizes.size() < 2) throw std::runtime_error("bad weight file sizes: " + path);
  std::vector<std::vector<double>> weights, biases;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const std::size_t in_dim = static_cast<std::size_t>(sizes[k]);
    const std::size_t out_dim = static_cast<std::size_t>(sizes[k + 1]);
    std::vector<double> w(in_dim * out_dim), b(out_dim);
    for (double& v : w) {
      if (!(in >> v)) throw std::runtime_error("truncated weight file: " + path);
    }
    for (double& v : b) {
      if (!(in >> v)) throw std::runtime_error("truncated weight file: " + path);
    }
    weights.push_back(std::move(w));
    biases.push_back(std::move(b));
  }
  return DenseNetworkSpec(std::move(sizes),
                          act_name == "relu" ? Activation::kRelu
                                             : Activation::kIdentity,
                          std::move(weights), std::move(biases));
}

void EmbeddingConfig::validate() const {
  if (dim <= 0 || dim % 4 != 0) {
    throw std::invalid_argument("embedding dimension must be a positive multiple of 4");
  }
  if (n_points < 2) throw std::invalid_argument("n_points must be >= 2");
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  if (!(pe_temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  coord_normalizer.validate();
}

ClassEmbeddingTable::ClassEmbeddingTable(std::vector<std::vector<double>> rows)
    : rows_(std::move(rows)) {
  if (rows_.empty()) throw std::invalid_argument("empty class table");
  for (const auto& r : rows_) {
    if (r.size() != rows_[0].size()) {
      throw std::invalid_argument("dimension mismatch");
    }
  }
}

ClassEmbeddingTable ClassEmbeddingTable::seeded(int num_classes, int dim_half,
                                                RngState& rng) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(num_classes));
  for (auto& r : rows) {
    r.resize(static_cast<std::size_t>(dim_half));
    for (double& v : r) v = rng.uniform(-1.0, 1.0);
  }
  return ClassEmbeddingTable(std::move(rows));
}

const std::vector<double>& ClassEmbeddingTable::row(int cls) const {
  if (cls < 0 || cls >= num_classes()) {
    throw std::invalid_argument("class id out of range");
  }
  return rows_[static_cast<std::size_t>(cls)];
}

std::vector<double> positional_encode(double x, int out_dim, double temperature) {
  if (out_dim <= 0 || out_dim % 2 != 0) {
    throw std::invalid_argument("positional encoding dimension must be even");
  }
  std::vector<double> out(static_cast<std::size_t>(out_dim));
  for (int i = 0; i < out_dim / 2; ++i) {
    const double freq =
        std::pow(temperature, 2.0 * static_cast<double>(i) / out_dim);
    const double arg = x / freq;
    out[static_cast<std::size_t>(2 * i)] = std::sin(arg);
    out[static_cast<std::size_t>(2 * i + 1)] = std::cos(arg);
  }
  return out;
}

namespace {

double normalize_coord(double v, double half_extent) {
  return (v + half_extent) / (2.0 * half_extent);
}

}  // namespace

std::vector<double> point_embedding(Point2 p, const EmbeddingConfig& cfg,
                                    const DenseNetworkSpec& mlp_pt) {
  cfg.validate();
  if (mlp_pt.input_dim() != cfg.dim / 2 || mlp_pt.output_dim() != cfg.dim / 2) {
    throw std::invalid_argument("dimension mismatch");
  }
  const int quarter = cfg.dim / 4;
  std::vector<double> pe =
      positional_encode(normalize_coord(p.x, cfg.coord_normalizer.half_length),
                        quarter, cfg.pe_temperature);
  std::vector<double> pe_y =
      positional_encode(normalize_coord(p.y, cfg.coord_normalizer.half_width),
                        quarter, cfg.pe_temperature);
  pe.insert(pe.end(), pe_y.begin(), pe_y.end());
  return mlp_pt.forward(pe);
}

std::vector<double> instance_pos_embedding(std::span<const Point2> points,
                                           const EmbeddingConfig& cfg,
                                           const DenseNetworkSpec& mlp_pt,
                                           const DenseNetworkSpec& mlp_pos) {
  cfg.validate();
  if (static_cast<int>(points.size()) != cfg.n_points) {
    throw std::invalid_argument("wrong point count");
  }
  if (mlp_pos.input_dim() != cfg.n_points * cfg.dim / 2 ||
      mlp_pos.output_dim() != cfg.dim / 2) {
    throw std::invalid_argument("dimension mismatch");
  }
  std::vector<double> concat;
  concat.reserve(static_cast<std::size_t>(cfg.n_points) * cfg.dim / 2);
  for (const Point2& p : points) {
    std::vector<double> pe = point_embedding(p, cfg, mlp_pt);
    concat.insert(concat.end(), pe.begin(), pe.end());
  }
  return mlp_pos.forward(concat);
}

std::vector<double> content_embedding(int cls, const ClassEmbeddingTable& table) {
  return table.row(cls);
}

QueryEmbedding fuse_denoise_query(std::span<const double> content,
                                  std::span<const double> pos,
                                  const DenseNetworkSpec& mlp_fuse) {
  if (content.size() != pos.size() ||
      mlp_fuse.input_dim() != static_cast<int>(content.size() + pos.size()) ||
      mlp_fuse.output_dim() != mlp_fuse.input_dim()) {
    throw std::invalid_argument("dimension mismatch");
  }
  std::vector<double> concat;
  concat.reserve(content.size() + pos.size());
  concat.insert(concat.end(), content.begin(), content.end());
  concat.insert(concat.end(), pos.begin(), pos.end());
  return QueryEmbedding{mlp_fuse.forward(concat)};
}

NetworkBundle NetworkBundle::seeded(const EmbeddingConfig& cfg,
                                    std::uint64_t seed) {
  cfg.validate();
  RngState rng(seed);
  const int half = cfg.dim / 2;
  DenseNetworkSpec mlp_pt =
      DenseNetworkSpec::seeded({half, half}, Activation::kIdentity, rng);
  DenseNetworkSpec mlp_pos = DenseNetworkSpec::seeded(
      {cfg.n_points * half, half}, Activation::kIdentity, rng);
  DenseNetworkSpec mlp_fuse =
      DenseNetworkSpec::seeded({cfg.dim, cfg.dim}, Activation::kIdentity, rng);
  DenseNetworkSpec phi_t =
      DenseNetworkSpec::seeded({cfg.dim + 9, cfg.dim}, Activation::kIdentity, rng);
  ClassEmbeddingTable table =
      ClassEmbeddingTable::seeded(cfg.num_classes, half, rng);
  return NetworkBundle{cfg, std::move(mlp_pt), std::move(mlp_pos),
                       std::move(mlp_fuse), std::move(phi_t), std::move(table)};
}

QueryEmbedding build_denoise_query(const MapElement& element,
                                   const NetworkBundle& nets) {
  std::vector<double> content = content_embedding(element.cls, nets.class_table);
  std::vector<double> pos = instance_pos_embedding(
      element.points.span(), nets.config, nets.mlp_pt, nets.mlp_pos);
  return fuse_denoise_query(content, pos, nets.mlp_fuse);
}

}  // namespace sqdmap
