#include "veclstm/models.hpp"

#include <json.hpp>

#include <random>

#include "veclstm/error.hpp"
#include "veclstm/nn/init.hpp"
#include "veclstm/nn/pool.hpp"
#include "veclstm/nn/softmax.hpp"

namespace veclstm {

using nn::Activation;
using Eigen::Index;
using Eigen::MatrixXd;

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::LstmBaseline: return "lstm";
    case Architecture::VecLstm: return "veclstm";
    case Architecture::Hybrid: return "hybrid";
  }
  return "lstm";
}

std::optional<Architecture> parse_architecture(std::string_view name) {
  if (name == "lstm") return Architecture::LstmBaseline;
  if (name == "veclstm") return Architecture::VecLstm;
  if (name == "hybrid") return Architecture::Hybrid;
  return std::nullopt;
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Lstm: return "lstm";
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
  }
  return "dense";
}

int ModelSpec::sequence_width() const {
  int width = features;
  for (const auto& layer : sequence_branch)
    if (layer.kind == LayerKind::Lstm) width = layer.units;
  return width;
}

int ModelSpec::grid_width() const {
  if (!has_grid_branch()) return 0;
  int length = grid_size;
  int channels = grid_size;
  for (const auto& layer : grid_branch) {
    switch (layer.kind) {
      case LayerKind::Conv1d:
        length = length - layer.kernel + 1;
        channels = layer.units;
        break;
      case LayerKind::MaxPool1d: length = length / layer.pool; break;
      default: break;
    }
  }
  return length * channels;
}

std::vector<int> ModelSpec::layer_widths() const {
  std::vector<int> widths;
  for (const auto* branch : {&sequence_branch, &grid_branch, &head})
    for (const auto& layer : *branch)
      if (layer.units > 0) widths.push_back(layer.units);
  return widths;
}

bool ModelSpec::same_structure(const ModelSpec& other) const {
  ModelSpec a = *this;
  a.architecture = other.architecture;
  a.seed = other.seed;
  return a == other;
}

namespace {

ModelSpec lstm_stack(Architecture arch, int features) {
  if (features < 1) throw Error(ErrorKind::OutOfRange, "features must be >= 1");
  ModelSpec spec;
  spec.architecture = arch;
  spec.features = features;
  spec.sequence_branch = {
      LayerSpec{LayerKind::Lstm, 100, 0, 0, Activation::Tanh, true},
      LayerSpec{LayerKind::Lstm, 50, 0, 0, Activation::Tanh, false},
  };
  spec.head = {LayerSpec{LayerKind::Dense, kNumClasses, 0, 0, Activation::Identity, false}};
  return spec;
}

}  // namespace

ModelSpec build_lstm_stack(int features) { return lstm_stack(Architecture::LstmBaseline, features); }

ModelSpec build_veclstm(int features) { return lstm_stack(Architecture::VecLstm, features); }

ModelSpec build_hybrid(const HybridOptions& o) {
  if (o.features < 1 || o.lstm_units.empty() || o.conv_filters < 1 || o.kernel < 1 || o.pool < 1 ||
      o.grid_size < o.kernel || o.fusion_units < 1)
    throw Error(ErrorKind::OutOfRange, "invalid hybrid options");
  ModelSpec spec;
  spec.architecture = Architecture::Hybrid;
  spec.features = o.features;
  spec.grid_size = o.grid_size;
  for (std::size_t k = 0; k < o.lstm_units.size(); ++k)
    spec.sequence_branch.push_back(
        LayerSpec{LayerKind::Lstm, o.lstm_units[k], 0, 0, Activation::Tanh, k + 1 < o.lstm_units.size()});
  spec.grid_branch = {
      LayerSpec{LayerKind::Conv1d, o.conv_filters, o.kernel, 0, Activation::Relu, false},
      LayerSpec{LayerKind::MaxPool1d, 0, 0, o.pool, Activation::Identity, false},
      LayerSpec{LayerKind::Flatten, 0, 0, 0, Activation::Identity, false},
  };
  spec.head = {
      LayerSpec{LayerKind::Dense, o.fusion_units, 0, 0, Activation::Relu, false},
      LayerSpec{LayerKind::Dense, kNumClasses, 0, 0, Activation::Identity, false},
  };
  return spec;
}

std::size_t param_count(const ModelSpec& spec) {
  std::size_t total = 0;
  std::size_t in = static_cast<std::size_t>(spec.features);
  for (const auto& layer : spec.sequence_branch) {
    const auto h = static_cast<std::size_t>(layer.units);
    total += 4 * h * (in + h) + 4 * h;
    in = h;
  }
  std::size_t channels = static_cast<std::size_t>(spec.grid_size);
  for (const auto& layer : spec.grid_branch) {
    if (layer.kind != LayerKind::Conv1d) continue;
    const auto k = static_cast<std::size_t>(layer.units);
    total += k * channels * static_cast<std::size_t>(layer.kernel) + k;
    channels = k;
  }
  in = static_cast<std::size_t>(spec.sequence_width() + spec.grid_width());
  for (const auto& layer : spec.head) {
    const auto out = static_cast<std::size_t>(layer.units);
    total += out * in + out;
    in = out;
  }
  return total;
}

std::string to_json(const ModelSpec& spec) {
  using nlohmann::json;
  auto layer_json = [](const LayerSpec& l, const char* branch) {
    json j{{"branch", branch}, {"kind", to_string(l.kind)}};
    if (l.units) j["units"] = l.units;
    if (l.kernel) j["kernel"] = l.kernel;
    if (l.pool) j["pool"] = l.pool;
    if (l.kind != LayerKind::Flatten && l.kind != LayerKind::MaxPool1d)
      j["activation"] = to_string(l.activation);
    if (l.kind == LayerKind::Lstm) j["return_sequences"] = l.return_sequences;
    return j;
  };
  json layers = json::array();
  for (const auto& l : spec.sequence_branch) layers.push_back(layer_json(l, "sequence"));
  for (const auto& l : spec.grid_branch) layers.push_back(layer_json(l, "grid"));
  for (const auto& l : spec.head) layers.push_back(layer_json(l, "head"));
  json input{{"timesteps", spec.timesteps}, {"features", spec.features}};
  if (spec.has_grid_branch()) input["grid_size"] = spec.grid_size;
  const json j{{"architecture", to_string(spec.architecture)},
               {"input", input},
               {"layers", layers},
               {"output", "softmax"},
               {"lstm_output_activation", to_string(spec.lstm_emit)},
               {"param_count", param_count(spec)},
               {"seed", spec.seed}};
  return j.dump(2);
}

ModelParams ModelParams::zeros(const ModelSpec& spec) {
  ModelParams p;
  Index in = spec.features;
  for (const auto& layer : spec.sequence_branch) {
    p.lstm.push_back(nn::LstmParams<double>::zeros(in, layer.units));
    in = layer.units;
  }
  Index channels = spec.grid_size;
  for (const auto& layer : spec.grid_branch) {
    if (layer.kind != LayerKind::Conv1d) continue;
    p.conv.push_back(nn::Conv1dParams<double>::zeros(layer.units, channels, layer.kernel));
    channels = layer.units;
  }
  in = spec.sequence_width() + spec.grid_width();
  for (const auto& layer : spec.head) {
    p.dense.push_back(nn::DenseParams<double>::zeros(in, layer.units));
    in = layer.units;
  }
  return p;
}

namespace {

template <typename Params, typename View>
std::vector<View> collect_views(Params& p) {
  std::vector<View> views;
  auto add = [&views](auto& m) { views.emplace_back(m.data(), m.size()); };
  for (auto& l : p.lstm) {
    for (auto* W : l.weights()) add(*W);
    for (auto* b : l.biases()) add(*b);
  }
  for (auto& c : p.conv) {
    for (auto& tap : c.taps) add(tap);
    add(c.bias);
  }
  for (auto& d : p.dense) {
    add(d.W);
    add(d.b);
  }
  return views;
}

template <typename Derived>
std::vector<double> row_major(const Eigen::MatrixBase<Derived>& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

template <typename Derived>
void load_row_major(Eigen::MatrixBase<Derived>& m, const std::vector<double>& values) {
  std::size_t k = 0;
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = values[k++];
}

constexpr std::array<const char*, 4> kGateNames = {"i", "f", "o", "g"};

}  // namespace

std::vector<Eigen::Map<Eigen::VectorXd>> ModelParams::flat_views() {
  return collect_views<ModelParams, Eigen::Map<Eigen::VectorXd>>(*this);
}

std::vector<Eigen::Map<const Eigen::VectorXd>> ModelParams::flat_views() const {
  return collect_views<const ModelParams, Eigen::Map<const Eigen::VectorXd>>(*this);
}

std::size_t ModelParams::size() const {
  std::size_t n = 0;
  for (const auto& v : flat_views()) n += static_cast<std::size_t>(v.size());
  return n;
}

bool ModelParams::operator==(const ModelParams& other) const {
  const auto a = flat_views();
  const auto b = other.flat_views();
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k].size() != b[k].size() || a[k] != b[k]) return false;
  return true;
}

std::vector<nn::NamedBlock> ModelParams::named_blocks() const {
  std::vector<nn::NamedBlock> blocks;
  auto u32 = [](Index v) { return static_cast<std::uint32_t>(v); };
  for (std::size_t l = 0; l < lstm.size(); ++l) {
    const std::string prefix = "lstm" + std::to_string(l) + ".";
    const auto weights = lstm[l].weights();
    const auto biases = lstm[l].biases();
    for (int g = 0; g < 4; ++g) {
      blocks.push_back({prefix + "W_" + kGateNames[g], {u32(weights[g]->rows()), u32(weights[g]->cols())},
                        row_major(*weights[g])});
      blocks.push_back({prefix + "b_" + kGateNames[g], {u32(biases[g]->size())}, row_major(*biases[g])});
    }
  }
  for (std::size_t l = 0; l < conv.size(); ++l) {
    const auto& c = conv[l];
    const std::string prefix = "conv" + std::to_string(l) + ".";
    std::vector<double> kernel;
    kernel.reserve(static_cast<std::size_t>(c.filters() * c.channels() * c.width()));
    for (Index f = 0; f < c.filters(); ++f)
      for (Index ch = 0; ch < c.channels(); ++ch)
        for (const auto& tap : c.taps) kernel.push_back(tap(f, ch));
    blocks.push_back({prefix + "kernel", {u32(c.filters()), u32(c.channels()), u32(c.width())}, kernel});
    blocks.push_back({prefix + "bias", {u32(c.filters())}, row_major(c.bias)});
  }
  for (std::size_t l = 0; l < dense.size(); ++l) {
    const std::string prefix = "dense" + std::to_string(l) + ".";
    blocks.push_back({prefix + "W", {u32(dense[l].W.rows()), u32(dense[l].W.cols())}, row_major(dense[l].W)});
    blocks.push_back({prefix + "b", {u32(dense[l].b.size())}, row_major(dense[l].b)});
  }
  return blocks;
}

void ModelParams::load_blocks(std::span<const nn::NamedBlock> blocks) {
  const auto expected = named_blocks();
  if (blocks.size() != expected.size())
    throw Error(ErrorKind::ShapeMismatch, "checkpoint has " + std::to_string(blocks.size()) +
                                              " blocks, model expects " + std::to_string(expected.size()));
  for (std::size_t k = 0; k < blocks.size(); ++k)
    if (blocks[k].name != expected[k].name || blocks[k].extents != expected[k].extents)
      throw Error(ErrorKind::ShapeMismatch, "checkpoint block '" + blocks[k].name + "' does not match '" +
                                                expected[k].name + "'");
  std::size_t k = 0;
  for (auto& l : lstm) {
    for (int g = 0; g < 4; ++g) {
      load_row_major(*l.weights()[g], blocks[k++].values);
      load_row_major(*l.biases()[g], blocks[k++].values);
    }
  }
  for (auto& c : conv) {
    const auto& kernel = blocks[k++].values;
    std::size_t idx = 0;
    for (Index f = 0; f < c.filters(); ++f)
      for (Index ch = 0; ch < c.channels(); ++ch)
        for (auto& tap : c.taps) tap(f, ch) = kernel[idx++];
    load_row_major(c.bias, blocks[k++].values);
  }
  for (auto& d : dense) {
    load_row_major(d.W, blocks[k++].values);
    load_row_major(d.b, blocks[k++].values);
  }
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams p;
  Index in = spec.features;
  for (const auto& layer : spec.sequence_branch) {
    p.lstm.push_back(nn::init_lstm<double>(in, layer.units, rng));
    in = layer.units;
  }
  Index channels = spec.grid_size;
  for (const auto& layer : spec.grid_branch) {
    if (layer.kind != LayerKind::Conv1d) continue;
    p.conv.push_back(nn::init_conv1d<double>(layer.units, channels, layer.kernel, rng));
    channels = layer.units;
  }
  in = spec.sequence_width() + spec.grid_width();
  for (const auto& layer : spec.head) {
    p.dense.push_back(nn::init_dense<double>(in, layer.units, rng));
    in = layer.units;
  }
  return p;
}

// ---------------------------------------------------------------------------

struct Model::Trace {
  std::vector<nn::LstmSequenceCache<double>> lstm;
  struct GridStage {
    LayerKind kind;
    nn::Conv1dCache<double> conv;
    nn::Sequence<double> conv_pre;
    nn::MaxPoolCache<double> pool;
  };
  std::vector<GridStage> grid;
  std::vector<std::size_t> grid_position_rows;  // rows per position at flatten
  std::vector<MatrixXd> head_inputs;
  std::vector<MatrixXd> head_pre;
  Index sequence_rows = 0;
};

Model::Model(ModelSpec spec, ModelParams params) : spec_(std::move(spec)), params_(std::move(params)) {
  const ModelParams shape = ModelParams::zeros(spec_);
  const auto expected = shape.flat_views();
  const auto actual = params_.flat_views();
  bool ok = expected.size() == actual.size();
  for (std::size_t k = 0; ok && k < expected.size(); ++k) ok = expected[k].size() == actual[k].size();
  if (!ok) throw Error(ErrorKind::ShapeMismatch, "parameters do not match the model spec");
}

void Model::validate(const Batch& batch) const {
  if (batch.sequence.size() != static_cast<std::size_t>(spec_.timesteps))
    throw Error(ErrorKind::ShapeMismatch, "batch timesteps do not match the spec");
  const Index n = batch.size();
  for (const auto& x : batch.sequence)
    if (x.rows() != spec_.features || x.cols() != n)
      throw Error(ErrorKind::ShapeMismatch, "batch features do not match the spec");
  if (spec_.has_grid_branch()) {
    if (batch.grid.size() != static_cast<std::size_t>(spec_.grid_size))
      throw Error(ErrorKind::ShapeMismatch, "batch grid length does not match the spec");
    for (const auto& g : batch.grid)
      if (g.rows() != spec_.grid_size || g.cols() != n)
        throw Error(ErrorKind::ShapeMismatch, "batch grid channels do not match the spec");
  }
}

MatrixXd Model::logits(const Batch& batch, Trace* trace) const {
  validate(batch);
  const Index n = batch.size();

  nn::Sequence<double> seq = batch.sequence;
  for (std::size_t l = 0; l < params_.lstm.size(); ++l) {
    const auto& layer = spec_.sequence_branch[l];
    auto [out, cache] = nn::lstm_sequence(seq, params_.lstm[l], layer.return_sequences, spec_.lstm_emit);
    seq = std::move(out);
    if (trace) trace->lstm.push_back(std::move(cache));
  }
  MatrixXd features = seq.back();
  if (trace) trace->sequence_rows = features.rows();

  if (spec_.has_grid_branch()) {
    nn::Sequence<double> g = batch.grid;
    std::size_t conv_index = 0;
    for (const auto& layer : spec_.grid_branch) {
      Trace::GridStage stage{layer.kind, {}, {}, {}};
      if (layer.kind == LayerKind::Conv1d) {
        auto [pre, cache] = nn::conv1d_forward(g, params_.conv[conv_index++]);
        g.clear();
        for (const auto& p : pre) g.push_back(nn::activate(layer.activation, p));
        stage.conv = std::move(cache);
        stage.conv_pre = std::move(pre);
      } else if (layer.kind == LayerKind::MaxPool1d) {
        auto [pooled, cache] = nn::maxpool1d_forward(g, layer.pool);
        g = std::move(pooled);
        stage.pool = std::move(cache);
      }
      if (trace) trace->grid.push_back(std::move(stage));
    }
    // Flatten position-major: element (t, k) lands at row t * K + k.
    Index rows = features.rows();
    for (const auto& p : g) rows += p.rows();
    MatrixXd joined(rows, n);
    joined.topRows(features.rows()) = features;
    Index offset = features.rows();
    for (const auto& p : g) {
      joined.middleRows(offset, p.rows()) = p;
      offset += p.rows();
      if (trace) trace->grid_position_rows.push_back(static_cast<std::size_t>(p.rows()));
    }
    features = std::move(joined);
  }

  for (std::size_t l = 0; l < params_.dense.size(); ++l) {
    MatrixXd pre = nn::dense_forward(features, params_.dense[l]);
    if (trace) {
      trace->head_inputs.push_back(features);
      trace->head_pre.push_back(pre);
    }
    features = nn::activate(spec_.head[l].activation, pre);
  }
  return features;
}

MatrixXd Model::forward(const Batch& batch) const { return nn::softmax(logits(batch, nullptr)); }

LossAndGradient Model::loss_and_gradient(const Batch& batch, const MatrixXd& targets) const {
  Trace trace;
  const MatrixXd z = logits(batch, &trace);
  const auto sce = nn::softmax_cross_entropy(z, targets);

  LossAndGradient out;
  out.loss = sce.loss;
  out.probs = sce.probs;
  out.gradient = ModelParams::zeros(spec_);

  MatrixXd upstream = sce.gradient;
  for (std::size_t l = params_.dense.size(); l-- > 0;) {
    upstream = (upstream.array() *
                nn::activation_derivative(spec_.head[l].activation, trace.head_pre[l]).array())
                   .matrix();
    upstream = nn::dense_backward(trace.head_inputs[l], params_.dense[l], upstream, out.gradient.dense[l]);
  }

  if (spec_.has_grid_branch()) {
    nn::Sequence<double> g;
    Index offset = trace.sequence_rows;
    for (std::size_t rows : trace.grid_position_rows) {
      g.push_back(upstream.middleRows(offset, static_cast<Index>(rows)));
      offset += static_cast<Index>(rows);
    }
    std::size_t conv_index = params_.conv.size();
    for (std::size_t s = trace.grid.size(); s-- > 0;) {
      const auto& stage = trace.grid[s];
      if (stage.kind == LayerKind::MaxPool1d) {
        g = nn::maxpool1d_backward(stage.pool, g);
      } else if (stage.kind == LayerKind::Conv1d) {
        --conv_index;
        for (std::size_t t = 0; t < g.size(); ++t)
          g[t] = (g[t].array() *
                  nn::activation_derivative(spec_.grid_branch[s].activation, stage.conv_pre[t]).array())
                     .matrix();
        auto grads = nn::conv1d_backward(stage.conv, params_.conv[conv_index], g);
        out.gradient.conv[conv_index] = std::move(grads.params);
        g = std::move(grads.input);
      }
    }
  }

  nn::Sequence<double> seq_up{upstream.topRows(trace.sequence_rows)};
  for (std::size_t l = params_.lstm.size(); l-- > 0;) {
    auto grads = nn::lstm_backward(trace.lstm[l], params_.lstm[l], seq_up);
    out.gradient.lstm[l] = std::move(grads.params);
    seq_up = std::move(grads.inputs);
  }
  return out;
}

}  // namespace veclstm
