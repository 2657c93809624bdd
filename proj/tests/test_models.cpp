#include <doctest.h>

#include <json.hpp>

#include <sstream>

#include "support.hpp"
#include "veclstm/error.hpp"
#include "veclstm/models.hpp"
#include "veclstm/trainer.hpp"

using namespace veclstm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::size_t lstm_params(std::size_t in, std::size_t h) { return 4 * (h * in + h * h + h); }
std::size_t dense_params(std::size_t in, std::size_t out) { return out * in + out; }

Batch random_batch(const ModelSpec& spec, Eigen::Index n, std::mt19937_64& rng) {
  Batch b;
  for (int t = 0; t < spec.timesteps; ++t) b.sequence.push_back(support::random_matrix(spec.features, n, rng));
  for (int t = 0; t < spec.grid_size; ++t) b.grid.push_back(support::random_matrix(spec.grid_size, n, rng));
  return b;
}

MatrixXd targets_for(Eigen::Index n) {
  std::vector<int> codes;
  for (Eigen::Index k = 0; k < n; ++k) codes.push_back(static_cast<int>((k * 5 + 2) % kNumClasses));
  return one_hot(codes);
}

VectorXd concat(const ModelParams& p) {
  VectorXd all(static_cast<Eigen::Index>(p.size()));
  Eigen::Index k = 0;
  for (const auto& v : p.flat_views()) {
    all.segment(k, v.size()) = v;
    k += v.size();
  }
  return all;
}

}  // namespace

TEST_CASE("baseline LSTM has 71,357 parameters") {
  const ModelSpec spec = build_lstm_stack(1);
  CHECK(param_count(spec) == 71357);
  // Hand count: LSTM(100) over 1 feature, LSTM(50) over 100, Dense(7) over 50.
  CHECK(lstm_params(1, 100) + lstm_params(100, 50) + dense_params(50, 7) == 71357);
  CHECK(ModelParams::zeros(spec).size() == 71357);
}

TEST_CASE("closed-form parameter count equals allocated parameters") {
  HybridOptions small;
  small.lstm_units = {5, 3};
  small.conv_filters = 4;
  small.kernel = 2;
  small.pool = 2;
  small.grid_size = 6;
  small.fusion_units = 8;
  for (const ModelSpec& spec : {build_lstm_stack(1), build_veclstm(3), build_hybrid(), build_hybrid(small)}) {
    CAPTURE(to_string(spec.architecture));
    CHECK(param_count(spec) == ModelParams::zeros(spec).size());
    CHECK(param_count(spec) == init_params(spec, 1).size());
  }
  // Hybrid with defaults: both LSTMs, Conv1d(64, k=3) over 10 channels,
  // flatten of 8 positions x 64, Dense(64) over 50 + 512, Dense(7).
  const std::size_t hybrid = lstm_params(1, 100) + lstm_params(100, 50) + (64 * 10 * 3 + 64) +
                             dense_params(50 + 8 * 64, 64) + dense_params(64, 7);
  CHECK(param_count(build_hybrid()) == hybrid);
  CHECK(build_hybrid().grid_width() == 512);
}

TEST_CASE("lstm baseline and VecLSTM share a layer stack") {
  CHECK(build_lstm_stack().same_structure(build_veclstm()));
  CHECK_FALSE(build_lstm_stack().same_structure(build_hybrid()));
  CHECK(parse_architecture("hybrid") == Architecture::Hybrid);
  CHECK(parse_architecture("lstm") == Architecture::LstmBaseline);
  CHECK(parse_architecture("veclstm") == Architecture::VecLstm);
  CHECK_FALSE(parse_architecture("gru").has_value());
}

TEST_CASE("initialization is a function of the seed") {
  const ModelSpec spec = build_hybrid();
  CHECK(init_params(spec, 5) == init_params(spec, 5));
  CHECK_FALSE(init_params(spec, 5) == init_params(spec, 6));
  const auto p = init_params(spec, 5);
  for (const auto& d : p.dense) CHECK(d.b.isZero(0));
  for (const auto& c : p.conv) CHECK(c.bias.isZero(0));
}

TEST_CASE("forward returns one probability column per sample") {
  std::mt19937_64 rng(3);
  for (const ModelSpec& spec : {build_veclstm(), build_hybrid()}) {
    const Model model(spec, init_params(spec, 2));
    const MatrixXd probs = model.forward(random_batch(spec, 9, rng));
    REQUIRE(probs.rows() == kNumClasses);
    REQUIRE(probs.cols() == 9);
    for (int c = 0; c < 9; ++c) CHECK(probs.col(c).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((probs.array() >= 0).all());
  }
  const Model model(build_veclstm(), init_params(build_veclstm(), 2));
  Batch wrong;
  wrong.sequence.push_back(MatrixXd::Zero(2, 3));
  CHECK_THROWS_AS(model.forward(wrong), Error);
}

TEST_CASE("full hybrid model gradient matches central differences") {
  HybridOptions o;
  o.features = 2;
  o.lstm_units = {4, 3};
  o.conv_filters = 3;
  o.kernel = 2;
  o.pool = 2;
  o.grid_size = 5;
  o.fusion_units = 6;
  ModelSpec spec = build_hybrid(o);
  spec.timesteps = 3;
  std::mt19937_64 rng(21);
  Model model(spec, init_params(spec, 9));
  // Small non-zero biases so no unit sits exactly on a ReLU kink.
  for (auto& d : model.params().dense) d.b = support::random_matrix(d.b.size(), 1, rng, 0.1);
  for (auto& c : model.params().conv) c.bias = support::random_matrix(c.bias.size(), 1, rng, 0.1);
  const Batch batch = random_batch(spec, 4, rng);
  const MatrixXd targets = targets_for(4);

  const auto lg = model.loss_and_gradient(batch, targets);
  VectorXd numeric(static_cast<Eigen::Index>(model.params().size()));
  Eigen::Index k = 0;
  for (auto view : model.params().flat_views()) {
    numeric.segment(k, view.size()) =
        support::numeric_gradient([&] { return model.loss_and_gradient(batch, targets).loss; }, view);
    k += view.size();
  }
  CHECK(support::relative_error(concat(lg.gradient), numeric) < 1e-4);
  CHECK(lg.loss == doctest::Approx(model.loss_and_gradient(batch, targets).loss));
}

TEST_CASE("VecLSTM gradient over several time steps matches central differences") {
  ModelSpec spec = build_veclstm(2);
  spec.sequence_branch[0].units = 4;
  spec.sequence_branch[1].units = 3;
  spec.timesteps = 4;
  spec.lstm_emit = nn::Activation::Relu;
  std::mt19937_64 rng(22);
  Model model(spec, init_params(spec, 4));
  for (auto& l : model.params().lstm)
    for (auto* b : l.biases()) *b = support::random_matrix(b->size(), 1, rng, 0.3);
  const Batch batch = random_batch(spec, 3, rng);
  const MatrixXd targets = targets_for(3);
  const auto lg = model.loss_and_gradient(batch, targets);
  VectorXd numeric(static_cast<Eigen::Index>(model.params().size()));
  Eigen::Index k = 0;
  for (auto view : model.params().flat_views()) {
    numeric.segment(k, view.size()) =
        support::numeric_gradient([&] { return model.loss_and_gradient(batch, targets).loss; }, view);
    k += view.size();
  }
  CHECK(support::relative_error(concat(lg.gradient), numeric) < 1e-4);
}

TEST_CASE("a zeroed convolution makes the grid input irrelevant") {
  const ModelSpec spec = build_hybrid();
  auto params = init_params(spec, 3);
  for (auto& c : params.conv) {
    for (auto& tap : c.taps) tap.setZero();
    c.bias.setZero();
  }
  const Model model(spec, params);
  std::mt19937_64 rng(4);
  Batch a = random_batch(spec, 5, rng);
  Batch b = a;
  for (auto& g : b.grid) g = support::random_matrix(g.rows(), g.cols(), rng, 10.0);
  CHECK(model.forward(a) == model.forward(b));
}

TEST_CASE("parameters survive a checkpoint round trip") {
  const ModelSpec spec = build_hybrid();
  const auto params = init_params(spec, 8);
  std::stringstream buf;
  nn::write_checkpoint(buf, params.named_blocks());
  auto loaded = ModelParams::zeros(spec);
  loaded.load_blocks(nn::read_checkpoint(buf));
  // Stored at single precision.
  const VectorXd a = concat(params), b = concat(loaded);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((a.cast<float>().cast<double>() - b).cwiseAbs().maxCoeff() == 0.0);

  auto other = ModelParams::zeros(build_veclstm());
  CHECK_THROWS_AS(other.load_blocks(params.named_blocks()), Error);
}

TEST_CASE("model spec serializes to JSON") {
  const auto j = nlohmann::json::parse(to_json(build_hybrid()));
  CHECK(j["architecture"] == "hybrid");
  CHECK(j["param_count"] == param_count(build_hybrid()));
  CHECK(j["layers"].size() == build_hybrid().sequence_branch.size() + build_hybrid().grid_branch.size() +
                                  build_hybrid().head.size());
}
