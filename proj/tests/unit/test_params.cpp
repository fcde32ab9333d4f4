#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "tsbn/checkpoint.hpp"
#include "tsbn/error.hpp"
#include "tsbn/params.hpp"

namespace tsbn {
namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("tsbn_params_" + name)).string();
}

std::vector<ModelSpec> all_specs() {
  std::vector<ModelSpec> out;
  for (Likelihood lik : {Likelihood::kBinary, Likelihood::kReal, Likelihood::kCount}) {
    out.push_back(ModelSpec::shallow(3, 2, 1, lik));
    out.push_back(ModelSpec::shallow(3, 2, 2, lik));
    out.push_back(ModelSpec::deep(3, {2, 2}, LayerKind::kStochastic, 1, lik));
    out.push_back(ModelSpec::deep(3, {2, 2}, LayerKind::kDeterministic, 2, lik));
  }
  return out;
}

TEST(ModelSpec, ValidationRejectsBadSpecs) {
  ModelSpec s = ModelSpec::shallow(4, 3);
  EXPECT_NO_THROW(s.validate());
  s.order = 0;
  EXPECT_THROW(s.validate(), Error);
  ModelSpec d = ModelSpec::deep(4, {3, 2}, LayerKind::kDeterministic);
  d.layer_kinds.back() = LayerKind::kDeterministic;
  EXPECT_THROW(d.validate(), Error);
  ModelSpec e = ModelSpec::shallow(0, 3);
  EXPECT_THROW(e.validate(), Error);
}

TEST(InitParams, BiasesAreExactlyZero) {
  for (const ModelSpec& spec : all_specs()) {
    RngStream rng(1);
    const Model m = init_params(spec, rng);
    for (const ParamSet* p : {static_cast<const ParamSet*>(&m.theta), static_cast<const ParamSet*>(&m.phi)})
      for (const auto& blk : p->blocks())
        if (blk.role == BlockRole::kBias) {
          EXPECT_TRUE(blk.value.isZero(0.0)) << blk.name;
        }
  }
}

TEST(InitParams, ShapesFollowTheSpec) {
  RngStream rng(2);
  const Model m = init_params(ModelSpec::shallow(900, 100), rng);
  EXPECT_EQ(m.theta.at("W2").rows(), 900);
  EXPECT_EQ(m.theta.at("W2").cols(), 100);
  const Model m2 = init_params(ModelSpec::shallow(5, 3, 2, Likelihood::kReal), rng);
  EXPECT_EQ(m2.theta.at("W1").cols(), 6);
  EXPECT_EQ(m2.theta.at("W3").cols(), 10);
  EXPECT_EQ(m2.theta.at("W4").rows(), 5);
  EXPECT_EQ(m2.theta.at("W4").cols(), 10);
  EXPECT_EQ(m2.theta.at("W4p").cols(), 10);
  EXPECT_EQ(m2.phi.at("U2").rows(), 3);
  EXPECT_EQ(m2.phi.at("U2").cols(), 5);
  EXPECT_EQ(m2.phi.at("U3").cols(), 10);
  EXPECT_FALSE(init_params(ModelSpec::shallow(5, 3), rng).theta.contains("W2p"));
}

TEST(InitParams, WeightDrawStatistics) {
  RngStream rng(3);
  const Model m = init_params(ModelSpec::shallow(1000, 1000), rng);
  const Eigen::MatrixXd& w = m.theta.at("W2");
  ASSERT_EQ(w.size(), 1000000);
  const double mean = w.mean();
  const double sd = std::sqrt((w.array() - mean).square().sum() / static_cast<double>(w.size() - 1));
  EXPECT_LT(std::abs(mean), 4e-6);
  EXPECT_NEAR(sd, 0.001, 0.02 * 0.001);
}

TEST(InitParams, EqualSeedsGiveIdenticalParameters) {
  for (const ModelSpec& spec : all_specs()) {
    RngStream a(9);
    RngStream b(9);
    const Model ma = init_params(spec, a);
    const Model mb = init_params(spec, b);
    EXPECT_TRUE(ma.theta == mb.theta);
    EXPECT_TRUE(ma.phi == mb.phi);
  }
}

TEST(InitParams, HmsbnBlocksAreFrozenAtZero) {
  ModelSpec spec = ModelSpec::shallow(4, 3, 1, Likelihood::kReal);
  spec.visible_history = false;
  RngStream rng(4);
  const Model m = init_params(spec, rng);
  for (const char* name : {"W3", "W4", "W4p"}) {
    EXPECT_TRUE(m.theta.at(name).isZero(0.0)) << name;
    EXPECT_FALSE(m.theta.block(name).trainable) << name;
  }
  EXPECT_TRUE(m.theta.block("W1").trainable);
}

TEST(EquationSymbols, EverySymbolMapsToExactlyOneBlock) {
  const std::set<std::string> shallow_syms = {"W1", "W2", "W3", "W4", "b", "c", "U1", "U2", "U3", "d"};
  const std::set<std::string> deep_syms = {"W1", "W2", "W3", "W4", "W5", "W6", "W7", "b1", "b2", "b3",
                                           "U1", "U2", "U3", "U4", "U5", "U6", "c1", "c2"};
  for (const ModelSpec& spec : all_specs()) {
    std::set<std::string> expected = spec.is_deep() ? deep_syms : shallow_syms;
    if (spec.likelihood == Likelihood::kReal) {
      if (spec.is_deep()) {
        for (const char* s : {"W5p", "W7p", "b3p"}) expected.insert(s);
      } else {
        for (const char* s : {"W2p", "W4p", "cp"}) expected.insert(s);
      }
    }
    if (spec.deterministic_middle()) {
      expected.erase("W3");
      expected.erase("U3");
    }
    const auto map = equation_symbols(spec);
    std::set<std::string> syms;
    std::set<std::string> blocks;
    for (const auto& [sym, block] : map) {
      EXPECT_TRUE(syms.insert(sym).second) << "duplicate symbol " << sym;
      EXPECT_TRUE(blocks.insert(block).second) << "block mapped twice " << block;
    }
    EXPECT_EQ(syms, expected) << to_string(spec.likelihood);
    std::set<std::string> all_blocks;
    const GenerativeParams theta = generative_layout(spec);
    const RecognitionParams phi = recognition_layout(spec);
    for (const auto& b : theta.blocks()) all_blocks.insert(b.name);
    for (const auto& b : phi.blocks()) all_blocks.insert(b.name);
    EXPECT_EQ(blocks, all_blocks);
  }
}

TrainerState busy_state(const Model& m, RngStream& rng) {
  TrainerState s = make_trainer_state(m, rng);
  s.c = -3.25;
  s.v = 17.5;
  s.iteration = 1234;
  for (ParamSet* p : {&s.theta_opt.ms, &s.theta_opt.step, &s.phi_opt.ms, &s.phi_opt.step, &s.lambda_opt.ms,
                      &s.lambda_opt.step})
    for (auto& blk : p->blocks())
      for (Eigen::Index i = 0; i < blk.value.size(); ++i) blk.value.data()[i] = rng.normal();
  return s;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  for (const ModelSpec& spec : all_specs()) {
    RngStream rng(5);
    const Model m = testing::random_model(spec, rng);
    const TrainerState s = busy_state(m, rng);
    const std::string path = temp_path("roundtrip.ckpt");
    save_checkpoint(path, m, s);
    const Checkpoint back = load_checkpoint(path);
    EXPECT_TRUE(back.model.spec == spec);
    EXPECT_TRUE(back.model.theta == m.theta);
    EXPECT_TRUE(back.model.phi == m.phi);
    EXPECT_TRUE(back.state == s);
    save_checkpoint(path + "2", back.model, back.state);
    std::ifstream a(path, std::ios::binary);
    std::ifstream b(path + "2", std::ios::binary);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
    fs::remove(path);
    fs::remove(path + "2");
  }
}

TEST(Checkpoint, NonFiniteAndExtremeValuesSurvive) {
  RngStream rng(6);
  Model m = testing::random_model(ModelSpec::shallow(2, 2), rng);
  m.theta.at("W1")(0, 0) = -0.0;
  m.theta.at("W1")(1, 1) = 1e-308;
  m.theta.at("W2")(0, 1) = std::nextafter(1.0, 2.0);
  const TrainerState s = make_trainer_state(m, rng);
  const std::string path = temp_path("extreme.ckpt");
  save_checkpoint(path, m, s);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_TRUE(std::signbit(back.model.theta.at("W1")(0, 0)));
  EXPECT_EQ(back.model.theta.at("W1")(1, 1), 1e-308);
  EXPECT_EQ(back.model.theta.at("W2")(0, 1), std::nextafter(1.0, 2.0));
  fs::remove(path);
}

std::vector<char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_all(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ErrorCode load_error(const std::string& path) {
  try {
    load_checkpoint(path);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "load_checkpoint did not throw";
  return ErrorCode::kInvalidArgument;
}

TEST(Checkpoint, TruncatedFileIsCorrupt) {
  RngStream rng(7);
  const Model m = init_params(ModelSpec::shallow(4, 3), rng);
  const std::string path = temp_path("trunc.ckpt");
  save_checkpoint(path, m, make_trainer_state(m, rng));
  const std::vector<char> bytes = read_all(path);
  for (std::size_t keep : {std::size_t{12}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
    write_all(path, std::vector<char>(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep)));
    EXPECT_EQ(load_error(path), ErrorCode::kCorrupt) << keep;
  }
  fs::remove(path);
}

TEST(Checkpoint, WrongMagicIsRejected) {
  const std::string path = temp_path("magic.ckpt");
  write_all(path, {'N', 'O', 'T', '-', 'A', '-', 'C', 'K', 'P', 'T', 0, 0});
  EXPECT_EQ(load_error(path), ErrorCode::kBadMagic);
  fs::remove(path);
  EXPECT_EQ(load_error(temp_path("missing.ckpt")), ErrorCode::kIo);
}

TEST(Checkpoint, HeaderDisagreeingWithTensorShapes) {
  RngStream rng(8);
  const Model m = init_params(ModelSpec::shallow(800, 3), rng);
  const std::string path = temp_path("shape.ckpt");
  save_checkpoint(path, m, make_trainer_state(m, rng));
  std::vector<char> bytes = read_all(path);
  const std::uint32_t M = 900;
  std::memcpy(bytes.data() + 10, &M, sizeof M);  // first header field after the magic
  write_all(path, bytes);
  EXPECT_EQ(load_error(path), ErrorCode::kShapeMismatch);
  fs::remove(path);
}

TEST(Checkpoint, UnwritablePathIsIoError) {
  RngStream rng(9);
  const Model m = init_params(ModelSpec::shallow(2, 2), rng);
  try {
    save_checkpoint("/nonexistent-dir/x.ckpt", m, make_trainer_state(m, rng));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

}  // namespace
}  // namespace tsbn
