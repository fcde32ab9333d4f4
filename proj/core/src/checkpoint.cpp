#include "tsbn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <vector>

#include "tsbn/error.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace tsbn {

namespace {

constexpr char kMagic[] = "TSBN-CKPT1";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;
constexpr std::uint32_t kDtypeF64 = 1;
constexpr std::size_t kNumScalars = 10;

struct Tensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> data;  // row-major
};

class Writer {
 public:
  template <typename T>
  void put(T x) {
    const auto* p = reinterpret_cast<const char*>(&x);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  std::size_t size() const { return buf_.size(); }
  std::vector<char>& buffer() { return buf_; }
  void patch_u64(std::size_t at, std::uint64_t x) { std::memcpy(buf_.data() + at, &x, sizeof x); }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<char>& buf) : buf_(buf) {}
  template <typename T>
  T get() {
    T x;
    need(sizeof(T));
    std::memcpy(&x, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return x;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (n > buf_.size() - pos_) throw Error(ErrorCode::kCorrupt, "checkpoint is truncated");
  }
  const std::vector<char>& buf_;
  std::size_t pos_ = 0;
};

Tensor to_tensor(std::string name, const Eigen::MatrixXd& m) {
  Tensor t{std::move(name), {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())}, {}};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
  return t;
}

void append_set(std::vector<Tensor>& out, const std::string& prefix, const ParamSet& p) {
  for (const auto& blk : p.blocks()) out.push_back(to_tensor(prefix + blk.name, blk.value));
}

std::vector<double> scalars(const TrainerState& s) {
  return {s.c,        s.v,
          s.alpha,    s.learning_rate,
          s.ms_decay, s.momentum,
          s.weight_decay, s.eps,
          static_cast<double>(s.iteration), static_cast<double>(s.max_iterations)};
}

std::uint32_t likelihood_code(Likelihood l) { return static_cast<std::uint32_t>(l); }

void fill_set(ParamSet& p, const std::string& prefix, std::map<std::string, Tensor>& table) {
  for (auto& blk : p.blocks()) {
    const std::string name = prefix + blk.name;
    auto it = table.find(name);
    if (it == table.end()) throw Error(ErrorCode::kCorrupt, "checkpoint lacks tensor '" + name + "'");
    const Tensor& t = it->second;
    if (t.dims.size() != 2 || t.dims[0] != static_cast<std::uint64_t>(blk.value.rows()) ||
        t.dims[1] != static_cast<std::uint64_t>(blk.value.cols())) {
      std::string got;
      for (auto d : t.dims) got += (got.empty() ? "" : "x") + std::to_string(d);
      throw Error(ErrorCode::kShapeMismatch, "tensor '" + name + "' has shape " + got + ", expected " +
                                                 std::to_string(blk.value.rows()) + "x" +
                                                 std::to_string(blk.value.cols()));
    }
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < blk.value.rows(); ++r)
      for (Eigen::Index c = 0; c < blk.value.cols(); ++c) blk.value(r, c) = t.data[k++];
    table.erase(it);
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const TrainerState& state) {
  const ModelSpec& spec = model.spec;
  std::vector<Tensor> tensors;
  append_set(tensors, "theta/", model.theta);
  append_set(tensors, "phi/", model.phi);
  append_set(tensors, "lambda/", state.lambda);
  append_set(tensors, "opt/theta/ms/", state.theta_opt.ms);
  append_set(tensors, "opt/theta/step/", state.theta_opt.step);
  append_set(tensors, "opt/phi/ms/", state.phi_opt.ms);
  append_set(tensors, "opt/phi/step/", state.phi_opt.step);
  append_set(tensors, "opt/lambda/ms/", state.lambda_opt.ms);
  append_set(tensors, "opt/lambda/step/", state.lambda_opt.step);
  tensors.push_back({"trainer/scalars", {kNumScalars}, scalars(state)});

  Writer w;
  w.bytes(kMagic, kMagicLen);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.visible_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.order));
  w.put<std::uint32_t>(likelihood_code(spec.likelihood));
  w.put<std::uint32_t>(spec.visible_history ? 1u : 0u);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.num_layers()));
  for (int l = 0; l < spec.num_layers(); ++l) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.layer_dims[static_cast<std::size_t>(l)]));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.layer_kinds[static_cast<std::size_t>(l)]));
  }
  w.put<std::uint64_t>(tensors.size());
  std::vector<std::size_t> offset_slots;
  for (const auto& t : tensors) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.put<std::uint32_t>(kDtypeF64);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) w.put<std::uint64_t>(d);
    offset_slots.push_back(w.size());
    w.put<std::uint64_t>(0);
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    w.patch_u64(offset_slots[i], w.size());
    for (double x : tensors[i].data) w.put<double>(x);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kMagicLen || std::memcmp(buf.data(), kMagic, kMagicLen) != 0)
    throw Error(ErrorCode::kBadMagic, "'" + path + "' is not a TSBN checkpoint");

  Reader r(buf);
  r.str(kMagicLen);
  ModelSpec spec;
  spec.visible_dim = static_cast<int>(r.get<std::uint32_t>());
  spec.order = static_cast<int>(r.get<std::uint32_t>());
  const auto lik = r.get<std::uint32_t>();
  if (lik > 2) throw Error(ErrorCode::kCorrupt, "unknown likelihood code");
  spec.likelihood = static_cast<Likelihood>(lik);
  const auto vh = r.get<std::uint32_t>();
  if (vh > 1) throw Error(ErrorCode::kCorrupt, "bad visible-history flag");
  spec.visible_history = vh == 1;
  const auto L = r.get<std::uint32_t>();
  if (L < 1 || L > 64) throw Error(ErrorCode::kCorrupt, "implausible layer count");
  for (std::uint32_t l = 0; l < L; ++l) {
    spec.layer_dims.push_back(static_cast<int>(r.get<std::uint32_t>()));
    const auto kind = r.get<std::uint32_t>();
    if (kind > 1) throw Error(ErrorCode::kCorrupt, "unknown layer kind code");
    spec.layer_kinds.push_back(static_cast<LayerKind>(kind));
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorrupt, std::string("invalid model header: ") + e.what());
  }

  const auto count = r.get<std::uint64_t>();
  if (count > buf.size()) throw Error(ErrorCode::kCorrupt, "implausible tensor count");
  std::map<std::string, Tensor> table;
  for (std::uint64_t i = 0; i < count; ++i) {
    Tensor t;
    const auto name_len = r.get<std::uint32_t>();
    t.name = r.str(name_len);
    if (r.get<std::uint32_t>() != kDtypeF64) throw Error(ErrorCode::kCorrupt, "unsupported dtype for '" + t.name + "'");
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw Error(ErrorCode::kCorrupt, "implausible rank for '" + t.name + "'");
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.dims.push_back(r.get<std::uint64_t>());
      if (t.dims.back() != 0 && n > buf.size() / t.dims.back()) throw Error(ErrorCode::kCorrupt, "tensor too large");
      n *= t.dims.back();
    }
    const auto offset = r.get<std::uint64_t>();
    if (offset > buf.size() || n > (buf.size() - offset) / sizeof(double))
      throw Error(ErrorCode::kCorrupt, "checkpoint is truncated (tensor '" + t.name + "')");
    t.data.resize(static_cast<std::size_t>(n));
    if (n > 0) std::memcpy(t.data.data(), buf.data() + offset, static_cast<std::size_t>(n) * sizeof(double));
    const std::string name = t.name;
    if (!table.emplace(name, std::move(t)).second) throw Error(ErrorCode::kCorrupt, "duplicate tensor '" + name + "'");
  }

  Checkpoint ck;
  ck.model.spec = spec;
  ck.model.theta = generative_layout(spec);
  ck.model.phi = recognition_layout(spec);
  fill_set(ck.model.theta, "theta/", table);
  fill_set(ck.model.phi, "phi/", table);
  TrainerState& s = ck.state;
  s.lambda = baseline_layout(spec.visible_dim);
  s.theta_opt = RmsBuffers::like(ck.model.theta);
  s.phi_opt = RmsBuffers::like(ck.model.phi);
  s.lambda_opt = RmsBuffers::like(s.lambda);
  fill_set(s.lambda, "lambda/", table);
  fill_set(s.theta_opt.ms, "opt/theta/ms/", table);
  fill_set(s.theta_opt.step, "opt/theta/step/", table);
  fill_set(s.phi_opt.ms, "opt/phi/ms/", table);
  fill_set(s.phi_opt.step, "opt/phi/step/", table);
  fill_set(s.lambda_opt.ms, "opt/lambda/ms/", table);
  fill_set(s.lambda_opt.step, "opt/lambda/step/", table);

  auto it = table.find("trainer/scalars");
  if (it == table.end()) throw Error(ErrorCode::kCorrupt, "checkpoint lacks trainer scalars");
  if (it->second.dims != std::vector<std::uint64_t>{kNumScalars})
    throw Error(ErrorCode::kShapeMismatch, "trainer scalars have the wrong length");
  const auto& x = it->second.data;
  s.c = x[0];
  s.v = x[1];
  s.alpha = x[2];
  s.learning_rate = x[3];
  s.ms_decay = x[4];
  s.momentum = x[5];
  s.weight_decay = x[6];
  s.eps = x[7];
  s.iteration = static_cast<std::int64_t>(x[8]);
  s.max_iterations = static_cast<std::int64_t>(x[9]);
  table.erase(it);
  if (!table.empty()) throw Error(ErrorCode::kCorrupt, "unexpected tensor '" + table.begin()->first + "'");
  return ck;
}

}  // namespace tsbn
