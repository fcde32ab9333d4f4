#include "tsbn/data.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>

#include "tsbn/error.hpp"
#include "tsbn/trainer.hpp"

static_assert(std::endian::native == std::endian::little, "sequence I/O assumes a little-endian host");

namespace tsbn {

namespace {

constexpr std::uint64_t kBallsStream = 0x62616c6c;
constexpr char kMagic[] = "TSBN-SEQ1";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;
constexpr int kMaxPlacementTries = 10000;

std::uint8_t dtype_code(DataType d) {
  switch (d) {
    case DataType::kBit: return 0;
    case DataType::kReal: return 1;
    case DataType::kCount: return 2;
  }
  return 255;
}

template <typename T>
void put(std::vector<char>& buf, T x) {
  const auto* p = reinterpret_cast<const char*>(&x);
  buf.insert(buf.end(), p, p + sizeof(T));
}

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
  const char* take(std::size_t n) {
    need(n);
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > buf_.size() - pos_) throw Error(ErrorCode::kCorrupt, "sequence file is truncated");
  }
  const std::vector<char>& buf_;
  std::size_t pos_ = 0;
};

void collide(std::vector<Eigen::Vector2d>& pos, std::vector<Eigen::Vector2d>& vel, double r, double R) {
  for (std::size_t i = 0; i < pos.size(); ++i) {
    for (int a = 0; a < 2; ++a) {
      if (pos[i][a] < r) {
        pos[i][a] = 2.0 * r - pos[i][a];
        vel[i][a] = -vel[i][a];
      } else if (pos[i][a] > R - r) {
        pos[i][a] = 2.0 * (R - r) - pos[i][a];
        vel[i][a] = -vel[i][a];
      }
    }
  }
  for (std::size_t i = 0; i < pos.size(); ++i) {
    for (std::size_t j = i + 1; j < pos.size(); ++j) {
      const Eigen::Vector2d d = pos[j] - pos[i];
      const double dist = d.norm();
      if (dist >= 2.0 * r || dist == 0.0) continue;
      const Eigen::Vector2d n = d / dist;
      const double approach = (vel[i] - vel[j]).dot(n);
      if (approach <= 0.0) continue;
      // Equal masses: exchange the velocity components along the center line.
      vel[i] -= approach * n;
      vel[j] += approach * n;
    }
  }
}

}  // namespace

void BallsConfig::validate() const {
  if (num_balls < 1 || resolution < 1 || sequence_length < 1 || num_sequences < 0)
    throw Error(ErrorCode::kInvalidArgument, "ball counts, resolution and lengths must be positive");
  const double r = radius();
  if (!(r > 0.0)) throw Error(ErrorCode::kInfeasibleConfig, "ball radius must be positive");
  if (resolution < 4.0 * r)
    throw Error(ErrorCode::kInfeasibleConfig, "resolution must be at least four ball radii");
  if (!(speed_scale >= 0.0) || 1.5 * speed_scale >= resolution - 2.0 * r)
    throw Error(ErrorCode::kInfeasibleConfig, "speed scale must be nonnegative and below the free width");
  if (num_balls * 4.0 * r * r > 0.5 * resolution * resolution)
    throw Error(ErrorCode::kInfeasibleConfig, "the balls cannot fit inside the box");
}

BallTrajectory simulate_balls(const BallsConfig& config, std::uint64_t index) {
  config.validate();
  const double r = config.radius();
  const double R = config.resolution;
  RngStream rng = RngStream(config.seed, kBallsStream).substream(index);
  const auto nb = static_cast<std::size_t>(config.num_balls);

  std::vector<Eigen::Vector2d> pos;
  for (int tries = 0; pos.size() < nb; ++tries) {
    if (tries >= kMaxPlacementTries)
      throw Error(ErrorCode::kInfeasibleConfig, "could not place non-overlapping balls");
    const Eigen::Vector2d p(r + (R - 2.0 * r) * rng.uniform(), r + (R - 2.0 * r) * rng.uniform());
    bool ok = true;
    for (const auto& q : pos) ok = ok && (p - q).norm() >= 2.0 * r;
    if (ok) pos.push_back(p);
  }
  std::vector<Eigen::Vector2d> vel;
  for (std::size_t i = 0; i < nb; ++i) {
    const double speed = (0.5 + rng.uniform()) * config.speed_scale;
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    vel.emplace_back(speed * std::cos(angle), speed * std::sin(angle));
  }

  BallTrajectory out;
  for (int t = 0; t < config.sequence_length; ++t) {
    out.positions.push_back(pos);
    out.velocities.push_back(vel);
    for (std::size_t i = 0; i < nb; ++i) pos[i] += vel[i];
    collide(pos, vel, r, R);
  }
  return out;
}

Eigen::VectorXd render_balls(const std::vector<Eigen::Vector2d>& centers, int resolution, double radius) {
  Eigen::VectorXd frame = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(resolution) * resolution);
  const double r2 = radius * radius;
  for (const auto& c : centers) {
    const int i0 = std::max(0, static_cast<int>(std::floor(c.y() - radius - 1.0)));
    const int i1 = std::min(resolution - 1, static_cast<int>(std::ceil(c.y() + radius + 1.0)));
    const int j0 = std::max(0, static_cast<int>(std::floor(c.x() - radius - 1.0)));
    const int j1 = std::min(resolution - 1, static_cast<int>(std::ceil(c.x() + radius + 1.0)));
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        const double dx = j + 0.5 - c.x();
        const double dy = i + 0.5 - c.y();
        if (dx * dx + dy * dy <= r2) frame[static_cast<Eigen::Index>(i) * resolution + j] = 1.0;
      }
    }
  }
  return frame;
}

SequenceBatch gen_bouncing_balls(const BallsConfig& config, std::uint64_t first_index, int threads) {
  config.validate();
  SequenceBatch batch;
  batch.dtype = DataType::kBit;
  batch.dim = config.resolution * config.resolution;
  batch.sequences.resize(static_cast<std::size_t>(config.num_sequences));
  parallel_for(batch.sequences.size(), threads, [&](std::size_t i) {
    const BallTrajectory traj = simulate_balls(config, first_index + i);
    Sequence v(batch.dim, config.sequence_length);
    for (int t = 0; t < config.sequence_length; ++t)
      v.col(t) = render_balls(traj.positions[static_cast<std::size_t>(t)], config.resolution, config.radius());
    batch.sequences[i] = std::move(v);
  });
  return batch;
}

void save_sequences(const std::string& path, const SequenceBatch& batch) {
  batch.validate();
  std::vector<char> buf(kMagic, kMagic + kMagicLen);
  put<std::uint8_t>(buf, dtype_code(batch.dtype));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(batch.dim));
  put<std::uint64_t>(buf, batch.sequences.size());
  for (const auto& s : batch.sequences) {
    put<std::uint64_t>(buf, static_cast<std::uint64_t>(s.cols()));
    // Column-major dim x T storage is exactly the row-major T x dim layout.
    const double* x = s.data();
    const auto n = static_cast<std::size_t>(s.size());
    switch (batch.dtype) {
      case DataType::kBit: {
        std::vector<std::uint8_t> packed((n + 7) / 8, 0);
        for (std::size_t k = 0; k < n; ++k)
          if (x[k] != 0.0) packed[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
        buf.insert(buf.end(), packed.begin(), packed.end());
        break;
      }
      case DataType::kReal:
        for (std::size_t k = 0; k < n; ++k) put<double>(buf, x[k]);
        break;
      case DataType::kCount:
        for (std::size_t k = 0; k < n; ++k) {
          if (x[k] > std::numeric_limits<std::uint32_t>::max())
            throw Error(ErrorCode::kInvalidValue, "count exceeds the uint32 range");
          put<std::uint32_t>(buf, static_cast<std::uint32_t>(x[k]));
        }
        break;
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

SequenceBatch load_sequences(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kMagicLen || std::memcmp(buf.data(), kMagic, kMagicLen) != 0)
    throw Error(ErrorCode::kBadMagic, "'" + path + "' is not a TSBN sequence file");
  Reader r(buf);
  r.take(kMagicLen);
  SequenceBatch batch;
  switch (r.get<std::uint8_t>()) {
    case 0: batch.dtype = DataType::kBit; break;
    case 1: batch.dtype = DataType::kReal; break;
    case 2: batch.dtype = DataType::kCount; break;
    default: throw Error(ErrorCode::kCorrupt, "unknown dtype code");
  }
  batch.dim = static_cast<int>(r.get<std::uint32_t>());
  const auto count = r.get<std::uint64_t>();
  if (count > r.remaining() / sizeof(std::uint64_t)) throw Error(ErrorCode::kCorrupt, "sequence file is truncated");
  const auto dim = static_cast<std::uint64_t>(batch.dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto T = r.get<std::uint64_t>();
    if (dim != 0 && T > r.remaining() * 8 / dim) throw Error(ErrorCode::kCorrupt, "sequence file is truncated");
    const std::size_t n = static_cast<std::size_t>(T * dim);
    Sequence s(batch.dim, static_cast<Eigen::Index>(T));
    double* x = s.data();
    switch (batch.dtype) {
      case DataType::kBit: {
        const auto* p = reinterpret_cast<const std::uint8_t*>(r.take((n + 7) / 8));
        for (std::size_t k = 0; k < n; ++k) x[k] = (p[k / 8] >> (k % 8)) & 1u;
        break;
      }
      case DataType::kReal: {
        const char* p = r.take(n * sizeof(double));
        if (n > 0) std::memcpy(x, p, n * sizeof(double));
        break;
      }
      case DataType::kCount: {
        const char* p = r.take(n * sizeof(std::uint32_t));
        for (std::size_t k = 0; k < n; ++k) {
          std::uint32_t c;
          std::memcpy(&c, p + k * sizeof c, sizeof c);
          x[k] = c;
        }
        break;
      }
    }
    batch.sequences.push_back(std::move(s));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kCorrupt, "trailing bytes after the last sequence");
  return batch;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> split_words(const Eigen::VectorXd& counts, double fraction,
                                                        RngStream& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "fraction must lie in [0, 1]");
  Eigen::VectorXd train = Eigen::VectorXd::Zero(counts.size());
  for (Eigen::Index m = 0; m < counts.size(); ++m) {
    const double c = counts[m];
    if (!(c >= 0.0) || c != std::floor(c)) throw Error(ErrorCode::kInvalidValue, "counts must be nonnegative integers");
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(c); ++k)
      if (rng.bernoulli(fraction)) train[m] += 1.0;
  }
  return {train, counts - train};
}

std::pair<SequenceBatch, SequenceBatch> split_counts(const SequenceBatch& batch, double fraction, RngStream& rng) {
  if (batch.dtype != DataType::kCount) throw Error(ErrorCode::kInvalidArgument, "split_counts needs count data");
  SequenceBatch train{batch.dtype, batch.dim, {}};
  SequenceBatch held{batch.dtype, batch.dim, {}};
  for (const auto& s : batch.sequences) {
    Sequence a(s.rows(), s.cols());
    Sequence b(s.rows(), s.cols());
    for (Eigen::Index t = 0; t < s.cols(); ++t) {
      auto [x, y] = split_words(s.col(t), fraction, rng);
      a.col(t) = x;
      b.col(t) = y;
    }
    train.sequences.push_back(std::move(a));
    held.sequences.push_back(std::move(b));
  }
  return {std::move(train), std::move(held)};
}

}  // namespace tsbn
