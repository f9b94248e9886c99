#include "headgs/binary_io.hpp"
#include "headgs/errors.hpp"
#include "headgs/gaussians.hpp"

#include <cmath>
#include <cstring>

namespace headgs {

namespace {

constexpr char kMagic[4] = {'A', 'H', 'G', 'S'};
// Record layout without the trailing binding id (plain splat files).
constexpr std::size_t kUnboundRecordSize = kCheckpointRecordSize - 4;

}  // namespace

std::size_t checkpoint_header_size(std::size_t num_shape) { return 4 + 4 + 8 + 4 + 4 * num_shape + 32; }

std::vector<std::uint8_t> encode_checkpoint(const BoundCloud& cloud) {
  const std::size_t n = cloud.size();
  const auto nb = static_cast<std::size_t>(cloud.shape.size());
  std::vector<std::uint8_t> out;
  out.reserve(checkpoint_header_size(nb) + n * kCheckpointRecordSize);
  out.insert(out.end(), kMagic, kMagic + 4);
  io::put(out, kCheckpointVersion);
  io::put(out, static_cast<std::uint64_t>(n));
  io::put(out, static_cast<std::uint32_t>(nb));
  for (std::size_t k = 0; k < nb; ++k) io::put(out, static_cast<float>(cloud.shape[static_cast<Eigen::Index>(k)]));
  out.insert(out.end(), cloud.model_hash.begin(), cloud.model_hash.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) io::put(out, static_cast<float>(cloud.positions[i][a]));
    for (int a = 0; a < 3; ++a) io::put(out, static_cast<float>(cloud.log_scales[i][a]));
    for (int a = 0; a < 4; ++a) io::put(out, static_cast<float>(cloud.rotations[i][a]));
    for (int a = 0; a < 3; ++a) io::put(out, static_cast<float>(cloud.colors[i][a]));
    io::put(out, static_cast<float>(cloud.opacity_logits[i]));
    io::put(out, cloud.bindings[i]);
  }
  return out;
}

BoundCloud decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw UnsupportedFileError("not a bound-Gaussian checkpoint (bad magic)");
  io::ByteReader r(bytes);
  BoundCloud cloud;
  std::uint64_t n = 0;
  try {
    r.take(4);
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion)
      throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    n = r.get<std::uint64_t>();
    const auto nb = r.get<std::uint32_t>();
    cloud.shape.resize(nb);
    for (std::uint32_t k = 0; k < nb; ++k) cloud.shape[k] = r.get<float>();
    const auto hash = r.take(32);
    std::memcpy(cloud.model_hash.data(), hash.data(), 32);
  } catch (const CheckpointError&) {
    throw;
  } catch (const Error& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }

  const std::size_t body = r.remaining();
  if (n > 0 && body == n * kUnboundRecordSize)
    throw UnsupportedFileError("checkpoint records carry no triangle binding field; unbound splat files are unsupported");
  if (body != n * kCheckpointRecordSize)
    throw CheckpointError("corrupt checkpoint: " + std::to_string(body) + " body bytes for " + std::to_string(n) +
                          " points of " + std::to_string(kCheckpointRecordSize) + " bytes");

  cloud.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) cloud.positions[i][a] = r.get<float>();
    for (int a = 0; a < 3; ++a) cloud.log_scales[i][a] = r.get<float>();
    for (int a = 0; a < 4; ++a) cloud.rotations[i][a] = r.get<float>();
    for (int a = 0; a < 3; ++a) cloud.colors[i][a] = r.get<float>();
    cloud.opacity_logits[i] = r.get<float>();
    cloud.bindings[i] = r.get<std::uint32_t>();
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!cloud.log_scales[i].allFinite() || !std::isfinite(cloud.opacity_logits[i]))
      throw CheckpointError("corrupt checkpoint: point " + std::to_string(i) + " has non-finite parameters");
  return cloud;
}

void save_checkpoint(const BoundCloud& cloud, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  io::write_file(path, encode_checkpoint(cloud));
}

BoundCloud load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw CheckpointError("checkpoint not found: " + path.string());
  const auto bytes = io::read_file(path);
  return decode_checkpoint(bytes);
}

void quantize_to_storage(BoundCloud& cloud) {
  auto q3 = [](Vec3& v) { v = v.unaryExpr([](double x) { return to_f32(x); }); };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    q3(cloud.positions[i]);
    q3(cloud.log_scales[i]);
    q3(cloud.colors[i]);
    cloud.rotations[i] = cloud.rotations[i].unaryExpr([](double x) { return to_f32(x); });
    cloud.opacity_logits[i] = to_f32(cloud.opacity_logits[i]);
  }
  cloud.shape = cloud.shape.unaryExpr([](double x) { return to_f32(x); });
}

}  // namespace headgs
