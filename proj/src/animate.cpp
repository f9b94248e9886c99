#include "headgs/animate.hpp"

#include "headgs/avatar.hpp"
#include "headgs/binding.hpp"
#include "headgs/errors.hpp"
#include "headgs/landmark_map.hpp"
#include "headgs/renderer.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>

namespace headgs {

namespace {

std::vector<TriangleFrame> standard_frames(const HeadModel& model, const BoundCloud& cloud) {
  AnimationInput rest = AnimationInput::neutral(model);
  rest.shape = cloud.shape;
  return compute_frames(model, pose_mesh(model, rest).posed_vertices);
}

Image render_frame(const HeadModel& model, const BoundCloud& cloud, const std::vector<TriangleFrame>& fallback,
                   const AnimationSequence& sequence, std::size_t index, const AnimateOptions& options,
                   Image* landmarks) {
  const auto posed = pose_avatar(model, cloud, sequence.frames.at(index), &fallback);
  const Camera cam = Camera::from_sample(options.path.at(static_cast<double>(index) / sequence.fps));
  RenderSettings rs;
  rs.background = options.background;
  if (landmarks) *landmarks = render_landmark_map(model, posed.mesh, cam);
  return render(posed.world, cam, rs).color;
}

}  // namespace

CameraSample CameraPath::at(double seconds) const {
  CameraSample s = base;
  if (kind == CameraPathKind::Orbit) s.azimuth = std::remainder(base.azimuth + degrees_per_second * seconds, 360.0);
  return s;
}

void check_model_hash(const HeadModel& model, const BoundCloud& cloud) {
  if (cloud.model_hash != model_content_hash(model))
    throw AssetError("checkpoint was fitted to a different head model (content hash mismatch)");
}

Image animate_frame(const HeadModel& model, const BoundCloud& cloud, const AnimationSequence& sequence,
                    std::size_t index, const AnimateOptions& options) {
  check_model_hash(model, cloud);
  if (index >= sequence.size()) throw DimensionError("frame index out of range");
  return render_frame(model, cloud, standard_frames(model, cloud), sequence, index, options, nullptr);
}

std::size_t animate(const HeadModel& model, const BoundCloud& cloud, const AnimationSequence& sequence,
                    const AnimateOptions& options, const std::filesystem::path& out_dir,
                    const std::optional<std::filesystem::path>& video) {
  check_model_hash(model, cloud);
  sequence.validate(model);
  std::filesystem::create_directories(out_dir);
  const auto fallback = standard_frames(model, cloud);
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    Image lm;
    const Image img = render_frame(model, cloud, fallback, sequence, k, options, options.landmark_maps ? &lm : nullptr);
    write_png(out_dir / fmt::format("frame_{:05d}.png", k), img);
    if (options.landmark_maps) write_png(out_dir / fmt::format("landmark_{:05d}.png", k), lm);
  }
  if (video && sequence.size() > 0) {
    if (std::system("command -v ffmpeg >/dev/null 2>&1") != 0) {
      spdlog::warn("ffmpeg not found; skipping video encoding");
    } else {
      const auto cmd = fmt::format("ffmpeg -loglevel error -y -framerate {} -i '{}' -pix_fmt yuv420p '{}'",
                                   sequence.fps, (out_dir / "frame_%05d.png").string(), video->string());
      if (std::system(cmd.c_str()) != 0) throw Error("ffmpeg failed to encode " + video->string());
    }
  }
  return sequence.size();
}

}  // namespace headgs
