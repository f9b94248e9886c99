#include "headgs/reference.hpp"

#include "headgs/avatar.hpp"
#include "headgs/renderer.hpp"

#include <cmath>
#include <random>

namespace headgs {

namespace {

Vec3 paint(const Vec3& p) {
  // Direction on the unit sphere of the toy head's ellipsoid.
  const Vec3 d = p.cwiseQuotient(Vec3(0.40, 0.50, 0.44)).normalized();
  const Vec3 skin(0.86, 0.64, 0.52), hair(0.22, 0.13, 0.07), lips(0.72, 0.18, 0.24), sclera(0.95, 0.95, 0.93),
      iris(0.12, 0.28, 0.45);
  auto near = [&](const Vec3& anchor, double radius) { return (d - anchor.normalized()).norm() < radius; };
  Vec3 c = skin;
  if (d.y() > 0.45 || (d.z() < -0.1 && d.y() > -0.35)) c = hair;
  if (near(Vec3(0.0, -0.42, 0.9), 0.16)) c = lips;
  for (double side : {-1.0, 1.0}) {
    if (near(Vec3(0.33 * side, 0.22, 0.92), 0.13)) c = sclera;
    if (near(Vec3(0.33 * side, 0.22, 0.92), 0.06)) c = iris;
  }
  const double stripes = 0.07 * std::sin(40.0 * p.x()) * std::sin(33.0 * p.y() + 11.0 * p.z());
  return (c.array() + stripes).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

AnimationInput random_anim(const HeadModel& model, std::mt19937_64& rng, double strength) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> jaw(0.0, 0.25);
  AnimationInput a = AnimationInput::neutral(model);
  a.shape.resize(0);
  if (strength == 0.0) return a;
  for (Eigen::Index k = 0; k < 3; ++k) a.pose[k] = 0.08 * strength * n(rng);
  if (model.num_joints() > 1) a.pose[3] = strength * jaw(rng);
  for (Eigen::Index k = 0; k < a.expression.size(); ++k) a.expression[k] = 0.5 * strength * n(rng);
  return a;
}

}  // namespace

std::vector<Image> PhotometricTargets::training_images() const {
  std::vector<Image> out;
  for (const auto& v : training) out.push_back(v.image);
  return out;
}

BoundCloud make_reference_cloud(const HeadModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.5, 1.0);
  std::bernoulli_distribution sign(0.5);
  AnimationInput rest = AnimationInput::neutral(model);
  for (Eigen::Index k = 0; k < rest.shape.size(); ++k) rest.shape[k] = (sign(rng) ? 1.0 : -1.0) * mag(rng);

  InitOptions opt;
  opt.scale_mode = InitScaleMode::Linear;
  BoundCloud cloud = init_cloud(model, rest, opt);
  cloud.shape = rest.shape;
  const auto posed = pose_avatar(model, cloud, rest);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    cloud.colors[i] = paint(posed.world.poses[i].position);
    cloud.opacity_logits[i] = logit(0.95);
  }
  quantize_to_storage(cloud);
  return cloud;
}

PhotometricTargets make_photometric_targets(const HeadModel& model, const BoundCloud& reference,
                                            const PhotometricSetup& setup, int resolution, const Vec3& background) {
  PhotometricTargets t;
  t.reference_shape = reference.shape;
  std::mt19937_64 rng(setup.reference_seed);
  const double elevations[] = {-10.0, 5.0, 20.0, 0.0};
  auto make = [&](double azimuth, double elevation, double strength) {
    TargetView v;
    v.camera.distance = setup.camera_distance;
    v.camera.fovy = setup.fovy;
    v.camera.azimuth = azimuth;
    v.camera.elevation = elevation;
    v.camera.width = v.camera.height = resolution;
    v.anim = random_anim(model, rng, strength);
    v.image = render_view(model, reference, v.camera, v.anim, background);
    return v;
  };
  const double step = 360.0 / setup.training_views;
  for (int i = 0; i < setup.training_views; ++i)
    t.training.push_back(make(-180.0 + step * i, elevations[i % 4], i % 2 == 0 ? 0.0 : 1.0));
  const double held_step = 360.0 / std::max(1, setup.held_out_views);
  for (int i = 0; i < setup.held_out_views; ++i)
    t.held_out.push_back(make(-180.0 + 0.5 * step + held_step * i + 0.25 * step, 10.0, 0.7));
  return t;
}

Image render_view(const HeadModel& model, const BoundCloud& cloud, const CameraSample& camera, const AnimationInput& anim,
                  const Vec3& background) {
  const auto posed = pose_avatar(model, cloud, anim);
  RenderSettings rs;
  rs.background = background;
  return render(posed.world, Camera::from_sample(camera), rs).color;
}

double mean_psnr(const HeadModel& model, const BoundCloud& cloud, const std::vector<TargetView>& views,
                 const Vec3& background) {
  if (views.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& v : views) sum += psnr(render_view(model, cloud, v.camera, v.anim, background), v.image);
  return sum / static_cast<double>(views.size());
}

}  // namespace headgs
