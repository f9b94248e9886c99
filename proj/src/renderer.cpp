#include "headgs/renderer.hpp"

#include "headgs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace headgs {

namespace {

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  }
  void d(double v) { bytes(&v, sizeof v); }
  template <typename M>
  void m(const M& mat) {
    for (Eigen::Index i = 0; i < mat.size(); ++i) d(mat.data()[i]);
  }
};

// Compact per-Gaussian record for the compositing loops.
struct Splat {
  double mx, my;
  double ca, cb, cc;  // conic (0,0), (0,1), (1,1)
  double opacity;
  double r, g, b;
  int x0, x1, y0, y1;  // pixels whose centers lie within the footprint square
};

Splat make_splat(const ScreenGaussian& g) {
  return {g.mean.x(),
          g.mean.y(),
          g.conic(0, 0),
          g.conic(0, 1),
          g.conic(1, 1),
          g.opacity,
          g.color.x(),
          g.color.y(),
          g.color.z(),
          static_cast<int>(std::ceil(g.mean.x() - g.radius - 0.5)),
          static_cast<int>(std::floor(g.mean.x() + g.radius - 0.5)),
          static_cast<int>(std::ceil(g.mean.y() - g.radius - 0.5)),
          static_cast<int>(std::floor(g.mean.y() + g.radius - 0.5))};
}

std::vector<Splat> make_splats(const ProjectedSet& p) {
  std::vector<Splat> s(p.gaussians.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = make_splat(p.gaussians[i]);
  return s;
}

struct TileRect {
  int x0, x1, y0, y1;  // inclusive pixel range
  int width() const { return x1 - x0 + 1; }
};

TileRect tile_rect(int t, int tiles_x, int width, int height) {
  const int tx = t % tiles_x, ty = t / tiles_x;
  return {tx * kTileSize, std::min(width, (tx + 1) * kTileSize) - 1, ty * kTileSize,
          std::min(height, (ty + 1) * kTileSize) - 1};
}

struct ViewJacobian {
  Eigen::Matrix<double, 2, 3> J;
  Vec3 view;
};

ViewJacobian view_jacobian(const Camera& cam, const Vec3& world) {
  ViewJacobian v;
  v.view = cam.to_view(world);
  const double x = v.view.x(), y = v.view.y(), z = v.view.z();
  v.J << cam.fx / z, 0.0, -cam.fx * x / (z * z), 0.0, cam.fy / z, -cam.fy * y / (z * z);
  return v;
}

Mat3 world_covariance(const WorldPose& p) {
  const Mat3 M = p.rotation * p.scale.asDiagonal();
  return M * M.transpose();
}

}  // namespace

std::uint64_t render_fingerprint(const WorldGaussians& g, const Camera& cam, const Vec3& background) {
  Fnv1a h;
  for (std::size_t i = 0; i < g.size(); ++i) {
    h.m(g.poses[i].position);
    h.m(g.poses[i].scale);
    h.m(g.poses[i].rotation);
    h.m(g.colors[i]);
    h.d(g.opacities[i]);
  }
  h.m(cam.rotation);
  h.m(cam.translation);
  for (double v : {cam.fx, cam.fy, cam.cx, cam.cy, cam.near_plane}) h.d(v);
  h.bytes(&cam.width, sizeof cam.width);
  h.bytes(&cam.height, sizeof cam.height);
  h.m(background);
  return h.h;
}

ProjectedSet project(const WorldGaussians& g, const Camera& cam) {
  if (g.colors.size() != g.size() || g.opacities.size() != g.size())
    throw DimensionError("world Gaussian arrays have inconsistent lengths");
  ProjectedSet out;
  out.gaussians.reserve(g.size());
  out.source.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto vj = view_jacobian(cam, g.poses[i].position);
    if (vj.view.z() < cam.near_plane) continue;
    const Eigen::Matrix<double, 2, 3> T = vj.J * cam.rotation;
    Mat2 cov = T * world_covariance(g.poses[i]) * T.transpose();
    cov(0, 0) += kCovarianceFloor;
    cov(1, 1) += kCovarianceFloor;
    cov(1, 0) = cov(0, 1);
    const double det = cov.determinant();
    if (!(det > 0.0)) continue;

    ScreenGaussian s;
    s.mean = Vec2(cam.fx * vj.view.x() / vj.view.z() + cam.cx, cam.fy * vj.view.y() / vj.view.z() + cam.cy);
    s.cov = cov;
    s.conic << cov(1, 1) / det, -cov(0, 1) / det, -cov(0, 1) / det, cov(0, 0) / det;
    const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    s.radius = static_cast<int>(std::ceil(kFootprintSigmas * std::sqrt(lambda_max)));
    if (s.mean.x() + s.radius < 0.0 || s.mean.x() - s.radius > cam.width || s.mean.y() + s.radius < 0.0 ||
        s.mean.y() - s.radius > cam.height)
      continue;
    s.depth = vj.view.z();
    s.color = g.colors[i];
    s.opacity = g.opacities[i];
    out.gaussians.push_back(s);
    out.source.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

RenderOutput rasterize(const ProjectedSet& projected, int width, int height, const RenderSettings& settings) {
  RenderOutput out;
  out.color = Image(width, height, 3);
  out.alpha = Image(width, height, 1);
  out.projected = projected;
  out.background = settings.background;
  out.tiles_x = (width + kTileSize - 1) / kTileSize;
  out.tiles_y = (height + kTileSize - 1) / kTileSize;
  out.tile_lists.assign(static_cast<std::size_t>(out.tiles_x) * out.tiles_y, {});
  out.n_contrib.assign(static_cast<std::size_t>(width) * height, 0);

  // Global depth order, ties broken by input index.
  const auto& gs = projected.gaussians;
  out.sorted.resize(gs.size());
  std::iota(out.sorted.begin(), out.sorted.end(), 0u);
  std::sort(out.sorted.begin(), out.sorted.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (gs[a].depth != gs[b].depth) return gs[a].depth < gs[b].depth;
    return projected.source[a] < projected.source[b];
  });

  const auto splats = make_splats(projected);
  for (auto idx : out.sorted) {
    const Splat& s = splats[idx];
    const int px0 = std::max(0, s.x0), px1 = std::min(width - 1, s.x1);
    const int py0 = std::max(0, s.y0), py1 = std::min(height - 1, s.y1);
    if (px0 > px1 || py0 > py1) continue;
    for (int ty = py0 / kTileSize; ty <= py1 / kTileSize; ++ty)
      for (int tx = px0 / kTileSize; tx <= px1 / kTileSize; ++tx)
        out.tile_lists[static_cast<std::size_t>(ty) * out.tiles_x + tx].push_back(idx);
  }

  const Vec3 bg = settings.background;
  const int n_tiles = out.tiles_x * out.tiles_y;

  // Each tile walks its list front to back and updates only the pixels inside
  // each footprint; every pixel still sees its entries in list order.
#pragma omp parallel for schedule(dynamic, 1)
  for (int t = 0; t < n_tiles; ++t) {
    const TileRect r = tile_rect(t, out.tiles_x, width, height);
    const auto& list = out.tile_lists[static_cast<std::size_t>(t)];
    constexpr int kPixels = kTileSize * kTileSize;
    double T[kPixels], cr[kPixels] = {}, cg[kPixels] = {}, cb[kPixels] = {};
    std::uint32_t last[kPixels] = {};
    bool done[kPixels] = {};
    std::fill(std::begin(T), std::end(T), 1.0);
    int remaining = r.width() * (r.y1 - r.y0 + 1);
    for (std::size_t k = 0; k < list.size() && remaining > 0; ++k) {
      const Splat& s = splats[list[k]];
      const int x0 = std::max(r.x0, s.x0), x1 = std::min(r.x1, s.x1);
      const int y0 = std::max(r.y0, s.y0), y1 = std::min(r.y1, s.y1);
      for (int py = y0; py <= y1; ++py) {
        const double dy = py + 0.5 - s.my;
        for (int px = x0; px <= x1; ++px) {
          const int p = (py - r.y0) * kTileSize + (px - r.x0);
          if (done[p]) continue;
          const double dx = px + 0.5 - s.mx;
          const double power = -0.5 * (s.ca * dx * dx + 2.0 * s.cb * dx * dy + s.cc * dy * dy);
          if (power < kKernelCutoffPower) continue;
          const double a = s.opacity * std::exp(power);
          const double w = a * T[p];
          cr[p] += s.r * w;
          cg[p] += s.g * w;
          cb[p] += s.b * w;
          T[p] *= 1.0 - a;
          last[p] = static_cast<std::uint32_t>(k + 1);
          if (T[p] < kMinTransmittance) {
            done[p] = true;
            --remaining;
          }
        }
      }
    }
    for (int py = r.y0; py <= r.y1; ++py)
      for (int px = r.x0; px <= r.x1; ++px) {
        const int p = (py - r.y0) * kTileSize + (px - r.x0);
        out.color.at(px, py, 0) = cr[p] + T[p] * bg.x();
        out.color.at(px, py, 1) = cg[p] + T[p] * bg.y();
        out.color.at(px, py, 2) = cb[p] + T[p] * bg.z();
        out.alpha.at(px, py, 0) = 1.0 - T[p];
        out.n_contrib[static_cast<std::size_t>(py) * width + px] = last[p];
      }
  }
  return out;
}

RenderOutput render(const WorldGaussians& gaussians, const Camera& camera, const RenderSettings& settings) {
  auto out = rasterize(project(gaussians, camera), camera.width, camera.height, settings);
  out.fingerprint = render_fingerprint(gaussians, camera, settings.background);
  return out;
}

ScreenGrads rasterize_backward(const RenderOutput& fwd, const Image& grad) {
  const int width = fwd.color.width, height = fwd.color.height;
  if (grad.width != width || grad.height != height || grad.channels != 3)
    throw DimensionError("color gradient must match the rendered image");
  const auto& gs = fwd.projected.gaussians;
  const std::size_t n = gs.size();
  if (fwd.tile_lists.size() != static_cast<std::size_t>(fwd.tiles_x) * fwd.tiles_y ||
      fwd.n_contrib.size() != static_cast<std::size_t>(width) * height)
    throw StaleIntermediatesError("render intermediates are incomplete");

  const auto splats = make_splats(fwd.projected);
  const int n_tiles = fwd.tiles_x * fwd.tiles_y;
  // Per-tile gradient buffers, parallel to the tile lists: mean(2) conic(3) color(3) opacity(1).
  constexpr int kStride = 9;
  std::vector<std::vector<double>> tile_grads(static_cast<std::size_t>(n_tiles));

  struct Hit {
    std::uint32_t k;
    double alpha, G, T, dx, dy;
  };

#pragma omp parallel for schedule(dynamic, 1)
  for (int t = 0; t < n_tiles; ++t) {
    const TileRect r = tile_rect(t, fwd.tiles_x, width, height);
    const auto& list = fwd.tile_lists[static_cast<std::size_t>(t)];
    auto& buf = tile_grads[static_cast<std::size_t>(t)];
    buf.assign(list.size() * kStride, 0.0);

    // Replay the forward pass footprint by footprint to collect, per pixel,
    // the entries that contributed to it in front-to-back order.
    constexpr int kPixels = kTileSize * kTileSize;
    thread_local std::vector<std::vector<Hit>> pixel_hits(kPixels);
    for (auto& h : pixel_hits) h.clear();
    double T[kPixels];
    std::uint32_t last[kPixels] = {};
    std::fill(std::begin(T), std::end(T), 1.0);
    std::uint32_t max_last = 0;
    for (int py = r.y0; py <= r.y1; ++py)
      for (int px = r.x0; px <= r.x1; ++px) {
        if (grad.at(px, py, 0) == 0.0 && grad.at(px, py, 1) == 0.0 && grad.at(px, py, 2) == 0.0) continue;
        const int p = (py - r.y0) * kTileSize + (px - r.x0);
        last[p] = fwd.n_contrib[static_cast<std::size_t>(py) * width + px];
        max_last = std::max(max_last, last[p]);
      }
    for (std::uint32_t k = 0; k < max_last; ++k) {
      const Splat& s = splats[list[k]];
      const int x0 = std::max(r.x0, s.x0), x1 = std::min(r.x1, s.x1);
      const int y0 = std::max(r.y0, s.y0), y1 = std::min(r.y1, s.y1);
      for (int py = y0; py <= y1; ++py) {
        const double dy = py + 0.5 - s.my;
        for (int px = x0; px <= x1; ++px) {
          const int p = (py - r.y0) * kTileSize + (px - r.x0);
          if (k >= last[p]) continue;
          const double dx = px + 0.5 - s.mx;
          const double power = -0.5 * (s.ca * dx * dx + 2.0 * s.cb * dx * dy + s.cc * dy * dy);
          if (power < kKernelCutoffPower) continue;
          const double G = std::exp(power);
          const double a = s.opacity * G;
          pixel_hits[p].push_back({k, a, G, T[p], dx, dy});
          T[p] *= (1.0 - a);
        }
      }
    }

    for (int py = r.y0; py <= r.y1; ++py) {
      for (int px = r.x0; px <= r.x1; ++px) {
        const auto& hits = pixel_hits[(py - r.y0) * kTileSize + (px - r.x0)];
        if (hits.empty()) continue;
        const double gr = grad.at(px, py, 0), gg = grad.at(px, py, 1), gb = grad.at(px, py, 2);
        // Color seen behind the current entry.
        double qr = fwd.background.x(), qg = fwd.background.y(), qb = fwd.background.z();
        for (std::size_t h = hits.size(); h-- > 0;) {
          const Hit& hit = hits[h];
          const Splat& s = splats[list[hit.k]];
          double* out = &buf[static_cast<std::size_t>(hit.k) * kStride];
          const double w = hit.alpha * hit.T;
          out[5] += w * gr;
          out[6] += w * gg;
          out[7] += w * gb;
          const double dL_da = hit.T * (gr * (s.r - qr) + gg * (s.g - qg) + gb * (s.b - qb));
          qr = s.r * hit.alpha + (1.0 - hit.alpha) * qr;
          qg = s.g * hit.alpha + (1.0 - hit.alpha) * qg;
          qb = s.b * hit.alpha + (1.0 - hit.alpha) * qb;
          out[8] += dL_da * hit.G;
          const double dL_dpower = dL_da * s.opacity * hit.G;
          // power = -0.5 d^T A d with d = pixel - mean.
          out[0] += dL_dpower * (s.ca * hit.dx + s.cb * hit.dy);
          out[1] += dL_dpower * (s.cb * hit.dx + s.cc * hit.dy);
          out[2] += dL_dpower * (-0.5 * hit.dx * hit.dx);
          out[3] += dL_dpower * (-0.5 * hit.dx * hit.dy);
          out[4] += dL_dpower * (-0.5 * hit.dy * hit.dy);
        }
      }
    }
  }

  ScreenGrads sg;
  sg.mean.assign(n, Vec2::Zero());
  sg.conic.assign(n, Mat2::Zero());
  sg.color.assign(n, Vec3::Zero());
  sg.opacity.assign(n, 0.0);
  for (int t = 0; t < n_tiles; ++t) {
    const auto& list = fwd.tile_lists[static_cast<std::size_t>(t)];
    const auto& buf = tile_grads[static_cast<std::size_t>(t)];
    for (std::size_t k = 0; k < list.size(); ++k) {
      const double* g = &buf[k * kStride];
      const auto i = list[k];
      sg.mean[i] += Vec2(g[0], g[1]);
      sg.conic[i](0, 0) += g[2];
      sg.conic[i](0, 1) += g[3];
      sg.conic[i](1, 0) += g[3];
      sg.conic[i](1, 1) += g[4];
      sg.color[i] += Vec3(g[5], g[6], g[7]);
      sg.opacity[i] += g[8];
    }
  }
  return sg;
}

WorldGaussianGrads render_backward(const WorldGaussians& g, const Camera& cam, const RenderOutput& fwd,
                                   const Image& grad_color) {
  if (render_fingerprint(g, cam, fwd.background) != fwd.fingerprint)
    throw StaleIntermediatesError("render intermediates do not belong to these Gaussians and camera");
  const ScreenGrads sg = rasterize_backward(fwd, grad_color);

  WorldGaussianGrads out;
  out.poses.assign(g.size(), WorldPoseGrad{});
  out.colors.assign(g.size(), Vec3::Zero());
  out.opacities.assign(g.size(), 0.0);
  out.mean2d_norm.assign(g.size(), -1.0);

  const auto& proj = fwd.projected;
  for (std::size_t j = 0; j < proj.gaussians.size(); ++j) {
    const auto i = proj.source[j];
    const auto& pose = g.poses[i];
    const auto& sgs = proj.gaussians[j];
    out.colors[i] = sg.color[j];
    out.opacities[i] = sg.opacity[j];
    out.mean2d_norm[i] = sg.mean[j].norm();

    const auto vj = view_jacobian(cam, pose.position);
    const double x = vj.view.x(), y = vj.view.y(), z = vj.view.z();
    const Mat3& W = cam.rotation;
    const Eigen::Matrix<double, 2, 3> T = vj.J * W;
    const Mat3 M = pose.rotation * pose.scale.asDiagonal();
    const Mat3 Sigma = M * M.transpose();

    // conic = cov^-1
    const Mat2 g_cov = -sgs.conic * sg.conic[j] * sgs.conic;
    const Mat3 g_sigma = T.transpose() * g_cov * T;
    const Eigen::Matrix<double, 2, 3> g_T = 2.0 * g_cov * T * Sigma;
    const Eigen::Matrix<double, 2, 3> g_J = g_T * W.transpose();

    Vec3 g_view = Vec3::Zero();
    const double z2 = z * z, z3 = z2 * z;
    g_view.x() += g_J(0, 2) * (-cam.fx / z2);
    g_view.y() += g_J(1, 2) * (-cam.fy / z2);
    g_view.z() += g_J(0, 0) * (-cam.fx / z2) + g_J(0, 2) * (2.0 * cam.fx * x / z3) + g_J(1, 1) * (-cam.fy / z2) +
                  g_J(1, 2) * (2.0 * cam.fy * y / z3);
    const Vec2& gm = sg.mean[j];
    g_view.x() += gm.x() * cam.fx / z;
    g_view.y() += gm.y() * cam.fy / z;
    g_view.z() += -gm.x() * cam.fx * x / z2 - gm.y() * cam.fy * y / z2;

    auto& pg = out.poses[i];
    pg.position = W.transpose() * g_view;
    const Mat3 g_M = 2.0 * g_sigma * M;
    pg.rotation = g_M * pose.scale.asDiagonal();
    for (int k = 0; k < 3; ++k) pg.scale[k] = g_M.col(k).dot(pose.rotation.col(k));
  }
  return out;
}

}  // namespace headgs
