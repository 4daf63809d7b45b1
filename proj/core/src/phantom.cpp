#include "mgan/phantom.hpp"

#include <cmath>
#include <fstream>

#include "mgan/rng.hpp"
#include "mgan/volume_io.hpp"

namespace mgan::phantom {

namespace {

struct Bump {
  float cz, cy, cx, sigma, amp;
};

float field_at(const std::vector<Bump>& bumps, float z, float y, float x) {
  float g = 0.0f;
  for (const Bump& b : bumps) {
    const float dz = z - b.cz, dy = y - b.cy, dx = x - b.cx;
    g += b.amp * std::exp(-(dz * dz + dy * dy + dx * dx) / (2.0f * b.sigma * b.sigma));
  }
  return g;
}

// separable 5-tap Gaussian blur (sigma 0.8), replicate boundary
void blur3(Tensor& v) {
  constexpr float sigma = 0.8f;
  float k[5];
  float sum = 0.0f;
  for (int i = -2; i <= 2; ++i) {
    k[i + 2] = std::exp(-static_cast<float>(i * i) / (2.0f * sigma * sigma));
    sum += k[i + 2];
  }
  for (float& c : k) c /= sum;
  const int D = v.dim(0), H = v.dim(1), W = v.dim(2);
  Tensor tmp(v.shape());
  auto idx = [&](int z, int y, int x) { return (static_cast<std::int64_t>(z) * H + y) * W + x; };
  auto clampi = [](int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); };
  for (int pass = 0; pass < 3; ++pass) {
    for (int z = 0; z < D; ++z)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          float s = 0.0f;
          for (int t = -2; t <= 2; ++t) {
            int zz = z, yy = y, xx = x;
            if (pass == 0) zz = clampi(z + t, D);
            if (pass == 1) yy = clampi(y + t, H);
            if (pass == 2) xx = clampi(x + t, W);
            s += k[t + 2] * v[idx(zz, yy, xx)];
          }
          tmp[idx(z, y, x)] = s;
        }
    std::swap(v, tmp);
  }
}

float trilinear(const Tensor& f, float z, float y, float x) {
  const int D = f.dim(0), H = f.dim(1), W = f.dim(2);
  auto clampf = [](float v, float hi) { return v < 0.0f ? 0.0f : (v > hi ? hi : v); };
  z = clampf(z, static_cast<float>(D - 1));
  y = clampf(y, static_cast<float>(H - 1));
  x = clampf(x, static_cast<float>(W - 1));
  const int z0 = static_cast<int>(z), y0 = static_cast<int>(y), x0 = static_cast<int>(x);
  const int z1 = std::min(z0 + 1, D - 1), y1 = std::min(y0 + 1, H - 1), x1 = std::min(x0 + 1, W - 1);
  const float fz = z - static_cast<float>(z0), fy = y - static_cast<float>(y0), fx = x - static_cast<float>(x0);
  auto at = [&](int zz, int yy, int xx) { return f[(static_cast<std::int64_t>(zz) * H + yy) * W + xx]; };
  return at(z0, y0, x0) * (1 - fz) * (1 - fy) * (1 - fx) + at(z1, y0, x0) * fz * (1 - fy) * (1 - fx) +
         at(z0, y1, x0) * (1 - fz) * fy * (1 - fx) + at(z0, y0, x1) * (1 - fz) * (1 - fy) * fx +
         at(z1, y1, x0) * fz * fy * (1 - fx) + at(z1, y0, x1) * fz * (1 - fy) * fx +
         at(z0, y1, x1) * (1 - fz) * fy * fx + at(z1, y1, x1) * fz * fy * fx;
}

// class intensities converge slightly with age; flipping swaps the classes,
// modeling the WM/GM contrast inversion between time points
void class_intensities(float age, bool flip, float& c1, float& c2) {
  c1 = 0.25f + 0.05f * age;
  c2 = 0.75f - 0.05f * age;
  if (flip) std::swap(c1, c2);
}

}  // namespace

void PhantomSpec::validate() const {
  for (int s : size)
    if (s < 32) throw InvalidSpec("phantom size must be >= 32 per axis");
  if (n_blobs < 1) throw InvalidSpec("n_blobs must be >= 1");
  if (age_a < 0.0f || age_a > 1.0f || age_b < 0.0f || age_b > 1.0f)
    throw InvalidSpec("ages must lie in [0,1]");
  if (deform_amplitude < 0.0f) throw InvalidSpec("deform_amplitude must be >= 0");
  if (noise_sigma < 0.0f) throw InvalidSpec("noise_sigma must be >= 0");
}

PhantomPair generate_phantom_pair_full(const PhantomSpec& spec) {
  spec.validate();
  const int D = spec.size[0], H = spec.size[1], W = spec.size[2];
  const float min_dim = static_cast<float>(std::min({D, H, W}));
  Rng rng(derive_seed(spec.seed, "phantom"));

  // foreground ellipsoid
  float cz = 0.5f * static_cast<float>(D) + static_cast<float>(rng.uniform(-1.5, 1.5));
  float cy = 0.5f * static_cast<float>(H) + static_cast<float>(rng.uniform(-1.5, 1.5));
  float cx = 0.5f * static_cast<float>(W) + static_cast<float>(rng.uniform(-1.5, 1.5));
  float rz = 0.40f * static_cast<float>(D) * static_cast<float>(rng.uniform(1.0, 1.06));
  float ry = 0.38f * static_cast<float>(H) * static_cast<float>(rng.uniform(1.0, 1.06));
  float rx = 0.36f * static_cast<float>(W) * static_cast<float>(rng.uniform(1.0, 1.06));

  // tissue structure field
  std::vector<Bump> gfield;
  for (int i = 0; i < spec.n_blobs; ++i) {
    Bump b;
    b.cz = cz + static_cast<float>(rng.uniform(-0.5, 0.5)) * rz;
    b.cy = cy + static_cast<float>(rng.uniform(-0.5, 0.5)) * ry;
    b.cx = cx + static_cast<float>(rng.uniform(-0.5, 0.5)) * rx;
    b.sigma = static_cast<float>(rng.uniform(0.12, 0.30)) * min_dim;
    b.amp = (rng.bernoulli(0.5) ? 1.0f : -1.0f) * static_cast<float>(rng.uniform(0.6, 1.2));
    gfield.push_back(b);
  }

  // smooth displacement field for t_b, capped to avoid foldovers
  const float amp_cap =
      std::min(spec.deform_amplitude * std::fabs(spec.age_b - spec.age_a), 0.1f * min_dim);
  struct VecBump {
    Bump b;
    float az, ay, ax;
  };
  std::vector<VecBump> ufield;
  for (int i = 0; i < 3; ++i) {
    VecBump vb;
    vb.b.cz = cz + static_cast<float>(rng.uniform(-0.5, 0.5)) * rz;
    vb.b.cy = cy + static_cast<float>(rng.uniform(-0.5, 0.5)) * ry;
    vb.b.cx = cx + static_cast<float>(rng.uniform(-0.5, 0.5)) * rx;
    vb.b.sigma = static_cast<float>(rng.uniform(0.15, 0.30)) * min_dim;
    vb.b.amp = 1.0f;
    float az = static_cast<float>(rng.uniform(-1, 1));
    float ay = static_cast<float>(rng.uniform(-1, 1));
    float ax = static_cast<float>(rng.uniform(-1, 1));
    const float norm = std::sqrt(az * az + ay * ay + ax * ax);
    const float mag = amp_cap * static_cast<float>(rng.uniform(0.5, 1.0));
    if (norm > 1e-9f) {
      az *= mag / norm;
      ay *= mag / norm;
      ax *= mag / norm;
    }
    vb.az = az;
    vb.ay = ay;
    vb.ax = ax;
    ufield.push_back(vb);
  }

  Tensor g_a({D, H, W}), g_b({D, H, W});
  Tensor mask({D, H, W});
  for (int z = 0; z < D; ++z)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const std::int64_t i = (static_cast<std::int64_t>(z) * H + y) * W + x;
        const float ez = (static_cast<float>(z) - cz) / rz;
        const float ey = (static_cast<float>(y) - cy) / ry;
        const float ex = (static_cast<float>(x) - cx) / rx;
        mask[i] = (ez * ez + ey * ey + ex * ex <= 1.0f) ? 1.0f : 0.0f;
        g_a[i] = field_at(gfield, static_cast<float>(z), static_cast<float>(y), static_cast<float>(x));
        float uz = 0.0f, uy = 0.0f, ux = 0.0f;
        for (const VecBump& vb : ufield) {
          const float dz = static_cast<float>(z) - vb.b.cz, dy = static_cast<float>(y) - vb.b.cy,
                      dx = static_cast<float>(x) - vb.b.cx;
          const float wgt = std::exp(-(dz * dz + dy * dy + dx * dx) / (2.0f * vb.b.sigma * vb.b.sigma));
          uz += vb.az * wgt;
          uy += vb.ay * wgt;
          ux += vb.ax * wgt;
        }
        g_b[i] = field_at(gfield, static_cast<float>(z) + uz, static_cast<float>(y) + uy,
                          static_cast<float>(x) + ux);
      }

  auto render = [&](const Tensor& g, float age, bool flip, Tensor& labels) {
    float c1, c2;
    class_intensities(age, flip, c1, c2);
    Tensor v({D, H, W});
    labels = Tensor({D, H, W});
    for (std::int64_t i = 0; i < v.numel(); ++i) {
      if (mask[i] > 0.0f) {
        const bool class2 = g[i] > 0.0f;
        labels[i] = class2 ? 2.0f : 1.0f;
        v[i] = class2 ? c2 : c1;
      }
    }
    blur3(v);
    for (std::int64_t i = 0; i < v.numel(); ++i)
      if (mask[i] == 0.0f) v[i] = 0.0f;
    return v;
  };

  PhantomPair out;
  Tensor va = render(g_a, spec.age_a, false, out.labels_a);
  Tensor vb = render(g_b, spec.age_b, spec.contrast_flip, out.labels_b);

  if (spec.noise_sigma > 0.0f) {
    for (std::int64_t i = 0; i < va.numel(); ++i)
      if (mask[i] > 0.0f) va[i] += static_cast<float>(rng.normal(0.0, spec.noise_sigma));
    for (std::int64_t i = 0; i < vb.numel(); ++i)
      if (mask[i] > 0.0f) vb[i] += static_cast<float>(rng.normal(0.0, spec.noise_sigma));
  }

  out.i_ta = Volume::from_tensor(va);
  out.i_tb = Volume::from_tensor(vb);
  out.mask = Volume::from_tensor(mask);
  return out;
}

std::tuple<Volume, Volume, Volume> generate_phantom_pair(const PhantomSpec& spec) {
  PhantomPair p = generate_phantom_pair_full(spec);
  return {std::move(p.i_ta), std::move(p.i_tb), std::move(p.mask)};
}

std::filesystem::path generate_cohort(const std::vector<CohortEntry>& entries,
                                      const std::filesystem::path& out_dir, const std::string& extension) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  for (size_t i = 0; i < entries.size(); ++i)
    for (size_t j = i + 1; j < entries.size(); ++j)
      if (entries[i].subject == entries[j].subject)
        throw DuplicateSubject(entries[i].subject);

  const std::filesystem::path manifest_path = out_dir / "manifest.csv";
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest) throw IoFailure("cannot write " + manifest_path.string());
  manifest << "subject,timepoint,path\n";
  for (const CohortEntry& e : entries) {
    auto [i_ta, i_tb, mask] = generate_phantom_pair(e.spec);
    const std::string fa = e.subject + "_ta" + extension;
    const std::string fb = e.subject + "_tb" + extension;
    write_volume(i_ta, out_dir / fa);
    write_volume(i_tb, out_dir / fb);
    manifest << e.subject << ",ta," << fa << "\n";
    manifest << e.subject << ",tb," << fb << "\n";
  }
  if (!manifest) throw IoFailure("short write to " + manifest_path.string());
  return manifest_path;
}

}  // namespace mgan::phantom
