#include "mgan/uncertainty.hpp"

#include <cmath>

namespace mgan::uncertainty {

namespace {

using Mat3 = std::array<std::array<float, 3>, 3>;

Mat3 matmul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      float s = 0.0f;
      for (int k = 0; k < 3; ++k) s += a[static_cast<size_t>(i)][static_cast<size_t>(k)] * b[static_cast<size_t>(k)][static_cast<size_t>(j)];
      c[static_cast<size_t>(i)][static_cast<size_t>(j)] = s;
    }
  return c;
}

Mat3 transpose(const Mat3& a) {
  Mat3 t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[static_cast<size_t>(i)][static_cast<size_t>(j)] = a[static_cast<size_t>(j)][static_cast<size_t>(i)];
  return t;
}

// rotation about coordinate axis: axis 0 rotates the (H,W) plane, axis 1 the
// (D,W) plane, axis 2 the (D,H) plane
Mat3 axis_rotation(int axis, float angle) {
  const float c = std::cos(angle), s = std::sin(angle);
  Mat3 r{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  const int i = axis == 0 ? 1 : 0;
  const int j = axis == 2 ? 1 : 2;
  r[static_cast<size_t>(i)][static_cast<size_t>(i)] = c;
  r[static_cast<size_t>(i)][static_cast<size_t>(j)] = -s;
  r[static_cast<size_t>(j)][static_cast<size_t>(i)] = s;
  r[static_cast<size_t>(j)][static_cast<size_t>(j)] = c;
  return r;
}

// forward map: R2 * R1 * R0 (rotate about depth axis first)
Mat3 rotation_matrix(const std::array<float, 3>& angles) {
  return matmul(axis_rotation(2, angles[2]), matmul(axis_rotation(1, angles[1]), axis_rotation(0, angles[0])));
}

bool any_angle(const std::array<float, 3>& angles) {
  return angles[0] != 0.0f || angles[1] != 0.0f || angles[2] != 0.0f;
}

// resample with output(p) = input(c + M (p - c)), -1 fill outside
Volume resample(const Volume& v, const Mat3& m) {
  const int D = v.dim(0), H = v.dim(1), W = v.dim(2);
  const float cz = 0.5f * static_cast<float>(D - 1);
  const float cy = 0.5f * static_cast<float>(H - 1);
  const float cx = 0.5f * static_cast<float>(W - 1);
  Volume out = v;
  for (int z = 0; z < D; ++z)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const float pz = static_cast<float>(z) - cz, py = static_cast<float>(y) - cy,
                    px = static_cast<float>(x) - cx;
        const float qz = m[0][0] * pz + m[0][1] * py + m[0][2] * px + cz;
        const float qy = m[1][0] * pz + m[1][1] * py + m[1][2] * px + cy;
        const float qx = m[2][0] * pz + m[2][1] * py + m[2][2] * px + cx;
        float val = -1.0f;
        if (qz >= 0.0f && qz <= static_cast<float>(D - 1) && qy >= 0.0f && qy <= static_cast<float>(H - 1) &&
            qx >= 0.0f && qx <= static_cast<float>(W - 1)) {
          const int z0 = static_cast<int>(qz), y0 = static_cast<int>(qy), x0 = static_cast<int>(qx);
          const int z1 = std::min(z0 + 1, D - 1), y1 = std::min(y0 + 1, H - 1), x1 = std::min(x0 + 1, W - 1);
          const float fz = qz - static_cast<float>(z0), fy = qy - static_cast<float>(y0),
                      fx = qx - static_cast<float>(x0);
          auto at = [&](int zz, int yy, int xx) {
            return v.data[(static_cast<std::int64_t>(zz) * H + yy) * W + xx];
          };
          val = at(z0, y0, x0) * (1 - fz) * (1 - fy) * (1 - fx) + at(z1, y0, x0) * fz * (1 - fy) * (1 - fx) +
                at(z0, y1, x0) * (1 - fz) * fy * (1 - fx) + at(z0, y0, x1) * (1 - fz) * (1 - fy) * fx +
                at(z1, y1, x0) * fz * fy * (1 - fx) + at(z1, y0, x1) * fz * (1 - fy) * fx +
                at(z0, y1, x1) * (1 - fz) * fy * fx + at(z1, y1, x1) * fz * fy * fx;
        }
        out.data[(static_cast<std::int64_t>(z) * H + y) * W + x] = val;
      }
  return out;
}

Volume flip_axes(const Volume& v, const std::array<bool, 3>& flips) {
  if (!flips[0] && !flips[1] && !flips[2]) return v;
  const int D = v.dim(0), H = v.dim(1), W = v.dim(2);
  Volume out = v;
  for (int z = 0; z < D; ++z)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const int sz = flips[0] ? D - 1 - z : z;
        const int sy = flips[1] ? H - 1 - y : y;
        const int sx = flips[2] ? W - 1 - x : x;
        out.data[(static_cast<std::int64_t>(z) * H + y) * W + x] =
            v.data[(static_cast<std::int64_t>(sz) * H + sy) * W + sx];
      }
  return out;
}

}  // namespace

TtaTransform TtaTransform::sample(std::uint64_t seed, float noise_sigma) {
  Rng rng(derive_seed(seed, "tta-sample"));
  TtaTransform t;
  for (int i = 0; i < 3; ++i) t.flips[static_cast<size_t>(i)] = rng.bernoulli(0.5);
  for (int i = 0; i < 3; ++i)
    t.angles[static_cast<size_t>(i)] = static_cast<float>(rng.uniform(0.0, 2.0 * 3.14159265358979323846));
  t.noise_sigma = noise_sigma;
  t.seed = seed;
  return t;
}

bool TtaTransform::is_identity() const {
  return !flips[0] && !flips[1] && !flips[2] && !any_angle(angles) && noise_sigma == 0.0f;
}

Volume apply_tta(const Volume& v, const TtaTransform& t) {
  Volume out = v;
  if (t.noise_sigma > 0.0f) {
    Rng rng(derive_seed(t.seed, "tta-noise"));
    for (std::int64_t i = 0; i < out.data.numel(); ++i)
      out.data[i] += static_cast<float>(rng.normal(0.0, t.noise_sigma));
  }
  out = flip_axes(out, t.flips);
  if (any_angle(t.angles)) {
    // backward warp uses the inverse (transpose) of the forward rotation
    out = resample(out, transpose(rotation_matrix(t.angles)));
  }
  return out;
}

Volume invert_tta(const Volume& v, const TtaTransform& t) {
  Volume out = v;
  if (any_angle(t.angles)) out = resample(out, rotation_matrix(t.angles));
  out = flip_axes(out, t.flips);  // flips are involutions
  return out;
}

Volume population_std(const std::vector<Volume>& samples, Volume* mean_out) {
  if (samples.empty()) throw InvalidRange("population_std needs at least one sample");
  const std::int64_t n = samples[0].data.numel();
  for (const Volume& s : samples)
    if (s.data.numel() != n) throw ShapeMismatch("uncertainty samples differ in shape");
  Volume mean = samples[0];
  mean.data.fill(0.0f);
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (const Volume& s : samples) acc += s.data[i];
    mean.data[i] = static_cast<float>(acc / static_cast<double>(samples.size()));
  }
  Volume sigma = mean;
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (const Volume& s : samples) {
      const double d = static_cast<double>(s.data[i]) - static_cast<double>(mean.data[i]);
      acc += d * d;
    }
    sigma.data[i] = static_cast<float>(std::sqrt(acc / static_cast<double>(samples.size())));
  }
  if (mean_out) *mean_out = std::move(mean);
  return sigma;
}

UncertaintyMap epistemic_map(const Generator& g, const Volume& normalized, int n, float keep,
                             std::uint64_t seed, int patch_size, int stride) {
  if (n < 1) throw InvalidRange("N must be >= 1");
  Generator const* gen = &g;
  Generator override_gen;
  if (keep != g.config().dropout_keep) {
    // rebuild with the requested keep rate but identical weights
    GeneratorConfig cfg = g.config();
    cfg.dropout_keep = keep;
    override_gen = Generator(cfg, 0);
    for (size_t i = 0; i < g.params().items().size(); ++i)
      override_gen.params().items()[i].second->value = g.params().items()[i].second->value;
    gen = &override_gen;
  }
  std::vector<Volume> samples;
  samples.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "mc-dropout", static_cast<std::uint64_t>(i)));
    samples.push_back(predict_volume(*gen, normalized, patch_size, stride, /*dropout=*/true, &rng));
  }
  UncertaintyMap map;
  map.kind = "epistemic";
  map.n_samples = n;
  map.sigma = population_std(samples, &map.mean_prediction);
  return map;
}

UncertaintyMap aleatoric_map(const Generator& g, const Volume& normalized, int n, std::uint64_t seed,
                             int patch_size, int stride, float tta_noise_sigma) {
  if (n < 1) throw InvalidRange("N must be >= 1");
  std::vector<Volume> samples;
  samples.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const TtaTransform t = TtaTransform::sample(derive_seed(seed, "tta", static_cast<std::uint64_t>(i)),
                                                tta_noise_sigma);
    Volume aug = apply_tta(normalized, t);
    // keep network inputs inside the contract range after noise
    for (std::int64_t k = 0; k < aug.data.numel(); ++k)
      aug.data[k] = std::max(-1.0f, std::min(1.0f, aug.data[k]));
    Volume pred = predict_volume(g, aug, patch_size, stride, /*dropout=*/false, nullptr);
    samples.push_back(invert_tta(pred, t));
  }
  UncertaintyMap map;
  map.kind = "aleatoric";
  map.n_samples = n;
  map.sigma = population_std(samples, &map.mean_prediction);
  return map;
}

}  // namespace mgan::uncertainty
