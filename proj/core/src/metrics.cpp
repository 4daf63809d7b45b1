#include "mgan/metrics.hpp"

#include <cmath>
#include <fstream>

#include "mgan/montage.hpp"
#include "mgan/training.hpp"
#include "mgan/uncertainty.hpp"
#include "mgan/volume_io.hpp"

namespace mgan::metrics {

namespace {

void check_shapes(const Volume& a, const Volume& b) {
  if (a.data.shape() != b.data.shape()) throw ShapeMismatch("volume shapes differ");
}

// separable Gaussian filtering with reflect-101 boundary
void gauss_filter_axis(const Tensor& in, Tensor& out, const std::vector<float>& k, int axis) {
  const int D = in.dim(0), H = in.dim(1), W = in.dim(2);
  const int r = static_cast<int>(k.size()) / 2;
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -i;
      if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
  };
  for (int z = 0; z < D; ++z)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double s = 0.0;
        for (int t = -r; t <= r; ++t) {
          int zz = z, yy = y, xx = x;
          if (axis == 0) zz = reflect(z + t, D);
          if (axis == 1) yy = reflect(y + t, H);
          if (axis == 2) xx = reflect(x + t, W);
          s += static_cast<double>(k[static_cast<size_t>(t + r)]) *
               in[(static_cast<std::int64_t>(zz) * H + yy) * W + xx];
        }
        out[(static_cast<std::int64_t>(z) * H + y) * W + x] = static_cast<float>(s);
      }
}

Tensor gauss_filter3(const Tensor& in, const std::vector<float>& k) {
  Tensor a = in, b(in.shape());
  for (int axis = 0; axis < 3; ++axis) {
    gauss_filter_axis(a, b, k, axis);
    std::swap(a, b);
  }
  return a;
}

std::vector<float> gauss_kernel(int size, float sigma) {
  std::vector<float> k(static_cast<size_t>(size));
  const int r = size / 2;
  float sum = 0.0f;
  for (int i = -r; i <= r; ++i) {
    k[static_cast<size_t>(i + r)] = std::exp(-static_cast<float>(i * i) / (2.0f * sigma * sigma));
    sum += k[static_cast<size_t>(i + r)];
  }
  for (float& v : k) v /= sum;
  return k;
}

}  // namespace

float psnr(const Volume& pred, const Volume& target, float data_range,
           const std::vector<std::uint8_t>* mask) {
  check_shapes(pred, target);
  if (data_range <= 0.0f) throw InvalidRange("data_range must be > 0");
  double mse = 0.0;
  std::int64_t n = 0;
  for (std::int64_t i = 0; i < pred.data.numel(); ++i) {
    if (mask && !(*mask)[static_cast<size_t>(i)]) continue;
    const double d = static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]);
    mse += d * d;
    ++n;
  }
  if (n == 0) throw InvalidRange("mask selects no voxels");
  mse /= static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<float>::infinity();
  return static_cast<float>(10.0 * std::log10(static_cast<double>(data_range) * data_range / mse));
}

float ssim(const Volume& pred, const Volume& target, float data_range,
           const std::vector<std::uint8_t>* mask) {
  check_shapes(pred, target);
  constexpr int kWin = 11;
  constexpr float kSigma = 1.5f;
  for (int i = 0; i < 3; ++i)
    if (pred.dim(i) < kWin) throw VolumeTooSmall("volume smaller than SSIM window");
  const auto k = gauss_kernel(kWin, kSigma);
  const Tensor& x = pred.data;
  const Tensor& y = target.data;
  Tensor xx(x.shape()), yy(x.shape()), xy(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  Tensor mu_x = gauss_filter3(x, k), mu_y = gauss_filter3(y, k);
  Tensor e_xx = gauss_filter3(xx, k), e_yy = gauss_filter3(yy, k), e_xy = gauss_filter3(xy, k);
  const float c1 = (0.01f * data_range) * (0.01f * data_range);
  const float c2 = (0.03f * data_range) * (0.03f * data_range);
  double acc = 0.0;
  std::int64_t n = 0;
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    if (mask && !(*mask)[static_cast<size_t>(i)]) continue;
    const float sx = e_xx[i] - mu_x[i] * mu_x[i];
    const float sy = e_yy[i] - mu_y[i] * mu_y[i];
    const float sxy = e_xy[i] - mu_x[i] * mu_y[i];
    const float num = (2.0f * mu_x[i] * mu_y[i] + c1) * (2.0f * sxy + c2);
    const float den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (sx + sy + c2);
    acc += static_cast<double>(num / den);
    ++n;
  }
  if (n == 0) throw InvalidRange("mask selects no voxels");
  return static_cast<float>(acc / static_cast<double>(n));
}

Volume error_map(const Volume& pred, const Volume& target) {
  check_shapes(pred, target);
  Volume out = pred;
  for (std::int64_t i = 0; i < out.data.numel(); ++i)
    out.data[i] = std::fabs(pred.data[i] - target.data[i]);
  return out;
}

namespace {
void mean_sample_std(const std::vector<float>& xs, float& mean, float& stddev) {
  double m = 0.0;
  for (float v : xs) m += v;
  m /= static_cast<double>(xs.size());
  double s2 = 0.0;
  for (float v : xs) s2 += (v - m) * (v - m);
  stddev = xs.size() > 1 ? static_cast<float>(std::sqrt(s2 / static_cast<double>(xs.size() - 1))) : 0.0f;
  mean = static_cast<float>(m);
}

std::string fmt_float(float v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", static_cast<double>(v));
  return buf;
}
}  // namespace

MetricReport evaluate_cohort(const std::filesystem::path& manifest, const std::filesystem::path& checkpoint,
                             const std::filesystem::path& out_dir, const EvaluateOptions& opts) {
  const auto pairs = training::pair_manifest(manifest);
  if (pairs.empty()) throw EmptyCohort("manifest lists no subjects");
  training::TrainState state = training::TrainState::load(checkpoint);
  const int patch_size = state.train_config.patch_size;
  std::filesystem::create_directories(out_dir);

  MetricReport report;
  for (const auto& p : pairs) {
    Volume va = normalize_intensity(read_volume(p.path_a));
    Volume vb = normalize_intensity(read_volume(p.path_b));
    auto mask = derive_foreground_mask(va);
    {
      const auto mb = derive_foreground_mask(vb);
      for (size_t i = 0; i < mask.size(); ++i) mask[i] = mask[i] || mb[i];
    }
    const std::vector<std::uint8_t>* m = opts.masked ? &mask : nullptr;

    struct Direction {
      const char* name;
      const Generator* gen;
      const Discriminator* disc;
      const Volume* src;
      const Volume* tgt;
    };
    const Direction dirs[2] = {{"a2b", &state.g_a, &state.d_b, &va, &vb},
                               {"b2a", &state.g_b, &state.d_a, &vb, &va}};
    for (const Direction& d : dirs) {
      Volume pred = predict_volume(*d.gen, *d.src, patch_size, opts.stride);
      SubjectMetrics sm;
      sm.subject = p.subject;
      sm.direction = d.name;
      sm.psnr_db = psnr(pred, *d.tgt, 2.0f, m);
      sm.ssim = ssim(pred, *d.tgt, 2.0f, m);
      report.rows.push_back(sm);

      if (opts.write_montages) {
        const std::string stem = p.subject + "_" + d.name;
        montage::write_slice_png(pred, out_dir / (stem + "_prediction.png"));
        montage::write_slice_png(error_map(pred, *d.tgt), out_dir / (stem + "_error.png"));
        Volume q = quality_map_volume(*d.disc, pred, patch_size, opts.stride);
        montage::write_slice_png(q, out_dir / (stem + "_quality.png"));
        if (opts.uncertainty_samples > 1) {
          auto um = uncertainty::epistemic_map(*d.gen, *d.src, opts.uncertainty_samples,
                                               d.gen->config().dropout_keep,
                                               derive_seed(state.train_config.seed, "eval-unc"),
                                               patch_size, opts.stride);
          montage::write_slice_png(um.sigma, out_dir / (stem + "_uncertainty.png"));
        }
      }
    }
  }

  for (const char* dir : {"a2b", "b2a"}) {
    std::vector<float> ps, ss;
    for (const auto& r : report.rows)
      if (r.direction == dir && std::isfinite(r.psnr_db)) {
        ps.push_back(r.psnr_db);
        ss.push_back(r.ssim);
      }
    if (ps.empty()) continue;
    MetricReport::Summary s;
    s.direction = dir;
    mean_sample_std(ps, s.psnr_mean, s.psnr_std);
    mean_sample_std(ss, s.ssim_mean, s.ssim_std);
    report.summaries.push_back(s);
  }

  std::ofstream per(out_dir / "per_subject.csv", std::ios::trunc);
  per << "subject,direction,psnr_db,ssim\n";
  for (const auto& r : report.rows)
    per << r.subject << "," << r.direction << "," << fmt_float(r.psnr_db) << "," << fmt_float(r.ssim)
        << "\n";

  std::ofstream sum(out_dir / "summary.csv", std::ios::trunc);
  sum << "direction,psnr_mean,psnr_sample_std,ssim_mean,ssim_sample_std\n";
  for (const auto& s : report.summaries)
    sum << s.direction << "," << fmt_float(s.psnr_mean) << "," << fmt_float(s.psnr_std) << ","
        << fmt_float(s.ssim_mean) << "," << fmt_float(s.ssim_std) << "\n";
  return report;
}

}  // namespace mgan::metrics
