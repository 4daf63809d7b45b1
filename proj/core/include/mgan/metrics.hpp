#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mgan/volume.hpp"

namespace mgan::metrics {

// 10*log10(data_range^2 / MSE); +inf sentinel when MSE == 0.
// Evaluated within `mask` when provided.
float psnr(const Volume& pred, const Volume& target, float data_range = 2.0f,
           const std::vector<std::uint8_t>* mask = nullptr);

// Mean local SSIM, 3D Gaussian window (size 11, sigma 1.5), K1=0.01, K2=0.03.
float ssim(const Volume& pred, const Volume& target, float data_range = 2.0f,
           const std::vector<std::uint8_t>* mask = nullptr);

// Voxelwise |pred - target|.
Volume error_map(const Volume& pred, const Volume& target);

struct SubjectMetrics {
  std::string subject;
  std::string direction;  // "a2b" | "b2a"
  float psnr_db = 0.0f;
  float ssim = 0.0f;
};

struct MetricReport {
  std::vector<SubjectMetrics> rows;
  // cohort mean and sample (N-1) std keyed by direction
  struct Summary {
    std::string direction;
    float psnr_mean, psnr_std, ssim_mean, ssim_std;
  };
  std::vector<Summary> summaries;
};

struct EvaluateOptions {
  int stride = 32;
  bool masked = true;             // evaluate within the derived foreground mask
  int uncertainty_samples = 4;    // montage epistemic map sample count
  bool write_montages = true;
};

// Full-volume prediction in both directions for every manifest pair, per
// subject metrics CSV, mean+-std summary CSV and mid-axial-slice PNG montages
// (prediction / error / quality / uncertainty).
MetricReport evaluate_cohort(const std::filesystem::path& manifest, const std::filesystem::path& checkpoint,
                             const std::filesystem::path& out_dir, const EvaluateOptions& opts = {});

}  // namespace mgan::metrics
