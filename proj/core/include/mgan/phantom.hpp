#pragma once

#include <cstdint>
#include <filesystem>
#include <tuple>
#include <vector>

#include "mgan/volume.hpp"

namespace mgan::phantom {

// Paired longitudinal phantom: a smooth ellipsoidal "brain" with two tissue
// classes whose intensities and boundaries change between two pseudo-ages.
struct PhantomSpec {
  std::array<int, 3> size = {64, 64, 64};
  int n_blobs = 6;
  float age_a = 0.1f, age_b = 0.9f;     // pseudo-age in [0,1] per time point
  bool contrast_flip = true;             // swap class intensities at t_b
  float deform_amplitude = 2.0f;         // voxels, scaled by |age_b - age_a|
  float noise_sigma = 0.02f;             // foreground Gaussian noise
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidSpec
};

struct PhantomPair {
  Volume i_ta, i_tb;
  Volume mask;        // 1 inside foreground, 0 outside
  Tensor labels_a;    // 0 background, 1/2 tissue classes at t_a
  Tensor labels_b;    // same at t_b (after boundary deformation)
};

// Deterministic: the same spec yields bitwise-identical output.
PhantomPair generate_phantom_pair_full(const PhantomSpec& spec);
std::tuple<Volume, Volume, Volume> generate_phantom_pair(const PhantomSpec& spec);

struct CohortEntry {
  std::string subject;
  PhantomSpec spec;
};

// Writes <subject>_ta / <subject>_tb volumes plus manifest.csv with header
// `subject,timepoint,path` (2 rows per subject, paths relative to out_dir).
// Returns the manifest path. Throws DuplicateSubject on repeated ids.
std::filesystem::path generate_cohort(const std::vector<CohortEntry>& entries,
                                      const std::filesystem::path& out_dir,
                                      const std::string& extension = ".nii");

}  // namespace mgan::phantom
