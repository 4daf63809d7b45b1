#pragma once

#include <stdexcept>
#include <string>

namespace mgan {

// Base class for all library errors so callers can catch one type at the CLI
// boundary and map it to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MGAN_DEFINE_ERROR(NAME)                   \
  class NAME : public Error {                     \
   public:                                        \
    explicit NAME(const std::string& msg)         \
        : Error(std::string(#NAME ": ") + msg) {} \
  }

// volume_io
MGAN_DEFINE_ERROR(MalformedHeader);
MGAN_DEFINE_ERROR(PayloadSizeMismatch);
MGAN_DEFINE_ERROR(UnsupportedDtype);
MGAN_DEFINE_ERROR(IoFailure);
MGAN_DEFINE_ERROR(ConstantVolume);

// phantom
MGAN_DEFINE_ERROR(InvalidSpec);
MGAN_DEFINE_ERROR(DuplicateSubject);

// patch_pipeline
MGAN_DEFINE_ERROR(PatchTooLarge);
MGAN_DEFINE_ERROR(GridMismatch);

// wavelet
MGAN_DEFINE_ERROR(OddDimension);
MGAN_DEFINE_ERROR(BandShapeMismatch);

// networks / losses
MGAN_DEFINE_ERROR(ShapeMismatch);
MGAN_DEFINE_ERROR(InvalidRange);

// training
MGAN_DEFINE_ERROR(NonFiniteLoss);
MGAN_DEFINE_ERROR(ManifestMismatch);

// uncertainty / evaluation
MGAN_DEFINE_ERROR(CheckpointMismatch);
MGAN_DEFINE_ERROR(EmptyCohort);
MGAN_DEFINE_ERROR(VolumeTooSmall);

// cli
MGAN_DEFINE_ERROR(UsageError);

#undef MGAN_DEFINE_ERROR

}  // namespace mgan
