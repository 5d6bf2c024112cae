#ifndef MASKMEM_CHECKPOINT_H_
#define MASKMEM_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <string>

#include "maskmem/error.h"
#include "maskmem/model.h"

namespace maskmem {

class UnsupportedVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Everything needed to rebuild a model. See docs/checkpoint_format.md.
struct Checkpoint {
  ModelConfig config;
  MaskOptions mask;
  std::uint32_t candidate_count = 0;
  // Free-form run metadata (model kind, phase, vocab fingerprint, ...).
  std::map<std::string, std::string> meta;
  ModelParams params;

  const std::string& get(const std::string& key) const;  // throws CheckpointError
  bool operator==(const Checkpoint&) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
// Verifies the checksum before reading anything else, so a damaged file
// never yields a partial model.
Checkpoint deserialize_checkpoint(const std::string& bytes,
                                  const std::string& source = "<memory>");

// Writes through a temporary file and a rename.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a over the serialized parameters; cheap identity check.
std::uint64_t params_checksum(const ModelParams& params);

}  // namespace maskmem

#endif  // MASKMEM_CHECKPOINT_H_
