#ifndef TSFUSE_HARNESS_STORE_H_
#define TSFUSE_HARNESS_STORE_H_

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "tsfuse/harness/experiment.h"

namespace tsfuse::harness {

// FNV-1a of a file's bytes as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

// Per-cell result files plus a JSON manifest of their checksums. Cells whose
// file is missing or fails its checksum are reported absent, so they are
// recomputed.
class ResultStore {
 public:
  ResultStore(std::filesystem::path root, bool resume);

  std::optional<CellResult> load(const std::string& dataset,
                                 std::string_view family,
                                 const std::string& config_key, int fold);
  void save(const std::string& dataset, std::string_view family,
            const CellResult& cell);

  int tampered() const { return tampered_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::string cell_id(const std::string& dataset, std::string_view family,
                      const std::string& config_key, int fold) const;
  void write_manifest_locked();

  std::filesystem::path root_;
  bool resume_;
  std::mutex mu_;
  std::map<std::string, std::string> checksums_;
  int tampered_ = 0;
};

}  // namespace tsfuse::harness

#endif  // TSFUSE_HARNESS_STORE_H_
