#include "tsfuse/harness/store.h"

#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tsfuse/errors.h"
#include "tsfuse/rng.h"

namespace tsfuse::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_atomic(const fs::path& p, const std::string& bytes) {
  fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << bytes;
  }
  fs::rename(tmp, p);
}

std::string hex(uint64_t v) { return fmt::format("{:016x}", v); }

}  // namespace

std::string file_checksum(const fs::path& path) {
  return hex(fnv1a64(read_file(path)));
}

ResultStore::ResultStore(fs::path root, bool resume)
    : root_(std::move(root)), resume_(resume) {
  const fs::path manifest = root_ / "manifest.json";
  if (!resume_ || !fs::exists(manifest)) return;
  try {
    const json j = json::parse(read_file(manifest));
    for (const auto& [id, entry] : j.at("cells").items()) {
      checksums_[id] = entry.at("checksum").get<std::string>();
    }
  } catch (const json::exception& e) {
    spdlog::warn("unreadable manifest {} ({}); recomputing everything",
                 manifest.string(), e.what());
    checksums_.clear();
  }
}

std::string ResultStore::cell_id(const std::string& dataset,
                                 std::string_view family,
                                 const std::string& config_key,
                                 int fold) const {
  return fmt::format("{}/{}/{}__fold{}", dataset, family, config_key, fold);
}

std::optional<CellResult> ResultStore::load(const std::string& dataset,
                                            std::string_view family,
                                            const std::string& config_key,
                                            int fold) {
  if (!resume_) return std::nullopt;
  const std::string id = cell_id(dataset, family, config_key, fold);
  std::string expected;
  {
    std::lock_guard lock(mu_);
    const auto it = checksums_.find(id);
    if (it == checksums_.end()) return std::nullopt;
    expected = it->second;
  }
  const fs::path p = root_ / "cells" / (id + ".json");
  if (!fs::exists(p)) return std::nullopt;
  const std::string bytes = read_file(p);
  if (hex(fnv1a64(bytes)) != expected) {
    spdlog::warn("checksum mismatch for {}; recomputing", id);
    std::lock_guard lock(mu_);
    ++tampered_;
    return std::nullopt;
  }
  try {
    const json j = json::parse(bytes);
    CellResult c;
    c.config_key = j.at("config").get<std::string>();
    c.fold = j.at("fold").get<int>();
    c.failed = j.at("failed").get<bool>();
    c.failure = j.at("failure").get<std::string>();
    c.val_accuracy = j.at("val_accuracy").get<double>();
    c.test_accuracy = j.at("test_accuracy").get<double>();
    c.selected_epoch = j.at("selected_epoch").get<int>();
    c.test_rows = j.at("test_rows").get<std::vector<int>>();
    c.predictions = j.at("predictions").get<std::vector<int>>();
    c.gates = j.at("gates").get<std::vector<std::vector<double>>>();
    if (c.config_key != config_key || c.fold != fold) return std::nullopt;
    return c;
  } catch (const json::exception& e) {
    spdlog::warn("unreadable cell {} ({}); recomputing", id, e.what());
    return std::nullopt;
  }
}

void ResultStore::save(const std::string& dataset, std::string_view family,
                       const CellResult& c) {
  json j;
  j["config"] = c.config_key;
  j["fold"] = c.fold;
  j["failed"] = c.failed;
  j["failure"] = c.failure;
  j["val_accuracy"] = c.val_accuracy;
  j["test_accuracy"] = c.test_accuracy;
  j["selected_epoch"] = c.selected_epoch;
  j["test_rows"] = c.test_rows;
  j["predictions"] = c.predictions;
  j["gates"] = c.gates;
  const std::string bytes = j.dump() + "\n";
  const std::string id = cell_id(dataset, family, c.config_key, c.fold);
  write_atomic(root_ / "cells" / (id + ".json"), bytes);
  std::lock_guard lock(mu_);
  checksums_[id] = hex(fnv1a64(bytes));
  write_manifest_locked();
}

void ResultStore::write_manifest_locked() {
  json j;
  j["version"] = 1;
  j["cells"] = json::object();
  for (const auto& [id, sum] : checksums_) j["cells"][id] = {{"checksum", sum}};
  write_atomic(root_ / "manifest.json", j.dump(1) + "\n");
}

}  // namespace tsfuse::harness
