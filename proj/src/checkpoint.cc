#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "tsfuse/errors.h"
#include "tsfuse/fusion_model.h"

namespace tsfuse::fusion {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'F', 'U', 'S', 'E', 'M', '1'};
constexpr uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <typename T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  template <typename T>
  T get() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw FormatError("truncated checkpoint");
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_checkpoint(const GatedFusionModel& model,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  Writer w(out);
  const auto& cfg = model.config();
  w.bytes(kMagic, sizeof(kMagic));
  w.put<uint32_t>(kVersion);
  w.put<uint32_t>(static_cast<uint32_t>(cfg.branches.size()));
  for (Branch b : cfg.branches) w.put<uint8_t>(static_cast<uint8_t>(b));
  w.put<int32_t>(cfg.embed_dim);
  w.put<int32_t>(cfg.hidden_dim);
  w.put<double>(cfg.dropout);
  w.put<double>(cfg.learning_rate);
  w.put<int32_t>(cfg.batch_size);
  w.put<int32_t>(cfg.max_epochs);
  w.put<int32_t>(cfg.patience);
  w.put<uint64_t>(cfg.seed);
  w.put<int32_t>(model.num_classes());
  for (int dim : model.input_dims()) w.put<int32_t>(dim);
  const auto tensors = model.tensors();
  w.put<uint32_t>(static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.put<uint32_t>(static_cast<uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.put<uint32_t>(static_cast<uint32_t>(t->rows()));
    w.put<uint32_t>(static_cast<uint32_t>(t->cols()));
    for (Eigen::Index r = 0; r < t->rows(); ++r) {
      for (Eigen::Index c = 0; c < t->cols(); ++c) w.put<double>((*t)(r, c));
    }
  }
  for (uint64_t s : model.rng().state()) w.put<uint64_t>(s);
  if (!out) throw FormatError("failed writing " + path.string());
}

GatedFusionModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  Reader r(in);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + ": not a tsfuse checkpoint");
  }
  const auto version = r.get<uint32_t>();
  if (version != kVersion) {
    throw FormatError(fmt::format("{}: unsupported checkpoint version {}",
                                  path.string(), version));
  }
  FusionConfig cfg;
  const auto branches = r.get<uint32_t>();
  if (branches < 1 || branches > 3) throw FormatError("bad branch count");
  cfg.branches.clear();
  for (uint32_t b = 0; b < branches; ++b) {
    const auto id = r.get<uint8_t>();
    if (id > 2) throw FormatError("bad branch id");
    cfg.branches.push_back(static_cast<Branch>(id));
  }
  cfg.embed_dim = r.get<int32_t>();
  cfg.hidden_dim = r.get<int32_t>();
  cfg.dropout = r.get<double>();
  cfg.learning_rate = r.get<double>();
  cfg.batch_size = r.get<int32_t>();
  cfg.max_epochs = r.get<int32_t>();
  cfg.patience = r.get<int32_t>();
  cfg.seed = r.get<uint64_t>();
  const int num_classes = r.get<int32_t>();
  std::vector<int> dims;
  for (uint32_t b = 0; b < branches; ++b) dims.push_back(r.get<int32_t>());
  GatedFusionModel model(cfg, dims, num_classes);
  auto tensors = model.tensors();
  const auto count = r.get<uint32_t>();
  if (count != tensors.size()) throw FormatError("tensor count mismatch");
  for (auto& [name, t] : tensors) {
    std::string stored(r.get<uint32_t>(), '\0');
    r.bytes(stored.data(), stored.size());
    const auto rows = r.get<uint32_t>();
    const auto cols = r.get<uint32_t>();
    if (stored != name || rows != t->rows() || cols != t->cols()) {
      throw FormatError(fmt::format("tensor '{}' does not match '{}'", stored,
                                    name));
    }
    for (Eigen::Index i = 0; i < t->rows(); ++i) {
      for (Eigen::Index j = 0; j < t->cols(); ++j) (*t)(i, j) = r.get<double>();
    }
  }
  Rng::State state;
  for (auto& s : state) s = r.get<uint64_t>();
  model.rng().set_state(state);
  return model;
}

}  // namespace tsfuse::fusion
