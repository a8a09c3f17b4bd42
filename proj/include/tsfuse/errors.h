#ifndef TSFUSE_ERRORS_H_
#define TSFUSE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace tsfuse {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (ragged rows, unparseable tokens).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Input that parses but violates a data invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid operation parameters (window longer than series, ...).
class ParamError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Shape mismatches between a model and the features fed to it.
class ModelError : public Error {
 public:
  using Error::Error;
};

class RunError : public Error {
 public:
  using Error::Error;
};

// A non-finite loss was produced during training.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int epoch, int batch)
      : Error("training diverged at epoch " + std::to_string(epoch) +
              ", batch " + std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}

  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

}  // namespace tsfuse

#endif  // TSFUSE_ERRORS_H_
