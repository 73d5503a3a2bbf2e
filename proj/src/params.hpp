// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "random.hpp"

namespace tsc::nn {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}
  Matrix(int r, int c, std::vector<double> values);

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return data.size(); }
  void reshape(int r, int c);  // resizes storage, contents unspecified
  void fill(double v);

  static Matrix column(const std::vector<double>& values);
  static Matrix row(const std::vector<double>& values);
  bool operator==(const Matrix&) const = default;
};

enum class ParamKind : std::uint8_t { Weight = 0, Bias = 1 };

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

// Named differentiable parameters with their gradients and Adam moments.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    ParamKind kind = ParamKind::Weight;
    Matrix value;
    Matrix grad;
    Matrix m;
    Matrix v;
    std::uint64_t step = 0;
    bool grad_ready = false;

    bool operator==(const Entry&) const = default;
  };

  int add(std::string name, int rows, int cols, ParamKind kind = ParamKind::Weight);
  int index(std::string_view name) const;
  bool contains(std::string_view name) const;

  Entry& operator[](int i) { return entries_[static_cast<std::size_t>(i)]; }
  const Entry& operator[](int i) const { return entries_[static_cast<std::size_t>(i)]; }
  Entry& at(std::string_view name) { return entries_[static_cast<std::size_t>(index(name))]; }
  const Entry& at(std::string_view name) const { return entries_[static_cast<std::size_t>(index(name))]; }
  int size() const { return static_cast<int>(entries_.size()); }

  // Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) with fan_in = rows; biases zero.
  void initialize(Rng& rng);
  void zero_grad();
  double grad_norm() const;
  void clip_grad_norm(double max_norm);
  // Copies values only (target network sync).
  void copy_values_from(const ParamStore& other);
  bool values_equal(const ParamStore& other) const;

  bool operator==(const ParamStore&) const = default;

 private:
  std::vector<Entry> entries_;
};

// Bias-corrected Adam over every parameter with a ready gradient.
// Throws MissingGradient when no gradient is populated.
void adam_step(ParamStore& store, const AdamConfig& config);

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParamStore& store, std::ostream& out, bool with_adam_state = true);
ParamStore load_checkpoint(std::istream& in);
void save_checkpoint_file(const ParamStore& store, const std::string& path, bool with_adam_state = true);
ParamStore load_checkpoint_file(const std::string& path);

}  // namespace tsc::nn
