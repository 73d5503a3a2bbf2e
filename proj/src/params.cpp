// SPDX-License-Identifier: Apache-2.0
#include "params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "error.hpp"

namespace tsc::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

Matrix::Matrix(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != static_cast<std::size_t>(r) * c) throw Error(ErrorCode::ShapeMismatch, "matrix value count");
}

void Matrix::reshape(int r, int c) {
  rows = r;
  cols = c;
  data.resize(static_cast<std::size_t>(r) * c);
}

void Matrix::fill(double v) { std::fill(data.begin(), data.end(), v); }

Matrix Matrix::column(const std::vector<double>& values) {
  return Matrix(static_cast<int>(values.size()), 1, values);
}

Matrix Matrix::row(const std::vector<double>& values) { return Matrix(1, static_cast<int>(values.size()), values); }

int ParamStore::add(std::string name, int rows, int cols, ParamKind kind) {
  if (contains(name)) throw Error(ErrorCode::InvalidConfig, "duplicate parameter '" + name + "'");
  if (rows < 1 || cols < 1) throw Error(ErrorCode::ShapeMismatch, "parameter '" + name + "' needs a positive shape");
  Entry e;
  e.name = std::move(name);
  e.kind = kind;
  e.value = Matrix(rows, cols);
  e.grad = Matrix(rows, cols);
  e.m = Matrix(rows, cols);
  e.v = Matrix(rows, cols);
  entries_.push_back(std::move(e));
  return static_cast<int>(entries_.size()) - 1;
}

int ParamStore::index(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return static_cast<int>(i);
  throw Error(ErrorCode::UnknownEntity, "parameter '" + std::string(name) + "'");
}

bool ParamStore::contains(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

void ParamStore::initialize(Rng& rng) {
  for (auto& e : entries_) {
    if (e.kind == ParamKind::Bias) {
      e.value.fill(0.0);
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(e.value.rows));
    for (double& x : e.value.data) x = rng.uniform(-bound, bound);
  }
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) {
    e.grad.fill(0.0);
    e.grad_ready = false;
  }
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& e : entries_)
    if (e.grad_ready)
      for (double g : e.grad.data) sq += g * g;
  return std::sqrt(sq);
}

void ParamStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (!(norm > max_norm)) return;
  const double k = max_norm / norm;
  for (auto& e : entries_)
    if (e.grad_ready)
      for (double& g : e.grad.data) g *= k;
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.entries_.size() != entries_.size()) throw Error(ErrorCode::ShapeMismatch, "parameter store layout");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].value.rows != other.entries_[i].value.rows || entries_[i].value.cols != other.entries_[i].value.cols)
      throw Error(ErrorCode::ShapeMismatch, "parameter '" + entries_[i].name + "'");
    entries_[i].value.data = other.entries_[i].value.data;
  }
}

bool ParamStore::values_equal(const ParamStore& other) const {
  if (other.entries_.size() != entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name != other.entries_[i].name || !(entries_[i].value == other.entries_[i].value)) return false;
  return true;
}

void adam_step(ParamStore& store, const AdamConfig& c) {
  bool any = false;
  for (int i = 0; i < store.size(); ++i) {
    auto& e = store[i];
    if (!e.grad_ready) continue;
    any = true;
    e.step += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(e.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(e.step));
    for (std::size_t k = 0; k < e.value.size(); ++k) {
      const double g = e.grad.data[k];
      e.m.data[k] = c.beta1 * e.m.data[k] + (1.0 - c.beta1) * g;
      e.v.data[k] = c.beta2 * e.v.data[k] + (1.0 - c.beta2) * g * g;
      const double mhat = e.m.data[k] / bc1;
      const double vhat = e.v.data[k] / bc2;
      e.value.data[k] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
  if (!any) throw Error(ErrorCode::MissingGradient, "no parameter has a populated gradient");
}

// ---- checkpoint ----

namespace {

constexpr char kMagic[8] = {'T', 'S', 'C', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::Io, "truncated checkpoint");
  return v;
}

void put_values(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void get_values(std::istream& in, Matrix& m) {
  in.read(reinterpret_cast<char*>(m.data.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::Io, "truncated checkpoint");
}

}  // namespace

void save_checkpoint(const ParamStore& store, std::ostream& out, bool with_adam_state) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (int i = 0; i < store.size(); ++i) {
    const auto& e = store[i];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.value.rows));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.value.cols));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.kind));
    put_values(out, e.value);
  }
  put<std::uint8_t>(out, with_adam_state ? 1 : 0);
  if (with_adam_state) {
    for (int i = 0; i < store.size(); ++i) {
      const auto& e = store[i];
      put<std::uint64_t>(out, e.step);
      put_values(out, e.m);
      put_values(out, e.v);
    }
  }
  if (!out) throw Error(ErrorCode::Io, "checkpoint write failed");
}

ParamStore load_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error(ErrorCode::Io, "not a checkpoint file");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::CheckpointVersionMismatch,
                "checkpoint version " + std::to_string(version) + ", expected " + std::to_string(kCheckpointVersion));
  const auto count = get<std::uint32_t>(in);
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(in);
    if (len > 4096) throw Error(ErrorCode::Io, "corrupt parameter name");
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = get<std::uint32_t>(in);
    const auto cols = get<std::uint32_t>(in);
    const auto kind = get<std::uint8_t>(in);
    if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20) || kind > 1)
      throw Error(ErrorCode::Io, "corrupt parameter header");
    const int idx = store.add(std::move(name), static_cast<int>(rows), static_cast<int>(cols), static_cast<ParamKind>(kind));
    get_values(in, store[idx].value);
  }
  const auto has_adam = get<std::uint8_t>(in);
  if (has_adam == 1) {
    for (int i = 0; i < store.size(); ++i) {
      store[i].step = get<std::uint64_t>(in);
      get_values(in, store[i].m);
      get_values(in, store[i].v);
    }
  } else if (has_adam != 0) {
    throw Error(ErrorCode::Io, "corrupt optimizer section flag");
  }
  return store;
}

void save_checkpoint_file(const ParamStore& store, const std::string& path, bool with_adam_state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  save_checkpoint(store, out, with_adam_state);
}

ParamStore load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace tsc::nn
