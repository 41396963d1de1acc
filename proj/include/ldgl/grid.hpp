#pragma once

#include <cassert>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldgl {

using cplx = std::complex<double>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense 2-D array, x index fastest (row-major over [ny][nx]).
template <class T>
class Array2 {
 public:
  Array2() = default;
  Array2(int nx, int ny, T init = T{}) : nx_(nx), ny_(ny), data_(static_cast<std::size_t>(nx) * ny, init) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int i, int j) {
    assert(i >= 0 && i < nx_ && j >= 0 && j < ny_);
    return data_[static_cast<std::size_t>(j) * nx_ + i];
  }
  const T& operator()(int i, int j) const {
    assert(i >= 0 && i < nx_ && j >= 0 && j < ny_);
    return data_[static_cast<std::size_t>(j) * nx_ + i];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Array2& o) const { return nx_ == o.nx_ && ny_ == o.ny_; }
  bool operator==(const Array2& o) const = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  std::vector<T> data_;
};

/// Dense 3-D array, x fastest then y then z (row-major over [nz][ny][nx]).
template <class T>
class Array3 {
 public:
  Array3() = default;
  Array3(int nx, int ny, int nz, T init = T{})
      : nx_(nx), ny_(ny), nz_(nz), data_(static_cast<std::size_t>(nx) * ny * nz, init) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int i, int j, int k) const {
    assert(i >= 0 && i < nx_ && j >= 0 && j < ny_ && k >= 0 && k < nz_);
    return (static_cast<std::size_t>(k) * ny_ + j) * nx_ + i;
  }
  T& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  const T& operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Array3& o) const { return nx_ == o.nx_ && ny_ == o.ny_ && nz_ == o.nz_; }
  bool operator==(const Array3& o) const = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  int nz_ = 0;
  std::vector<T> data_;
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError("shape mismatch: " + what);
}

/// Neumaier-compensated sum in extended precision. Energies are accumulated
/// through this so that central differences of the energy are not swamped by
/// summation roundoff.
class Accumulator {
 public:
  void add(double v) {
    const long double x = v;
    const long double t = sum_ + x;
    if ((sum_ >= 0 ? sum_ : -sum_) >= (x >= 0 ? x : -x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  Accumulator& operator+=(double v) {
    add(v);
    return *this;
  }
  double value() const { return static_cast<double>(sum_ + comp_); }
  long double precise() const { return sum_ + comp_; }

 private:
  long double sum_ = 0.0L;
  long double comp_ = 0.0L;
};

}  // namespace ldgl
