#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "evlat/errors.hpp"

namespace evlat {

/// Dense row-major matrix; scalars are 1x1, vectors n x 1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }
  static Tensor vector(std::initializer_list<double> vals) {
    Tensor t(static_cast<int>(vals.size()), 1);
    int i = 0;
    for (double v : vals) t.data[i++] = v;
    return t;
  }
  static Tensor vector(const std::vector<double>& vals) {
    Tensor t(static_cast<int>(vals.size()), 1);
    t.data = vals;
    return t;
  }

  int size() const { return rows * cols; }
  bool is_scalar() const { return rows == 1 && cols == 1; }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  double& operator[](int i) { return data[i]; }
  double operator[](int i) const { return data[i]; }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  void require_shape(int r, int c, const char* what) const {
    if (rows != r || cols != c)
      throw Error(ErrorKind::ShapeError, std::string(what) + ": expected " + std::to_string(r) +
                                             "x" + std::to_string(c) + ", got " +
                                             std::to_string(rows) + "x" + std::to_string(cols));
  }
};

}  // namespace evlat
