// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mtlab/tensor.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

namespace mtest {

// Scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mtlab_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path_.string() : (path_ / rel).string();
  }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

using mtlab::Mat;
using mtlab::Rng;
using mtlab::Tape;
using mtlab::Var;

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline Mat random_mat(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                      double lo = -1.0, double hi = 1.0) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// Central finite differences of a scalar-valued rebuild against the analytic
// gradients from one reverse sweep. `build` must compose a 1x1 output from
// the given leaves; it is re-run with perturbed inputs for every entry.
inline double grad_check(
    const std::function<Var(Tape&, const std::vector<Var>&)>& build,
    std::vector<Mat> inputs, double h = 1e-4) {
  const auto eval = [&](const std::vector<Mat>& ins) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(ins.size());
    for (const Mat& m : ins) vars.push_back(tape.leaf(m));
    return tape.value(build(tape, vars))(0, 0);
  };

  Tape tape;
  std::vector<Var> vars;
  for (const Mat& m : inputs) vars.push_back(tape.leaf(m));
  tape.backward(build(tape, vars));

  double worst = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    const Mat analytic = tape.grad(vars[k]);
    for (Eigen::Index i = 0; i < inputs[k].rows(); ++i) {
      for (Eigen::Index j = 0; j < inputs[k].cols(); ++j) {
        const double keep = inputs[k](i, j);
        inputs[k](i, j) = keep + h;
        const double fp = eval(inputs);
        inputs[k](i, j) = keep - h;
        const double fm = eval(inputs);
        inputs[k](i, j) = keep;
        const double fd = (fp - fm) / (2.0 * h);
        worst = std::max(worst, rel_err(analytic(i, j), fd));
      }
    }
  }
  return worst;
}

}  // namespace mtest
