#pragma once

#include <array>
#include <initializer_list>
#include <span>
#include <vector>

namespace trackcert {

// Dense symmetric matrix of dimension 1..6. Writes go to both triangles.
class SymMat {
 public:
  static constexpr int kMaxDim = 6;

  explicit SymMat(int dim);
  // Rows are symmetrized: entry (i,j) becomes the mean of the given (i,j) and (j,i).
  SymMat(std::initializer_list<std::initializer_list<double>> rows);

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return a_[i * kMaxDim + j]; }
  void set(int i, int j, double v) {
    a_[i * kMaxDim + j] = v;
    a_[j * kMaxDim + i] = v;
  }
  void add(int i, int j, double v) {
    a_[i * kMaxDim + j] += v;
    if (i != j) a_[j * kMaxDim + i] += v;
  }

  double frobenius() const;
  bool all_finite() const;
  // Principal submatrix on the given (sorted) indices.
  SymMat principal(std::span<const int> idx) const;

 private:
  int dim_;
  std::array<double, kMaxDim * kMaxDim> a_{};
};

struct EigenDecomposition {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

// Cyclic Jacobi rotations until the off-diagonal norm is <= 1e-14 ||M||_F.
EigenDecomposition eigen_sym(const SymMat& m);
std::vector<double> eigvals(const SymMat& m);
double max_eig(const SymMat& m);

// Absolute NSD threshold for a given data magnitude: 1e-9 * max(1, scale).
double nsd_tolerance(double scale);
bool is_nsd(const SymMat& m, double scale);
// Convenience: scale taken as the Frobenius norm of m.
bool is_nsd(const SymMat& m);

struct SchurResult {
  SymMat reduced;
  bool pivot_negative_definite;
};

// For M = [[A, B], [B^T, D]] with D indexed by `block`, returns A - B D^{-1} B^T.
SchurResult schur_reduce(const SymMat& m, std::span<const int> block);

}  // namespace trackcert
