#include "trackcert/smallmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trackcert/error.hpp"

namespace trackcert {

SymMat::SymMat(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw Error(ErrorCode::BadConfig, "SymMat dimension must be in [1,6]");
}

SymMat::SymMat(std::initializer_list<std::initializer_list<double>> rows) : SymMat(static_cast<int>(rows.size())) {
  std::array<double, kMaxDim * kMaxDim> raw{};
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != dim_) throw Error(ErrorCode::BadConfig, "SymMat rows must be square");
    int j = 0;
    for (double v : row) raw[i * kMaxDim + j++] = v;
    ++i;
  }
  for (int r = 0; r < dim_; ++r) {
    for (int c = r; c < dim_; ++c) set(r, c, 0.5 * (raw[r * kMaxDim + c] + raw[c * kMaxDim + r]));
  }
}

double SymMat::frobenius() const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * (*this)(i, j);
  }
  return std::sqrt(s);
}

bool SymMat::all_finite() const {
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      if (!std::isfinite((*this)(i, j))) return false;
    }
  }
  return true;
}

SymMat SymMat::principal(std::span<const int> idx) const {
  SymMat out(static_cast<int>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t c = r; c < idx.size(); ++c) out.set(int(r), int(c), (*this)(idx[r], idx[c]));
  }
  return out;
}

EigenDecomposition eigen_sym(const SymMat& m) {
  if (!m.all_finite()) throw Error(ErrorCode::NonFinite, "matrix has non-finite entries");
  const int n = m.dim();
  constexpr int N = SymMat::kMaxDim;
  std::array<double, N * N> a{};
  std::array<double, N * N> v{};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i * N + j] = m(i, j);
    v[i * N + i] = 1.0;
  }
  const double target = 1e-14 * m.frobenius();
  auto off_norm = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) s += a[i * N + j] * a[i * N + j];
      }
    }
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && off_norm() > target; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[p * N + q];
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p,q) (Rutishauser's formulation).
        const double theta = (a[q * N + q] - a[p * N + p]) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k * N + p];
          const double akq = a[k * N + q];
          a[k * N + p] = c * akp - s * akq;
          a[k * N + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p * N + k];
          const double aqk = a[q * N + k];
          a[p * N + k] = c * apk - s * aqk;
          a[q * N + k] = s * apk + c * aqk;
        }
        a[p * N + q] = 0.0;
        a[q * N + p] = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v[k * N + p];
          const double vkq = v[k * N + q];
          v[k * N + p] = c * vkp - s * vkq;
          v[k * N + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a[x * N + x] < a[y * N + y]; });
  EigenDecomposition out;
  out.values.reserve(n);
  out.vectors.reserve(n);
  for (int k : order) {
    out.values.push_back(a[k * N + k]);
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = v[i * N + k];
    out.vectors.push_back(std::move(col));
  }
  return out;
}

std::vector<double> eigvals(const SymMat& m) { return eigen_sym(m).values; }

double max_eig(const SymMat& m) { return eigen_sym(m).values.back(); }

double nsd_tolerance(double scale) { return 1e-9 * std::max(1.0, scale); }

bool is_nsd(const SymMat& m, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::BadConfig, "NSD scale must be positive");
  return max_eig(m) <= nsd_tolerance(scale);
}

bool is_nsd(const SymMat& m) { return is_nsd(m, std::max(m.frobenius(), 1.0)); }

SchurResult schur_reduce(const SymMat& m, std::span<const int> block) {
  const int n = m.dim();
  std::vector<int> keep;
  std::vector<bool> in_block(n, false);
  for (int b : block) {
    if (b < 0 || b >= n) throw Error(ErrorCode::BadConfig, "pivot index out of range");
    in_block[b] = true;
  }
  for (int i = 0; i < n; ++i) {
    if (!in_block[i]) keep.push_back(i);
  }
  if (keep.empty() || block.empty()) throw Error(ErrorCode::BadConfig, "both partitions must be non-empty");

  const SymMat d = m.principal(block);
  const int k = d.dim();
  const auto eig = eigen_sym(d);
  double det = 1.0;
  for (double l : eig.values) det *= l;
  const double dnorm = std::max(1.0, d.frobenius());
  if (std::abs(det) <= 1e-14 * std::pow(dnorm, k)) throw Error(ErrorCode::SingularPivot, "pivot block is singular");

  // D^{-1} from the eigendecomposition.
  std::vector<double> dinv(k * k, 0.0);
  for (int e = 0; e < k; ++e) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) dinv[i * k + j] += eig.vectors[e][i] * eig.vectors[e][j] / eig.values[e];
    }
  }
  SymMat out(static_cast<int>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    for (std::size_t c = r; c < keep.size(); ++c) {
      double s = m(keep[r], keep[c]);
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) s -= m(keep[r], block[i]) * dinv[i * k + j] * m(block[j], keep[c]);
      }
      out.set(int(r), int(c), s);
    }
  }
  return {out, eig.values.back() < 0.0};
}

}  // namespace trackcert
