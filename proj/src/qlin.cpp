#include "mdiew/qlin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "mdiew/errors.hpp"

namespace mdiew {

HermitianMatrix::HermitianMatrix(const CMatrix& m) {
  if (m.rows() != m.cols()) {
    throw StructuralError("HermitianMatrix: matrix is not square");
  }
  const double scale = std::max(1.0, m.norm());
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (m.size() > 0 && asym > kHermitianTol * scale) {
    throw StructuralError("HermitianMatrix: input is not Hermitian (deviation " +
                          std::to_string(asym) + ")");
  }
  m_ = 0.5 * (m + m.adjoint());
}

HermitianMatrix HermitianMatrix::identity(Eigen::Index dim) {
  return HermitianMatrix(CMatrix::Identity(dim, dim));
}

HermitianMatrix HermitianMatrix::zero(Eigen::Index dim) {
  return HermitianMatrix(CMatrix::Zero(dim, dim));
}

HermitianMatrix HermitianMatrix::diagonal(std::initializer_list<double> entries) {
  const auto n = static_cast<Eigen::Index>(entries.size());
  CMatrix m = CMatrix::Zero(n, n);
  Eigen::Index i = 0;
  for (double e : entries) {
    m(i, i) = e;
    ++i;
  }
  return HermitianMatrix(m);
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& o) const {
  if (dim() != o.dim()) throw StructuralError("HermitianMatrix: dimension mismatch in +");
  return HermitianMatrix(CMatrix(m_ + o.m_));
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& o) const {
  if (dim() != o.dim()) throw StructuralError("HermitianMatrix: dimension mismatch in -");
  return HermitianMatrix(CMatrix(m_ - o.m_));
}

HermitianMatrix HermitianMatrix::operator*(double s) const {
  return HermitianMatrix(CMatrix(m_ * s));
}

double trace_product(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.dim() != b.dim()) throw StructuralError("trace_product: dimension mismatch");
  // tr(ab) = sum_ij a_ij b_ji = sum_ij a_ij conj(b_ij)
  return (a.matrix().array() * b.matrix().conjugate().array()).sum().real();
}

PureKet::PureKet(CVector amplitudes) : v_(std::move(amplitudes)) {
  if (std::abs(v_.squaredNorm() - 1.0) > 1e-12) {
    throw DomainError("PureKet: amplitudes are not unit norm");
  }
}

HermitianMatrix PureKet::projector() const {
  return HermitianMatrix(CMatrix(v_ * v_.adjoint()));
}

DensityOperator::DensityOperator(HermitianMatrix m) : m_(std::move(m)) {
  if (std::abs(m_.trace() - 1.0) > 1e-10) {
    throw DomainError("DensityOperator: trace is not 1");
  }
  if (min_eigenvalue(m_) < -1e-10) {
    throw DomainError("DensityOperator: matrix is not positive semidefinite");
  }
}

DensityOperator DensityOperator::from_ket(const PureKet& ket) {
  return DensityOperator(ket.projector());
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

HermitianMatrix tensor(const HermitianMatrix& a, const HermitianMatrix& b) {
  return HermitianMatrix(kron(a.matrix(), b.matrix()));
}

HermitianMatrix partial_transpose(const HermitianMatrix& m, std::pair<int, int> dims,
                                  Subsystem side) {
  const auto [da, db] = dims;
  if (da <= 0 || db <= 0 || m.dim() != static_cast<Eigen::Index>(da) * db) {
    throw StructuralError("partial_transpose: matrix dimension does not match dA*dB");
  }
  const CMatrix& src = m.matrix();
  CMatrix out(src.rows(), src.cols());
  // Entry ((i,k),(j,l)) with i,j on A and k,l on B.
  for (int i = 0; i < da; ++i) {
    for (int j = 0; j < da; ++j) {
      for (int k = 0; k < db; ++k) {
        for (int l = 0; l < db; ++l) {
          const Complex v = src(i * db + k, j * db + l);
          if (side == Subsystem::A) {
            out(j * db + k, i * db + l) = v;
          } else {
            out(i * db + l, j * db + k) = v;
          }
        }
      }
    }
  }
  return HermitianMatrix(out);
}

namespace {

double off_diagonal_norm(const CMatrix& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) s += std::norm(a(i, j));
    }
  }
  return std::sqrt(s);
}

}  // namespace

Eigensystem eig_hermitian(const HermitianMatrix& m) {
  const Eigen::Index n = m.dim();
  CMatrix a = m.matrix();
  CMatrix v = CMatrix::Identity(n, n);
  const double scale = std::max(1.0, a.norm());

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= 1e-15 * scale) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double r = std::abs(a(p, q));
        if (r <= 1e-300) continue;
        // Phase that makes a(p,q) real, then a real Jacobi rotation.
        const Complex phase = a(p, q) / r;
        const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * r);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // Columns of the unitary J restricted to (p, q):
        //   J(:,p) = (c, -s conj(phase)),  J(:,q) = (s, c conj(phase))
        const Complex jpp = c, jqp = -s * std::conj(phase);
        const Complex jpq = s, jqq = c * std::conj(phase);
        for (Eigen::Index k = 0; k < n; ++k) {  // a <- a J
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * jpp + akq * jqp;
          a(k, q) = akp * jpq + akq * jqq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {  // a <- J^H a
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
          a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {  // v <- v J
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * jpp + vkq * jqp;
          v(k, q) = vkp * jpq + vkq * jqq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return a(i, i).real() > a(j, j).real();
  });
  Eigensystem out{RVector(n), CMatrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]).real();
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

double min_eigenvalue(const HermitianMatrix& m) {
  if (m.dim() == 0) return 0.0;
  return eig_hermitian(m).values(m.dim() - 1);
}

bool is_psd(const HermitianMatrix& m, double tol) { return min_eigenvalue(m) >= -tol; }

std::string_view to_string(BellLabel label) {
  switch (label) {
    case BellLabel::PsiPlus: return "PsiPlus";
    case BellLabel::PsiMinus: return "PsiMinus";
    case BellLabel::PhiPlus: return "PhiPlus";
    case BellLabel::PhiMinus: return "PhiMinus";
  }
  return "?";
}

BellLabel bell_label_from_string(std::string_view name) {
  for (BellLabel l : kBellLabels) {
    if (to_string(l) == name) return l;
  }
  throw ParseError("unknown Bell label '" + std::string(name) + "'");
}

PureKet make_bell(BellLabel label) {
  const double h = 1.0 / std::sqrt(2.0);
  // index = 2*polarization + path
  CVector v = CVector::Zero(4);
  switch (label) {
    case BellLabel::PsiPlus: v(1) = h; v(2) = h; break;    // |H>|1> + |V>|0>
    case BellLabel::PsiMinus: v(1) = h; v(2) = -h; break;  // |H>|1> - |V>|0>
    case BellLabel::PhiPlus: v(0) = h; v(3) = h; break;    // |H>|0> + |V>|1>
    case BellLabel::PhiMinus: v(0) = h; v(3) = -h; break;  // |H>|0> - |V>|1>
  }
  return PureKet(v);
}

DensityOperator make_werner(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DomainError("make_werner: lambda must lie in [0, 1]");
  }
  const HermitianMatrix bell = make_bell(BellLabel::PsiPlus).projector();
  return DensityOperator(bell * lambda + HermitianMatrix::identity(4) * ((1.0 - lambda) / 4.0));
}

double negativity(const DensityOperator& rho, std::pair<int, int> dims) {
  const RVector ev = eig_hermitian(partial_transpose(rho.matrix(), dims, Subsystem::A)).values;
  double neg = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0) neg -= ev(i);
  }
  return neg;
}

}  // namespace mdiew
