#pragma once

// Dense complex linear algebra for small quantum systems (dim <= 16).

#include <complex>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

namespace mdiew {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-12;

// Complex Hermitian matrix. Construction checks Hermiticity to
// kHermitianTol (relative to max(1, |m|_F)) and then stores (m + m^H)/2.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const CMatrix& m);

  static HermitianMatrix identity(Eigen::Index dim);
  static HermitianMatrix zero(Eigen::Index dim);
  static HermitianMatrix diagonal(std::initializer_list<double> entries);

  Eigen::Index dim() const { return m_.rows(); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  double trace() const { return m_.trace().real(); }
  double frobenius_norm() const { return m_.norm(); }

  HermitianMatrix operator+(const HermitianMatrix& o) const;
  HermitianMatrix operator-(const HermitianMatrix& o) const;
  HermitianMatrix operator*(double s) const;

 private:
  CMatrix m_;
};

// Real part of tr(a b) for Hermitian a, b.
double trace_product(const HermitianMatrix& a, const HermitianMatrix& b);

// Unit-norm state vector.
class PureKet {
 public:
  explicit PureKet(CVector amplitudes);

  Eigen::Index dim() const { return v_.size(); }
  const CVector& amplitudes() const { return v_; }
  HermitianMatrix projector() const;

 private:
  CVector v_;
};

// Trace-one positive semidefinite operator.
class DensityOperator {
 public:
  explicit DensityOperator(HermitianMatrix m);
  static DensityOperator from_ket(const PureKet& ket);

  Eigen::Index dim() const { return m_.dim(); }
  const HermitianMatrix& matrix() const { return m_; }

 private:
  HermitianMatrix m_;
};

enum class Subsystem { A, B };

struct Eigensystem {
  RVector values;   // descending
  CMatrix vectors;  // orthonormal columns, matching values
};

HermitianMatrix tensor(const HermitianMatrix& a, const HermitianMatrix& b);
CMatrix kron(const CMatrix& a, const CMatrix& b);

HermitianMatrix partial_transpose(const HermitianMatrix& m, std::pair<int, int> dims,
                                  Subsystem side);

// Cyclic complex Jacobi.
Eigensystem eig_hermitian(const HermitianMatrix& m);
double min_eigenvalue(const HermitianMatrix& m);
bool is_psd(const HermitianMatrix& m, double tol = 1e-10);

enum class BellLabel { PsiPlus = 0, PsiMinus = 1, PhiPlus = 2, PhiMinus = 3 };
inline constexpr BellLabel kBellLabels[] = {BellLabel::PsiPlus, BellLabel::PsiMinus,
                                            BellLabel::PhiPlus, BellLabel::PhiMinus};

std::string_view to_string(BellLabel label);
BellLabel bell_label_from_string(std::string_view name);

// Bell kets in the (polarization, path) basis with H = |0>, V = |1>.
PureKet make_bell(BellLabel label);

// lambda |Psi+><Psi+| + (1 - lambda) I/4.
DensityOperator make_werner(double lambda);

double negativity(const DensityOperator& rho, std::pair<int, int> dims = {2, 2});

}  // namespace mdiew
