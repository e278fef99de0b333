#include "mdiew/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mdiew/errors.hpp"

namespace mdiew::sdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::size_t SdpProblem::add_block(std::string name, int dim, BlockKind kind) {
  blocks.push_back({std::move(name), dim, kind});
  return blocks.size() - 1;
}

void SdpProblem::validate() const {
  auto check_term = [&](const LinearTerm& t, const char* where) {
    if (t.block >= blocks.size()) {
      throw StructuralError(std::string(where) + ": term refers to unknown block");
    }
    const BlockSpec& spec = blocks[t.block];
    if (t.coeff.dim() != spec.dim) {
      throw StructuralError(std::string(where) + ": coefficient size does not match block '" +
                            spec.name + "'");
    }
    if (spec.kind == BlockKind::RealSymmetric &&
        t.coeff.matrix().imag().cwiseAbs().maxCoeff() > kHermitianTol) {
      throw StructuralError(std::string(where) + ": complex coefficient on real block '" +
                            spec.name + "'");
    }
  };
  for (const auto& b : blocks) {
    if (b.dim <= 0) throw StructuralError("sdp: block '" + b.name + "' has nonpositive size");
  }
  for (const auto& t : objective) check_term(t, "objective");
  for (const auto& c : constraints) {
    for (const auto& t : c.terms) check_term(t, "constraint");
    if (!std::isfinite(c.rhs)) throw StructuralError("constraint: non-finite right-hand side");
  }
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::MaxIterations: return "max_iterations";
  }
  return "?";
}

MatrixXd realify(const HermitianMatrix& h) {
  const Eigen::Index n = h.dim();
  MatrixXd r(2 * n, 2 * n);
  const MatrixXd re = h.matrix().real();
  const MatrixXd im = h.matrix().imag();
  r.topLeftCorner(n, n) = re;
  r.topRightCorner(n, n) = -im;
  r.bottomLeftCorner(n, n) = im;
  r.bottomRightCorner(n, n) = re;
  return r;
}

namespace {

// Inverse of the embedding, projecting away the part that breaks the
// [[A, -B], [B, A]] structure.
CMatrix unrealify(const MatrixXd& r) {
  const Eigen::Index n = r.rows() / 2;
  CMatrix h(n, n);
  h.real() = 0.5 * (r.topLeftCorner(n, n) + r.bottomRightCorner(n, n));
  h.imag() = 0.5 * (r.bottomLeftCorner(n, n) - r.topRightCorner(n, n));
  return 0.5 * (h + h.adjoint());
}

double inner(const MatrixXd& a, const MatrixXd& b) { return a.cwiseProduct(b).sum(); }

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

struct Term {
  int row;
  MatrixXd mat;
};

// The problem after embedding into real symmetric blocks.
struct RealProblem {
  std::vector<int> dims;
  std::vector<BlockKind> kinds;
  std::vector<MatrixXd> c;
  std::vector<std::vector<Term>> by_block;  // per block, the constraint terms touching it
  VectorXd b;
  int m = 0;
};

MatrixXd embed(const HermitianMatrix& coeff, BlockKind kind) {
  // tr(C H) = tr(realify(C) realify(H)) / 2.
  if (kind == BlockKind::Hermitian) return 0.5 * realify(coeff);
  return coeff.matrix().real();
}

RealProblem embed_problem(const SdpProblem& p) {
  RealProblem rp;
  const std::size_t nb = p.blocks.size();
  for (const auto& spec : p.blocks) {
    const int d = spec.kind == BlockKind::Hermitian ? 2 * spec.dim : spec.dim;
    rp.dims.push_back(d);
    rp.kinds.push_back(spec.kind);
    rp.c.push_back(MatrixXd::Zero(d, d));
  }
  rp.by_block.resize(nb);
  for (const auto& t : p.objective) rp.c[t.block] += embed(t.coeff, p.blocks[t.block].kind);
  rp.m = static_cast<int>(p.constraints.size());
  rp.b.resize(rp.m);
  for (int i = 0; i < rp.m; ++i) {
    const auto& con = p.constraints[static_cast<std::size_t>(i)];
    rp.b(i) = con.rhs;
    for (const auto& t : con.terms) {
      auto& terms = rp.by_block[t.block];
      MatrixXd e = embed(t.coeff, p.blocks[t.block].kind);
      if (!terms.empty() && terms.back().row == i) {
        terms.back().mat += e;
      } else {
        terms.push_back({i, std::move(e)});
      }
    }
  }
  return rp;
}

// Upper triangle with off-diagonals scaled by sqrt(2), so that
// <A, X> = svec(A) . svec(X).
void svec_into(const MatrixXd& a, Eigen::Ref<VectorXd> out) {
  const Eigen::Index n = a.rows();
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      out(k++) = i == j ? a(i, j) : std::sqrt(2.0) * a(i, j);
    }
  }
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Constraints grouped by the connected components of the row/block incidence
// graph. The Schur complement is block diagonal over these groups.
struct Partition {
  std::vector<std::vector<int>> rows;    // per component, original row ids
  std::vector<std::vector<int>> blocks;  // per component
};

Partition partition_rows(const RealProblem& rp) {
  const int nb = static_cast<int>(rp.dims.size());
  UnionFind uf(rp.m + nb);  // rows first, then blocks
  for (int k = 0; k < nb; ++k) {
    for (const auto& t : rp.by_block[static_cast<std::size_t>(k)]) uf.unite(t.row, rp.m + k);
  }
  std::vector<int> comp_of(static_cast<std::size_t>(rp.m + nb), -1);
  Partition part;
  auto component = [&](int node) {
    const int root = uf.find(node);
    if (comp_of[root] < 0) {
      comp_of[root] = static_cast<int>(part.rows.size());
      part.rows.emplace_back();
      part.blocks.emplace_back();
    }
    return comp_of[root];
  };
  for (int i = 0; i < rp.m; ++i) part.rows[component(i)].push_back(i);
  for (int k = 0; k < nb; ++k) part.blocks[component(rp.m + k)].push_back(k);
  return part;
}

struct Presolve {
  std::vector<bool> active;
  bool infeasible = false;
  VectorXd ray;  // over all rows, b^T ray = 1
};

// Drops linearly dependent equality rows. An inconsistent dependent row is a
// primal infeasibility certificate: a combination y with A^T y = 0, b^T y = 1.
Presolve presolve(const RealProblem& rp, const Partition& part, double eps_feas) {
  Presolve out;
  out.active.assign(static_cast<std::size_t>(rp.m), true);
  for (std::size_t c = 0; c < part.rows.size(); ++c) {
    const auto& rows = part.rows[c];
    if (rows.empty()) continue;
    std::vector<Eigen::Index> offset;
    Eigen::Index width = 0;
    std::vector<int> local_block(rp.dims.size(), -1);
    for (int k : part.blocks[c]) {
      local_block[static_cast<std::size_t>(k)] = static_cast<int>(offset.size());
      offset.push_back(width);
      const Eigen::Index d = rp.dims[static_cast<std::size_t>(k)];
      width += d * (d + 1) / 2;
    }
    std::vector<int> local_row(static_cast<std::size_t>(rp.m), -1);
    for (std::size_t r = 0; r < rows.size(); ++r) local_row[rows[r]] = static_cast<int>(r);

    MatrixXd at = MatrixXd::Zero(width, static_cast<Eigen::Index>(rows.size()));
    for (int k : part.blocks[c]) {
      const Eigen::Index d = rp.dims[static_cast<std::size_t>(k)];
      const Eigen::Index off = offset[static_cast<std::size_t>(local_block[k])];
      for (const auto& t : rp.by_block[static_cast<std::size_t>(k)]) {
        svec_into(t.mat, at.col(local_row[t.row]).segment(off, d * (d + 1) / 2));
      }
    }
    const double scale = at.size() > 0 ? at.cwiseAbs().maxCoeff() : 0.0;
    if (scale == 0.0) {
      // Only empty rows: each must read 0 = b_i.
      for (int r : rows) {
        out.active[r] = false;
        if (std::abs(rp.b(r)) > eps_feas) {
          out.infeasible = true;
          out.ray = VectorXd::Zero(rp.m);
          out.ray(r) = 1.0 / rp.b(r);
          return out;
        }
      }
      continue;
    }
    Eigen::ColPivHouseholderQR<MatrixXd> qr(at);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    if (rank == static_cast<Eigen::Index>(rows.size())) continue;

    const auto& perm = qr.colsPermutation().indices();
    std::vector<int> kept, dropped;
    for (Eigen::Index j = 0; j < perm.size(); ++j) {
      (j < rank ? kept : dropped).push_back(perm(j));
    }
    std::sort(kept.begin(), kept.end());
    MatrixXd basis(width, static_cast<Eigen::Index>(kept.size()));
    VectorXd b_kept(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) {
      basis.col(static_cast<Eigen::Index>(j)) = at.col(kept[j]);
      b_kept(static_cast<Eigen::Index>(j)) = rp.b(rows[kept[j]]);
    }
    Eigen::ColPivHouseholderQR<MatrixXd> basis_qr(basis);
    for (int j : dropped) {
      out.active[rows[j]] = false;
      const VectorXd coef = basis_qr.solve(VectorXd(at.col(j)));
      const double diff = rp.b(rows[j]) - coef.dot(b_kept);
      const double tol = eps_feas * (1.0 + std::abs(rp.b(rows[j])) +
                                     coef.cwiseAbs().dot(b_kept.cwiseAbs()));
      if (std::abs(diff) > tol) {
        out.infeasible = true;
        out.ray = VectorXd::Zero(rp.m);
        out.ray(rows[j]) = 1.0 / diff;
        for (std::size_t q = 0; q < kept.size(); ++q) {
          out.ray(rows[kept[q]]) = -coef(static_cast<Eigen::Index>(q)) / diff;
        }
        return out;
      }
    }
  }
  return out;
}

// A^T y restricted to one block.
MatrixXd adjoint_block(const RealProblem& rp, std::size_t k, const VectorXd& y) {
  const int d = rp.dims[k];
  MatrixXd out = MatrixXd::Zero(d, d);
  for (const auto& t : rp.by_block[k]) {
    if (y(t.row) != 0.0) out += y(t.row) * t.mat;
  }
  return out;
}

// Largest alpha with x + alpha dx PSD, given the Cholesky factor of x.
double max_step(const MatrixXd& chol_lower, const MatrixXd& dx) {
  const auto l = chol_lower.triangularView<Eigen::Lower>();
  MatrixXd t = l.solve(dx);
  t = l.solve(MatrixXd(t.transpose()));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(t), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

double max_eigenvalue(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

// Nesterov-Todd scaling of one block: W = G G^T with G^{-1} X G^{-T} = G^T Z G = diag(v).
struct Scaling {
  MatrixXd chol_x, chol_z;
  MatrixXd g, g_inv, w;
  VectorXd v;
};

bool compute_scaling(const MatrixXd& x, const MatrixXd& z, Scaling& s) {
  Eigen::LLT<MatrixXd> lx(x), lz(z);
  if (lx.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
  s.chol_x = lx.matrixL();
  s.chol_z = lz.matrixL();
  const MatrixXd& l = s.chol_x;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(l.transpose() * z * l));
  const VectorXd& d = es.eigenvalues();
  if (d.minCoeff() <= 0.0) return false;
  const MatrixXd& q = es.eigenvectors();
  const VectorXd d_m4 = d.array().pow(-0.25);
  const VectorXd d_p4 = d.array().pow(0.25);
  s.g = l * q * d_m4.asDiagonal();
  const MatrixXd l_inv = l.triangularView<Eigen::Lower>().solve(
      MatrixXd::Identity(l.rows(), l.cols()));
  s.g_inv = d_p4.asDiagonal() * q.transpose() * l_inv;
  s.w = sym(s.g * s.g.transpose());
  s.v = d.array().sqrt();
  return true;
}

class InteriorPoint {
 public:
  InteriorPoint(const RealProblem& rp, const Partition& part, const std::vector<bool>& active,
                const SolverOptions& opt)
      : rp_(rp), opt_(opt), nb_(rp.dims.size()) {
    // Schur complement layout over active rows.
    local_.assign(static_cast<std::size_t>(rp.m), -1);
    comp_.assign(static_cast<std::size_t>(rp.m), -1);
    for (const auto& rows : part.rows) {
      std::vector<int> act;
      for (int r : rows) {
        if (active[r]) act.push_back(r);
      }
      if (act.empty()) continue;
      for (std::size_t i = 0; i < act.size(); ++i) {
        local_[act[i]] = static_cast<int>(i);
        comp_[act[i]] = static_cast<int>(groups_.size());
      }
      groups_.push_back(std::move(act));
    }
    active_terms_.resize(nb_);
    for (std::size_t k = 0; k < nb_; ++k) {
      for (const auto& t : rp.by_block[k]) {
        if (active[t.row]) active_terms_[k].push_back(&t);
      }
    }
    n_total_ = std::accumulate(rp.dims.begin(), rp.dims.end(), 0);
  }

  SdpSolution run(const SdpSolution& proto) {
    SdpSolution out = proto;
    init();
    const double b_scale = std::max(1.0, rp_.b.size() ? rp_.b.cwiseAbs().maxCoeff() : 0.0);
    double c_scale = 1.0;
    for (const auto& c : rp_.c) c_scale = std::max(c_scale, c.size() ? c.cwiseAbs().maxCoeff() : 0.0);
    int stalls = 0;

    for (int iter = 0; iter <= opt_.max_iter; ++iter) {
      out.iterations = iter;
      const VectorXd rp_vec = residual_primal();
      std::vector<MatrixXd> rd(nb_);
      double dinf = 0.0;
      for (std::size_t k = 0; k < nb_; ++k) {
        rd[k] = rp_.c[k] - z_[k] - adjoint_active(k, y_);
        if (rd[k].size()) dinf = std::max(dinf, rd[k].cwiseAbs().maxCoeff());
      }
      const double pinf = rp_vec.size() ? rp_vec.cwiseAbs().maxCoeff() : 0.0;
      double pobj = 0.0, xz = 0.0;
      for (std::size_t k = 0; k < nb_; ++k) {
        pobj += inner(rp_.c[k], x_[k]);
        xz += inner(x_[k], z_[k]);
      }
      const double dobj = rp_.b.dot(y_);
      if (pinf <= opt_.eps_feas * b_scale && dinf <= opt_.eps_feas * c_scale &&
          std::abs(pobj - dobj) <= opt_.eps_gap && xz <= opt_.eps_gap) {
        out.status = SolveStatus::Optimal;
        break;
      }
      if (iter == opt_.max_iter) break;
      if (dobj > 0.0 && primal_infeasible(dobj, out)) break;

      const double mu = xz / n_total_;
      std::vector<Scaling> sc(nb_);
      bool ok = true;
      for (std::size_t k = 0; k < nb_ && ok; ++k) ok = compute_scaling(x_[k], z_[k], sc[k]);
      if (!ok || !factor_schur(sc)) break;

      // Predictor.
      std::vector<MatrixXd> target(nb_);
      for (std::size_t k = 0; k < nb_; ++k) target[k] = -x_[k];
      std::vector<MatrixXd> dx, dz;
      VectorXd dy;
      direction(sc, target, rp_vec, rd, dx, dy, dz);
      const double ap_aff = std::min(1.0, step_length(sc, dx, true));
      const double ad_aff = std::min(1.0, step_length(sc, dz, false));
      double xz_aff = 0.0;
      for (std::size_t k = 0; k < nb_; ++k) {
        xz_aff += inner(x_[k] + ap_aff * dx[k], z_[k] + ad_aff * dz[k]);
      }
      const double sigma = std::clamp(std::pow(xz_aff / xz, 3.0), 0.0, 1.0);

      // Corrector with the second-order term in the scaled space.
      for (std::size_t k = 0; k < nb_; ++k) {
        const Scaling& s = sc[k];
        const MatrixXd sdx = s.g_inv * dx[k] * s.g_inv.transpose();
        const MatrixXd sdz = s.g.transpose() * dz[k] * s.g;
        const MatrixXd second = sdx * sdz + sdz * sdx;
        const Eigen::Index d = s.v.size();
        MatrixXd r(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
          for (Eigen::Index j = 0; j < d; ++j) {
            r(i, j) = -second(i, j) / (s.v(i) + s.v(j));
          }
          r(i, i) += sigma * mu / s.v(i) - s.v(i);
        }
        target[k] = sym(s.g * r * s.g.transpose());
      }
      direction(sc, target, rp_vec, rd, dx, dy, dz);
      const double ap_max = step_length(sc, dx, true);
      const double ad_max = step_length(sc, dz, false);
      const double gamma = 0.95;
      const double ap = std::min(1.0, gamma * ap_max);
      const double ad = std::min(1.0, gamma * ad_max);
      for (std::size_t k = 0; k < nb_; ++k) {
        x_[k] = sym(x_[k] + ap * dx[k]);
        z_[k] = sym(z_[k] + ad * dz[k]);
      }
      y_ += ad * dy;
      stalls = (ap < 1e-10 && ad < 1e-10) ? stalls + 1 : 0;
      if (stalls >= 5) break;
    }

    fill_solution(out);
    return out;
  }

 private:
  void init() {
    double xi_p = 10.0, xi_d = 10.0;
    for (std::size_t k = 0; k < nb_; ++k) {
      const double n = rp_.dims[k];
      xi_p = std::max(xi_p, std::sqrt(n));
      xi_d = std::max({xi_d, std::sqrt(n), rp_.c[k].norm()});
      for (const auto* t : active_terms_[k]) {
        xi_p = std::max(xi_p, n * (1.0 + std::abs(rp_.b(t->row))) / (1.0 + t->mat.norm()));
        xi_d = std::max(xi_d, t->mat.norm());
      }
    }
    x_.clear();
    z_.clear();
    for (std::size_t k = 0; k < nb_; ++k) {
      x_.push_back(xi_p * MatrixXd::Identity(rp_.dims[k], rp_.dims[k]));
      z_.push_back(xi_d * MatrixXd::Identity(rp_.dims[k], rp_.dims[k]));
    }
    y_ = VectorXd::Zero(rp_.m);
  }

  MatrixXd adjoint_active(std::size_t k, const VectorXd& y) const {
    MatrixXd out = MatrixXd::Zero(rp_.dims[k], rp_.dims[k]);
    for (const auto* t : active_terms_[k]) {
      if (y(t->row) != 0.0) out += y(t->row) * t->mat;
    }
    return out;
  }

  VectorXd apply_active(const std::vector<MatrixXd>& x) const {
    VectorXd out = VectorXd::Zero(rp_.m);
    for (std::size_t k = 0; k < nb_; ++k) {
      for (const auto* t : active_terms_[k]) out(t->row) += inner(t->mat, x[k]);
    }
    return out;
  }

  VectorXd residual_primal() const {
    VectorXd r = apply_active(x_);
    for (int i = 0; i < rp_.m; ++i) r(i) = comp_[i] >= 0 ? rp_.b(i) - r(i) : 0.0;
    return r;
  }

  bool factor_schur(const std::vector<Scaling>& sc) {
    waw_.assign(nb_, {});
    std::vector<MatrixXd> m(groups_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      const auto n = static_cast<Eigen::Index>(groups_[g].size());
      m[g] = MatrixXd::Zero(n, n);
    }
    for (std::size_t k = 0; k < nb_; ++k) {
      const auto& terms = active_terms_[k];
      auto& waw = waw_[k];
      waw.reserve(terms.size());
      for (const auto* t : terms) waw.push_back(sc[k].w * t->mat * sc[k].w);
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const int ri = terms[i]->row;
        MatrixXd& mg = m[comp_[ri]];
        for (std::size_t j = 0; j <= i; ++j) {
          const int rj = terms[j]->row;
          const double v = inner(terms[i]->mat, waw[j]);
          mg(local_[ri], local_[rj]) += v;
          if (i != j) mg(local_[rj], local_[ri]) += v;
        }
      }
    }
    chol_.clear();
    for (auto& mg : m) {
      Eigen::LLT<MatrixXd> llt(mg);
      if (llt.info() != Eigen::Success) {
        const double reg = 1e-14 * std::max(1.0, mg.diagonal().cwiseAbs().maxCoeff());
        mg.diagonal().array() += reg;
        llt.compute(mg);
        if (llt.info() != Eigen::Success) return false;
      }
      chol_.push_back(std::move(llt));
    }
    return true;
  }

  VectorXd solve_schur(const VectorXd& rhs) const {
    VectorXd out = VectorXd::Zero(rp_.m);
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      const auto& rows = groups_[g];
      VectorXd local(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) local(static_cast<Eigen::Index>(i)) = rhs(rows[i]);
      local = chol_[g].solve(local);
      for (std::size_t i = 0; i < rows.size(); ++i) out(rows[i]) = local(static_cast<Eigen::Index>(i));
    }
    return out;
  }

  // Solves  A(dx) = r_p,  A^T dy + dz = R_d,  dx + W dz W = target.
  void direction(const std::vector<Scaling>& sc, const std::vector<MatrixXd>& target,
                 const VectorXd& r_p, const std::vector<MatrixXd>& r_d, std::vector<MatrixXd>& dx,
                 VectorXd& dy, std::vector<MatrixXd>& dz) const {
    std::vector<MatrixXd> base(nb_);
    for (std::size_t k = 0; k < nb_; ++k) base[k] = target[k] - sc[k].w * r_d[k] * sc[k].w;
    dy = solve_schur(r_p - apply_active(base));
    dx.assign(nb_, {});
    dz.assign(nb_, {});
    for (std::size_t k = 0; k < nb_; ++k) {
      MatrixXd d = base[k];
      const auto& terms = active_terms_[k];
      for (std::size_t i = 0; i < terms.size(); ++i) d += dy(terms[i]->row) * waw_[k][i];
      dx[k] = sym(d);
      dz[k] = sym(r_d[k] - adjoint_active(k, dy));
    }
  }

  double step_length(const std::vector<Scaling>& sc, const std::vector<MatrixXd>& d,
                     bool primal) const {
    double a = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nb_; ++k) {
      a = std::min(a, max_step(primal ? sc[k].chol_x : sc[k].chol_z, d[k]));
    }
    return a;
  }

  bool primal_infeasible(double dobj, SdpSolution& out) const {
    // Ray y / b^T y with A^T ray <= eps I certifies primal infeasibility.
    const VectorXd ray = y_ / dobj;
    double worst = 0.0;
    for (std::size_t k = 0; k < nb_; ++k) {
      worst = std::max(worst, max_eigenvalue(adjoint_active(k, ray)));
    }
    if (worst > opt_.eps_feas) return false;
    out.status = SolveStatus::Infeasible;
    out.infeasibility_ray.assign(ray.data(), ray.data() + ray.size());
    out.ray_residual = worst;
    return true;
  }

  void fill_solution(SdpSolution& out) const {
    out.primal_objective = 0.0;
    for (std::size_t k = 0; k < nb_; ++k) out.primal_objective += inner(rp_.c[k], x_[k]);
    out.dual_objective = rp_.b.dot(y_);
    out.gap = out.primal_objective - out.dual_objective;
    out.dual_multipliers.assign(y_.data(), y_.data() + y_.size());
    out.primal_blocks.clear();
    out.dual_slacks.clear();
    for (std::size_t k = 0; k < nb_; ++k) {
      if (rp_.kinds[k] == BlockKind::Hermitian) {
        out.primal_blocks.emplace_back(unrealify(x_[k]));
        out.dual_slacks.emplace_back(CMatrix(2.0 * unrealify(z_[k])));
      } else {
        out.primal_blocks.emplace_back(CMatrix(x_[k].cast<Complex>()));
        out.dual_slacks.emplace_back(CMatrix(z_[k].cast<Complex>()));
      }
    }
  }

  const RealProblem& rp_;
  const SolverOptions& opt_;
  std::size_t nb_;
  int n_total_ = 0;
  std::vector<int> local_, comp_;
  std::vector<std::vector<int>> groups_;
  std::vector<std::vector<const Term*>> active_terms_;
  std::vector<std::vector<MatrixXd>> waw_;
  std::vector<Eigen::LLT<MatrixXd>> chol_;
  std::vector<MatrixXd> x_, z_;
  VectorXd y_;
};

}  // namespace

SdpSolution solve(const SdpProblem& p, const SolverOptions& options) {
  p.validate();
  if (!(options.eps_gap > 0.0) || !(options.eps_feas > 0.0) || options.max_iter < 0) {
    throw DomainError("sdp::solve: tolerances must be positive");
  }
  const RealProblem rp = embed_problem(p);
  const Partition part = partition_rows(rp);
  const Presolve pre = presolve(rp, part, options.eps_feas);

  SdpSolution proto;
  if (pre.infeasible) {
    proto.status = SolveStatus::Infeasible;
    proto.infeasibility_ray.assign(pre.ray.data(), pre.ray.data() + pre.ray.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < rp.dims.size(); ++k) {
      worst = std::max(worst, max_eigenvalue(adjoint_block(rp, k, pre.ray)));
    }
    proto.ray_residual = worst;
    proto.dual_multipliers.assign(static_cast<std::size_t>(rp.m), 0.0);
    for (const auto& spec : p.blocks) {
      proto.primal_blocks.push_back(HermitianMatrix::zero(spec.dim));
      proto.dual_slacks.push_back(HermitianMatrix::zero(spec.dim));
    }
    return proto;
  }
  InteriorPoint ipm(rp, part, pre.active, options);
  return ipm.run(proto);
}

bool SolutionReport::within(const SolverOptions& o) const {
  return primal_residual <= o.eps_feas && min_primal_eigenvalue >= -o.eps_psd &&
         min_dual_eigenvalue >= -o.eps_feas && std::abs(gap) <= o.eps_gap;
}

SolutionReport check_solution(const SdpProblem& p, const SdpSolution& s) {
  if (s.primal_blocks.size() != p.blocks.size() ||
      s.dual_multipliers.size() != p.constraints.size()) {
    throw StructuralError("check_solution: solution shape does not match problem");
  }
  SolutionReport r;
  r.min_primal_eigenvalue = std::numeric_limits<double>::infinity();
  r.min_dual_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto& con = p.constraints[i];
    double lhs = 0.0;
    for (const auto& t : con.terms) lhs += trace_product(t.coeff, s.primal_blocks[t.block]);
    r.primal_residual = std::max(r.primal_residual, std::abs(lhs - con.rhs));
    r.dual_objective += con.rhs * s.dual_multipliers[i];
  }
  std::vector<CMatrix> z(p.blocks.size());
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    z[k] = CMatrix::Zero(p.blocks[k].dim, p.blocks[k].dim);
  }
  for (const auto& t : p.objective) {
    z[t.block] += t.coeff.matrix();
    r.primal_objective += trace_product(t.coeff, s.primal_blocks[t.block]);
  }
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    for (const auto& t : p.constraints[i].terms) z[t.block] -= s.dual_multipliers[i] * t.coeff.matrix();
  }
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    r.min_primal_eigenvalue = std::min(r.min_primal_eigenvalue, min_eigenvalue(s.primal_blocks[k]));
    r.min_dual_eigenvalue = std::min(r.min_dual_eigenvalue, min_eigenvalue(HermitianMatrix(
                                                                CMatrix(0.5 * (z[k] + z[k].adjoint())))));
  }
  if (p.blocks.empty()) r.min_primal_eigenvalue = r.min_dual_eigenvalue = 0.0;
  r.gap = r.primal_objective - r.dual_objective;
  return r;
}

void dump_problem(const SdpProblem& p, std::ostream& out) {
  const auto old_precision = out.precision(17);
  auto write_terms = [&](const std::vector<LinearTerm>& terms) {
    for (const auto& t : terms) {
      const CMatrix& m = t.coeff.matrix();
      std::vector<std::pair<Eigen::Index, Eigen::Index>> nz;
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
          if (m(i, j) != Complex(0.0)) nz.emplace_back(i, j);
        }
      }
      out << "term " << t.block << ' ' << nz.size() << '\n';
      for (auto [i, j] : nz) {
        out << i << ' ' << j << ' ' << m(i, j).real() << ' ' << m(i, j).imag() << '\n';
      }
    }
  };
  out << "# mdiew sdp problem: minimize sum tr(C X) s.t. sum tr(A_i X) = b_i, X psd\n";
  out << "blocks " << p.blocks.size() << '\n';
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    const auto& b = p.blocks[k];
    out << "block " << k << ' ' << b.name << ' ' << b.dim << ' '
        << (b.kind == BlockKind::Hermitian ? "hermitian" : "real") << '\n';
  }
  out << "objective " << p.objective.size() << '\n';
  write_terms(p.objective);
  out << "constraints " << p.constraints.size() << '\n';
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto& c = p.constraints[i];
    out << "constraint " << i << ' ' << c.rhs << ' ' << c.terms.size() << '\n';
    write_terms(c.terms);
  }
  out.precision(old_precision);
}

}  // namespace mdiew::sdp
