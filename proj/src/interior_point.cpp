#include "delaysof/interior_point.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "delaysof/errors.hpp"
#include "delaysof/svec.hpp"

namespace delaysof {

namespace {

Eigen::MatrixXd sym(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

struct Block {
  int s = 0;
  Eigen::VectorXd g0;                // svec constant
  Eigen::MatrixXd A;                 // svec x |nz|
  std::vector<int> nz;               // global indices of nonzero columns
  std::vector<Eigen::MatrixXd> F;    // smat of each nonzero column
};

struct Iterate {
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> X, Z;
};

// Largest alpha in (0, inf] with M + alpha dM >= 0, for M > 0.
double max_step(const Eigen::MatrixXd& M, const Eigen::MatrixXd& dM) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) return 0.0;
  const Eigen::MatrixXd Linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(M.rows(), M.cols()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(Linv * dM * Linv.transpose()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  return lo < 0.0 ? -1.0 / lo : std::numeric_limits<double>::infinity();
}

double inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a.array() * b.array()).sum(); }

}  // namespace

AdapterOutput InteriorPointAdapter::solve(const SvecProblem& problem, const SolverOptions& options) const {
  const int N = problem.num_scalar_vars;
  const Eigen::VectorXd& b = problem.objective;
  std::vector<Block> blocks;
  blocks.reserve(problem.blocks.size());
  int total_dim = 0;
  Eigen::Index sq_rows = 0;
  for (const auto& pb : problem.blocks) {
    Block blk;
    blk.s = pb.size;
    blk.g0 = pb.constant;
    for (int i = 0; i < N; ++i) {
      if (pb.coeffs.col(i).cwiseAbs().maxCoeff() > 0.0) blk.nz.push_back(i);
    }
    blk.A.resize(pb.coeffs.rows(), static_cast<Eigen::Index>(blk.nz.size()));
    for (size_t k = 0; k < blk.nz.size(); ++k) {
      blk.A.col(static_cast<Eigen::Index>(k)) = pb.coeffs.col(blk.nz[k]);
      blk.F.push_back(smat(pb.coeffs.col(blk.nz[k])));
    }
    total_dim += blk.s;
    sq_rows += blk.s * blk.s;
    blocks.push_back(std::move(blk));
  }
  const int nb = static_cast<int>(blocks.size());

  // Z(y) contribution in svec form.
  auto apply = [&](int j, const Eigen::VectorXd& y) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(blocks[j].g0.size());
    for (size_t k = 0; k < blocks[j].nz.size(); ++k) {
      out += y(blocks[j].nz[k]) * blocks[j].A.col(static_cast<Eigen::Index>(k));
    }
    return out;
  };
  auto adjoint = [&](const std::vector<Eigen::MatrixXd>& X) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
    for (int j = 0; j < nb; ++j) {
      const Eigen::VectorXd v = blocks[j].A.transpose() * svec(sym(X[j]));
      for (size_t k = 0; k < blocks[j].nz.size(); ++k) out(blocks[j].nz[k]) += v(static_cast<Eigen::Index>(k));
    }
    return out;
  };

  // Initial point in the style of SDPT3.
  Iterate it;
  it.y = Eigen::VectorXd::Zero(N);
  for (const auto& blk : blocks) {
    const double s = blk.s;
    double xi = std::max(10.0, std::sqrt(s));
    double eta = std::max({10.0, std::sqrt(s), blk.g0.norm()});
    for (size_t k = 0; k < blk.nz.size(); ++k) {
      const double fn = blk.A.col(static_cast<Eigen::Index>(k)).norm();
      xi = std::max(xi, s * (1.0 + std::abs(b(blk.nz[k]))) / (1.0 + fn));
      eta = std::max(eta, fn);
    }
    it.X.push_back(xi * Eigen::MatrixXd::Identity(blk.s, blk.s));
    it.Z.push_back(eta * Eigen::MatrixXd::Identity(blk.s, blk.s));
  }

  double g0norm = 0.0;
  for (const auto& blk : blocks) g0norm += blk.g0.squaredNorm();
  g0norm = std::sqrt(g0norm);
  const double bnorm = b.norm();

  AdapterOutput out;
  out.status = AdapterOutput::Status::MaxIterations;
  Eigen::VectorXd best_y = it.y;
  std::vector<Eigen::MatrixXd> best_X = it.X;
  double best_score = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < options.max_iter; ++iter) {
    // Residuals.
    std::vector<Eigen::MatrixXd> Rd(static_cast<size_t>(nb));
    double rd2 = 0.0, mu = 0.0, pobj = b.dot(it.y), dobj = 0.0;
    for (int j = 0; j < nb; ++j) {
      Rd[j] = smat(blocks[j].g0 + apply(j, it.y)) - it.Z[j];
      rd2 += Rd[j].squaredNorm();
      mu += inner(it.X[j], it.Z[j]);
      dobj += inner(smat(blocks[j].g0), it.X[j]);
    }
    mu /= total_dim;
    const Eigen::VectorXd rp = -b - adjoint(it.X);
    const double pinf = rp.norm() / (1.0 + bnorm);
    const double dinf = std::sqrt(rd2) / (1.0 + g0norm);
    const double gap = std::abs(dobj - pobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    out.iterations = iter;
    const double score = std::max({gap, pinf, dinf});
    if (score < best_score) {
      best_score = score;
      best_y = it.y;
      best_X = it.X;
      out.primal_residual = dinf;  // feasibility of y (the primal of this form)
      out.dual_residual = pinf;
      out.gap = gap;
    }
    if (gap < 1e-4) {
      out.dual_candidates.push_back(it.X);
      if (out.dual_candidates.size() > 12) out.dual_candidates.erase(out.dual_candidates.begin());
    }
    if (score <= options.tol) {
      out.status = AdapterOutput::Status::Converged;
      break;
    }

    // Schur complement M_ik = tr(F_i X F_k Z^-1) = <R^T F_i L^-T, R^T F_k L^-T>
    // with X = R R^T and Z = L L^T. It is factored through a QR of the stacked
    // factors, which avoids squaring their condition number.
    std::vector<Eigen::MatrixXd> Zinv(static_cast<size_t>(nb));
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(sq_rows, N);
    bool ok = true;
    Eigen::Index row = 0;
    for (int j = 0; j < nb; ++j) {
      const auto& blk = blocks[j];
      Eigen::LLT<Eigen::MatrixXd> lz(it.Z[j]), lx(it.X[j]);
      if (lz.info() != Eigen::Success || lx.info() != Eigen::Success) {
        ok = false;
        break;
      }
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(blk.s, blk.s);
      const Eigen::MatrixXd Linv = lz.matrixL().solve(I);
      Zinv[j] = Linv.transpose() * Linv;
      const Eigen::MatrixXd Rt = lx.matrixL().transpose();
      for (size_t k = 0; k < blk.nz.size(); ++k) {
        const Eigen::MatrixXd Gk = Rt * blk.F[k] * Linv.transpose();
        G.col(blk.nz[k]).segment(row, Gk.size()) = Eigen::Map<const Eigen::VectorXd>(Gk.data(), Gk.size());
      }
      row += blk.s * blk.s;
    }
    if (!ok) {
      out.status = AdapterOutput::Status::NumericalFailure;
      out.message = "iterate lost definiteness";
      break;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(G);
    if (qr.rank() < N) {
      out.status = AdapterOutput::Status::NumericalFailure;
      out.message = "Schur complement is singular";
      break;
    }
    const Eigen::MatrixXd Rq = qr.matrixR().topLeftCorner(N, N).triangularView<Eigen::Upper>();
    // M = P Rq^T Rq P^T
    auto schur_solve = [&](const Eigen::VectorXd& r) {
      Eigen::VectorXd z = qr.colsPermutation().transpose() * r;
      Rq.transpose().triangularView<Eigen::Lower>().solveInPlace(z);
      Rq.triangularView<Eigen::Upper>().solveInPlace(z);
      return Eigen::VectorXd(qr.colsPermutation() * z);
    };

    // One Newton solve for a given complementarity target Rc (per block).
    auto direction = [&](const std::vector<Eigen::MatrixXd>& Rc, Eigen::VectorXd& dy,
                         std::vector<Eigen::MatrixXd>& dX, std::vector<Eigen::MatrixXd>& dZ) {
      std::vector<Eigen::MatrixXd> T(static_cast<size_t>(nb));
      for (int j = 0; j < nb; ++j) T[j] = (Rc[j] - it.X[j] * Rd[j]) * Zinv[j];
      const Eigen::VectorXd rhs = adjoint(T) - rp;
      dy = schur_solve(rhs);
      dX.resize(static_cast<size_t>(nb));
      dZ.resize(static_cast<size_t>(nb));
      auto expand = [&] {
        for (int j = 0; j < nb; ++j) {
          dZ[j] = Rd[j] + smat(apply(j, dy));
          dX[j] = sym((Rc[j] - it.X[j] * dZ[j]) * Zinv[j]);
        }
      };
      expand();
      // Iterative refinement on the equation A*(dX) = rp.
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd e = rp - adjoint(dX);
        dy -= schur_solve(e);
        expand();
      }
    };
    auto steps = [&](const std::vector<Eigen::MatrixXd>& dX, const std::vector<Eigen::MatrixXd>& dZ) {
      double ap = std::numeric_limits<double>::infinity(), ad = ap;
      for (int j = 0; j < nb; ++j) {
        ap = std::min(ap, max_step(it.X[j], dX[j]));
        ad = std::min(ad, max_step(it.Z[j], dZ[j]));
      }
      return std::pair<double, double>{ap, ad};
    };

    // Predictor.
    std::vector<Eigen::MatrixXd> Rc(static_cast<size_t>(nb));
    for (int j = 0; j < nb; ++j) Rc[j] = -it.X[j] * it.Z[j];
    Eigen::VectorXd dy;
    std::vector<Eigen::MatrixXd> dX, dZ;
    direction(Rc, dy, dX, dZ);
    auto [ap, ad] = steps(dX, dZ);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double mu_aff = 0.0;
    for (int j = 0; j < nb; ++j) mu_aff += inner(it.X[j] + ap * dX[j], it.Z[j] + ad * dZ[j]);
    mu_aff /= total_dim;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // Corrector.
    for (int j = 0; j < nb; ++j) {
      Rc[j] = sigma * mu * Eigen::MatrixXd::Identity(blocks[j].s, blocks[j].s) - it.X[j] * it.Z[j] - dX[j] * dZ[j];
    }
    direction(Rc, dy, dX, dZ);
    std::tie(ap, ad) = steps(dX, dZ);
    const double tau = 0.9 + 0.09 * std::min({1.0, ap, ad});
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);
    if (!(ap > 1e-14) || !(ad > 1e-14)) {
      out.status = AdapterOutput::Status::NumericalFailure;
      out.message = "step length collapsed";
      break;
    }
    if (std::getenv("DELAYSOF_IPM_TRACE")) {
      std::fprintf(stderr, "%3d mu=%.3e gap=%.2e pinf=%.2e dinf=%.2e sigma=%.2e ap=%.3f ad=%.3f t=%.6e\n", iter, mu, gap,
                   pinf, dinf, sigma, ap, ad, it.y(problem.margin_index));
    }
    it.y += ad * dy;
    for (int j = 0; j < nb; ++j) {
      it.X[j] = sym(it.X[j] + ap * dX[j]);
      it.Z[j] = sym(it.Z[j] + ad * dZ[j]);
    }
  }

  out.y = best_y;
  out.dual_blocks = best_X;
  if (out.status == AdapterOutput::Status::NumericalFailure && best_score <= 1e-6) {
    out.status = AdapterOutput::Status::Stalled;
  }
  if (out.status != AdapterOutput::Status::Converged && out.message.empty()) {
    out.message = "stopped before reaching tolerance";
  }
  return out;
}

}  // namespace delaysof
