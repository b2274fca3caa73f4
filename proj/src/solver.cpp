#include "peakstore/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace peakstore {

namespace {

// Internally the solver minimizes F(x) = -f(x) = 0.5 x'Hx + g'x with H = -Q.
class ActiveSetSolver {
 public:
  ActiveSetSolver(const QuadraticProgram& qp, const SolverOptions& options)
      : qp_(qp),
        opt_(options),
        n_(qp.NumVariables()),
        m_(qp.NumRows()),
        num_eq_(qp.NumEqualities()),
        hessian_(-qp.quadratic),
        gradient0_(-qp.linear) {
    row_norms_.resize(m_);
    for (int r = 0; r < m_; ++r) row_norms_(r) = qp.constraints.row(r).norm();
    const double hmax = hessian_.size() > 0 ? hessian_.cwiseAbs().maxCoeff() : 0.0;
    hessian_scale_ = std::max(hmax, std::numeric_limits<double>::min());
  }

  PrimalDualSolution Run() {
    Initialize();
    const int max_iter = opt_.max_iterations > 0 ? opt_.max_iterations : std::max(10 * m_, 10);

    PrimalDualSolution sol;
    for (int iter = 1; iter <= max_iter; ++iter) {
      sol.iterations = iter;
      const bool done = Iterate(iter);
      sol.objective_history.push_back(ObjectiveValue(qp_, x_));
      if (done) {
        sol.x = x_;
        sol.duals = duals_;
        sol.objective = ObjectiveValue(qp_, x_);
        sol.active_set = working_;
        std::sort(sol.active_set.begin(), sol.active_set.end());
        return sol;
      }
    }
    std::vector<int> last = working_;
    std::sort(last.begin(), last.end());
    throw SolverError(SolverError::Kind::kIterationLimit,
                      fmt::format("active-set iteration limit {} reached (unbounded or cycling); "
                                  "last working set has {} rows",
                                  max_iter, last.size()),
                      last);
  }

 private:
  void Initialize() {
    x_ = opt_.initial_point ? *opt_.initial_point : Eigen::VectorXd::Zero(n_);
    if (x_.size() != n_) {
      throw std::invalid_argument("Solve: initial point has the wrong dimension");
    }
    const double rhs_scale = std::max(1.0, m_ > 0 ? qp_.rhs.cwiseAbs().maxCoeff() : 0.0);
    for (int r = 0; r < m_; ++r) {
      const double v = Violation(r);
      if (v > opt_.feasibility_tol * rhs_scale) {
        throw SolverError(SolverError::Kind::kInfeasibleStart,
                          fmt::format("start point violates row {} ({}) by {:.3g}", r,
                                      qp_.rows[r].name, v),
                          {});
      }
    }
    working_.clear();
    for (int r = 0; r < num_eq_; ++r) working_.push_back(r);
    if (num_eq_ > 0) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(qp_.constraints.topRows(num_eq_).transpose());
      const Eigen::MatrixXd r_factor = qr.matrixQR().topRows(num_eq_).triangularView<Eigen::Upper>();
      const double biggest = r_factor.diagonal().cwiseAbs().maxCoeff();
      if (num_eq_ > n_ || r_factor.diagonal().cwiseAbs().minCoeff() <= 1e-12 * biggest) {
        throw SolverError(SolverError::Kind::kDependentEqualities,
                          "equality rows are linearly dependent", working_);
      }
    }
    duals_ = Eigen::VectorXd::Zero(m_);
  }

  double Violation(int r) const {
    const double lhs = qp_.constraints.row(r).dot(x_);
    const double diff = lhs - qp_.rhs(r);
    return qp_.rows[r].sense == Sense::kEquality ? std::abs(diff) : std::max(0.0, diff);
  }

  bool InWorkingSet(int r) const {
    return std::find(working_.begin(), working_.end(), r) != working_.end();
  }

  Eigen::MatrixXd WorkingMatrix() const {
    Eigen::MatrixXd a(working_.size(), n_);
    for (std::size_t k = 0; k < working_.size(); ++k) a.row(k) = qp_.constraints.row(working_[k]);
    return a;
  }

  // Orthonormal basis of {p : A_W p = 0}.
  Eigen::MatrixXd NullSpace() const {
    const int k = static_cast<int>(working_.size());
    if (k == 0) return Eigen::MatrixXd::Identity(n_, n_);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(WorkingMatrix().transpose());
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n_, n_);
    return q.rightCols(n_ - k);
  }

  double GradientScale(const Eigen::VectorXd& grad) const {
    const double g0 = n_ > 0 ? gradient0_.cwiseAbs().maxCoeff() : 0.0;
    const double g = n_ > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
    return std::max({1.0, g0, g});
  }

  void Trace(const std::string& line) const {
    if (opt_.trace) *opt_.trace << line << '\n';
  }

  // One outer iteration; returns true at optimality.
  bool Iterate(int iter) {
    const Eigen::VectorXd grad = hessian_ * x_ + gradient0_;
    const double scale = GradientScale(grad);
    const Eigen::MatrixXd z = NullSpace();

    Eigen::VectorXd step = Eigen::VectorXd::Zero(n_);
    bool ray = false;
    if (z.cols() > 0) {
      const Eigen::VectorXd reduced = z.transpose() * grad;
      if (reduced.cwiseAbs().maxCoeff() > 1e-12 * scale) {
        const Eigen::MatrixXd reduced_hessian = z.transpose() * hessian_ * z;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced_hessian);
        const Eigen::VectorXd& values = eig.eigenvalues();
        const Eigen::MatrixXd& vectors = eig.eigenvectors();
        const double cutoff = 1e-11 * std::max(hessian_scale_, values.cwiseAbs().maxCoeff());

        Eigen::VectorXd kernel_part = Eigen::VectorXd::Zero(reduced.size());
        Eigen::VectorXd newton = Eigen::VectorXd::Zero(reduced.size());
        for (int k = 0; k < values.size(); ++k) {
          const double coeff = vectors.col(k).dot(reduced);
          if (values(k) <= cutoff) {
            kernel_part += coeff * vectors.col(k);
          } else {
            newton += (coeff / values(k)) * vectors.col(k);
          }
        }
        if (kernel_part.cwiseAbs().maxCoeff() > 1e-12 * scale) {
          // Zero-curvature descent direction: move until a row blocks.
          step = -(z * kernel_part);
          ray = true;
        } else {
          step = -(z * newton);
        }
      }
    }

    const double x_scale = std::max(1.0, x_.cwiseAbs().maxCoeff());
    if (step.cwiseAbs().maxCoeff() <= 1e-14 * x_scale) {
      return UpdateMultipliers(iter, grad, scale);
    }
    TakeStep(iter, step, ray);
    return false;
  }

  bool UpdateMultipliers(int iter, const Eigen::VectorXd& grad, double scale) {
    duals_.setZero();
    if (!working_.empty()) {
      // grad F + A_W' nu = 0
      const Eigen::VectorXd nu =
          WorkingMatrix().transpose().colPivHouseholderQr().solve(-grad);
      for (std::size_t k = 0; k < working_.size(); ++k) duals_(working_[k]) = nu(k);
    }
    // Bland-style: drop the lowest-index inequality with a negative multiplier.
    int leaving = -1;
    for (int r = num_eq_; r < m_; ++r) {
      if (!InWorkingSet(r)) continue;
      const double tol = 1e-11 * scale / std::max(row_norms_(r), 1e-300);
      if (duals_(r) < -tol) {
        leaving = r;
        break;
      }
    }
    if (leaving < 0) return true;
    working_.erase(std::find(working_.begin(), working_.end(), leaving));
    Trace(fmt::format("iter {}: drop row {} ({}) dual {:.6g}", iter, leaving,
                      qp_.rows[leaving].name, duals_(leaving)));
    return false;
  }

  void TakeStep(int iter, const Eigen::VectorXd& step, bool ray) {
    const double step_norm = step.norm();
    double alpha = ray ? std::numeric_limits<double>::infinity() : 1.0;
    const Eigen::MatrixXd z = NullSpace();
    std::vector<std::pair<int, double>> candidates;
    for (int r = num_eq_; r < m_; ++r) {
      if (InWorkingSet(r)) continue;
      const double ap = qp_.constraints.row(r).dot(step);
      if (ap <= 1e-13 * row_norms_(r) * step_norm) continue;
      // Rows numerically dependent on the working set cannot block.
      if ((z.transpose() * qp_.constraints.row(r).transpose()).norm() <= 1e-9 * row_norms_(r)) {
        continue;
      }
      const double slack = std::max(0.0, qp_.rhs(r) - qp_.constraints.row(r).dot(x_));
      candidates.emplace_back(r, slack / ap);
    }
    int blocking = -1;
    double shortest = std::numeric_limits<double>::infinity();
    for (const auto& [r, ratio] : candidates) shortest = std::min(shortest, ratio);
    if (shortest <= alpha) {
      alpha = shortest;
      // Ties go to the lowest row index.
      for (const auto& [r, ratio] : candidates) {
        if (ratio <= shortest + 1e-12 * std::max(1.0, shortest)) {
          blocking = r;
          break;
        }
      }
    }
    if (!std::isfinite(alpha)) {
      std::vector<int> last = working_;
      std::sort(last.begin(), last.end());
      throw SolverError(SolverError::Kind::kUnbounded,
                        "objective is unbounded along a zero-curvature direction", last);
    }
    x_ += alpha * step;
    if (blocking >= 0) {
      working_.push_back(blocking);
      Trace(fmt::format("iter {}: step {:.6g}, add row {} ({})", iter, alpha, blocking,
                        qp_.rows[blocking].name));
    } else {
      Trace(fmt::format("iter {}: full step", iter));
    }
  }

  const QuadraticProgram& qp_;
  const SolverOptions& opt_;
  const int n_;
  const int m_;
  const int num_eq_;
  const Eigen::MatrixXd hessian_;
  const Eigen::VectorXd gradient0_;
  Eigen::VectorXd row_norms_;
  double hessian_scale_ = 0.0;

  Eigen::VectorXd x_;
  Eigen::VectorXd duals_;
  std::vector<int> working_;
};

int FindRow(const QuadraticProgram& qp, RowKind kind, int period = -1) {
  for (const ConstraintIndex& r : qp.rows) {
    if (r.kind == kind && r.period == period) return r.row;
  }
  return -1;
}

int FindColumn(const QuadraticProgram& qp, VarKind kind, int period = -1) {
  for (const VariableIndex& v : qp.variables) {
    if (v.kind == kind && v.period == period) return v.column;
  }
  return -1;
}

int FindBoundRow(const QuadraticProgram& qp, int column) {
  for (const ConstraintIndex& r : qp.rows) {
    if (r.kind == RowKind::kCapacityNonneg && r.variable == column) return r.row;
  }
  return -1;
}

// The four storage stationarity conditions, written term by term.
std::vector<NamedResidual> StorageConditions(const QuadraticProgram& qp,
                                             const Eigen::VectorXd& duals) {
  std::vector<NamedResidual> out;
  const int rte = FindRow(qp, RowKind::kRoundTrip);
  const int gamma_plus_row = FindRow(qp, RowKind::kEnergyCharge);
  const int gamma_minus_row = FindRow(qp, RowKind::kEnergyDischarge);
  const int ks = FindColumn(qp, VarKind::kStorageCapacity);
  const int e = FindColumn(qp, VarKind::kEnergyCapacity);
  if (rte < 0 || gamma_plus_row < 0 || gamma_minus_row < 0 || ks < 0 || e < 0) return out;

  const double mu = duals(rte);
  const double gamma_plus = duals(gamma_plus_row);
  const double gamma_minus = duals(gamma_minus_row);

  double kkt3 = qp.linear(ks);  // -I_sq / n
  for (int i = 0;; ++i) {
    const int balance = FindRow(qp, RowKind::kBalance, i);
    if (balance < 0) break;
    const int charge = FindColumn(qp, VarKind::kCharge, i);
    const int load = FindColumn(qp, VarKind::kConsumption, i);
    const double t = qp.constraints(balance, load);
    const double eta = qp.constraints(gamma_plus_row, charge) / t;
    const double lambda = duals(balance);
    const double sigma_plus = duals(FindRow(qp, RowKind::kChargeMax, i));
    const double sigma_minus = duals(FindRow(qp, RowKind::kDischargeMax, i));
    const double zeta_plus = duals(FindRow(qp, RowKind::kChargeMin, i));
    const double zeta_minus = duals(FindRow(qp, RowKind::kDischargeMin, i));
    const std::string period = qp.rows[balance].name.substr(std::string("balance").size());

    out.push_back({"KKT-1 dL/dq_plus" + period, -lambda * t - sigma_plus * t + zeta_plus * t +
                                                    mu * eta * t - gamma_plus * t * eta});
    out.push_back({"KKT-2 dL/dq_minus" + period,
                   lambda * t - sigma_minus * t + zeta_minus * t - mu * t - gamma_minus * t});
    kkt3 += t * (sigma_plus + sigma_minus);
  }
  // Bound multipliers of K_s >= 0 and E >= 0 vanish whenever storage is built.
  const int ks_bound = FindBoundRow(qp, ks);
  const int e_bound = FindBoundRow(qp, e);
  kkt3 += ks_bound >= 0 ? duals(ks_bound) : 0.0;
  double kkt4 = qp.linear(e) + gamma_plus + gamma_minus;
  kkt4 += e_bound >= 0 ? duals(e_bound) : 0.0;
  out.push_back({"KKT-3 dL/dK_s", kkt3});
  out.push_back({"KKT-4 dL/dE", kkt4});
  return out;
}

}  // namespace

PrimalDualSolution Solve(const QuadraticProgram& qp, const SolverOptions& options) {
  return ActiveSetSolver(qp, options).Run();
}

KktReport ComputeKktResiduals(const QuadraticProgram& qp, const PrimalDualSolution& sol) {
  if (sol.x.size() != qp.NumVariables() || sol.duals.size() != qp.NumRows()) {
    throw std::invalid_argument("ComputeKktResiduals: solution does not match program");
  }
  KktReport report;
  const Eigen::VectorXd activity = qp.constraints * sol.x - qp.rhs;
  report.stationarity =
      qp.quadratic * sol.x + qp.linear - qp.constraints.transpose() * sol.duals;
  report.max_stationarity =
      report.stationarity.size() > 0 ? report.stationarity.cwiseAbs().maxCoeff() : 0.0;
  for (int r = 0; r < qp.NumRows(); ++r) {
    if (qp.rows[r].sense == Sense::kEquality) {
      report.max_primal_infeasibility =
          std::max(report.max_primal_infeasibility, std::abs(activity(r)));
      continue;
    }
    report.max_primal_infeasibility = std::max(report.max_primal_infeasibility, activity(r));
    report.max_dual_infeasibility = std::max(report.max_dual_infeasibility, -sol.duals(r));
    report.max_complementarity =
        std::max(report.max_complementarity, std::abs(sol.duals(r) * activity(r)));
  }
  report.primal_objective = ObjectiveValue(qp, sol.x);
  report.lagrangian_value = report.primal_objective - sol.duals.dot(activity);
  report.storage_conditions = StorageConditions(qp, sol.duals);
  for (const NamedResidual& c : report.storage_conditions) {
    report.max_stationarity = std::max(report.max_stationarity, std::abs(c.value));
  }
  return report;
}

}  // namespace peakstore
