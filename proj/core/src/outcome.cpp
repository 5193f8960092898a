#include "polopt/outcome.hpp"

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "polopt/errors.hpp"

namespace polopt {

namespace {

// Weighted least squares over a (possibly nonlinear) mean function:
// minimize sum_i weight_i * (c_i - g(beta; i))^2.
struct LsSpec {
  std::size_t n = 0;
  Eigen::Index dim = 0;
  std::function<double(const Eigen::VectorXd&, std::size_t)> predict;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, std::size_t)> grad;
  std::function<double(std::size_t)> weight;
  std::function<double(std::size_t)> target;
  bool linear = false;
  Eigen::VectorXd init;
};

Eigen::VectorXd solve_linear(const LsSpec& spec, FitReport& report) {
  Eigen::MatrixXd X(spec.n, spec.dim);
  Eigen::VectorXd y(spec.n);
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(spec.dim);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double sw = std::sqrt(spec.weight(i));
    X.row(static_cast<Eigen::Index>(i)) = sw * spec.grad(beta0, i).transpose();
    y[static_cast<Eigen::Index>(i)] = sw * spec.target(i);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < spec.dim) {
    throw SingularDesignError(
        "least squares: rank-deficient design matrix (rank " +
        std::to_string(qr.rank()) + " < " + std::to_string(spec.dim) + ")");
  }
  Eigen::VectorXd beta = qr.solve(y);
  report.converged = true;
  report.iterations = 1;
  report.objective = (y - X * beta).squaredNorm() / static_cast<double>(spec.n);
  report.gradient_norm =
      (X.transpose() * (y - X * beta)).norm() / static_cast<double>(spec.n);
  return beta;
}

Eigen::VectorXd solve_lm(const LsSpec& spec, FitReport& report) {
  const int max_iter = 200;
  const double tol = 1e-9;
  Eigen::VectorXd beta =
      spec.init.size() == spec.dim ? spec.init : Eigen::VectorXd::Zero(spec.dim);
  double lambda = 1e-3;

  auto ssr = [&](const Eigen::VectorXd& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < spec.n; ++i) {
      double r = spec.target(i) - spec.predict(b, i);
      s += spec.weight(i) * r * r;
    }
    return s;
  };

  double f = ssr(beta);
  for (int iter = 1; iter <= max_iter; ++iter) {
    Eigen::MatrixXd JtJ = Eigen::MatrixXd::Zero(spec.dim, spec.dim);
    Eigen::VectorXd Jtr = Eigen::VectorXd::Zero(spec.dim);
    for (std::size_t i = 0; i < spec.n; ++i) {
      Eigen::VectorXd g = spec.grad(beta, i);
      double r = spec.target(i) - spec.predict(beta, i);
      double w = spec.weight(i);
      JtJ += w * g * g.transpose();
      Jtr += w * r * g;
    }
    report.iterations = iter;
    report.gradient_norm = Jtr.norm() / static_cast<double>(spec.n);
    if (report.gradient_norm < tol) {
      report.converged = true;
      break;
    }
    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      Eigen::VectorXd step = A.ldlt().solve(Jtr);
      Eigen::VectorXd cand = beta + step;
      double fc = ssr(cand);
      if (std::isfinite(fc) && fc < f) {
        beta = cand;
        double rel = step.norm() / std::max(1.0, beta.norm());
        f = fc;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (rel < tol) {
          report.converged = true;
          iter = max_iter;  // terminate outer loop after this improvement
        }
        break;
      }
      lambda *= 4.0;
    }
    if (!stepped) {
      report.converged = report.gradient_norm < 1e-6;
      break;
    }
  }
  if (!beta.allFinite()) {
    throw DivergenceError("least squares: parameters diverged");
  }
  report.objective = f / static_cast<double>(spec.n);
  return beta;
}

Eigen::VectorXd solve_ls(const LsSpec& spec, FitReport& report) {
  if (spec.n == 0) throw EmptyInputError("least squares: empty dataset");
  if (spec.n < static_cast<std::size_t>(spec.dim)) {
    throw EmptyInputError("least squares: fewer rows than parameters");
  }
  return spec.linear ? solve_linear(spec, report) : solve_lm(spec, report);
}

Eigen::VectorXd nonlinear_init(const BasisSpec& basis,
                               const ObservationalDataset& data) {
  Eigen::VectorXd init = Eigen::VectorXd::Zero(basis.dim());
  if (basis.kind == BasisKind::ExponentialCurve) {
    double mean = 0.0;
    for (const auto& r : data.rows) mean += r.c;
    mean /= static_cast<double>(data.rows.size());
    init[0] = mean;
    init[1] = 1.0;
  }
  return init;
}

}  // namespace

double OutcomeModel::predict(int t, double w) const {
  double mu = basis.mean(theta, t, w);
  if (estimator == EstimatorKind::GeneralizedRegressionDR) {
    mu += t == 1 ? eps1 / propensity.e1(w) : eps0 / propensity.e0(w);
  }
  return mu;
}

OutcomeModel fit_dm(const ObservationalDataset& data, const BasisSpec& basis,
                    const Eigen::VectorXd& init) {
  basis.validate();
  OutcomeModel model;
  model.estimator = EstimatorKind::DirectMethod;
  model.basis = basis;

  LsSpec spec;
  spec.n = data.rows.size();
  spec.dim = static_cast<Eigen::Index>(basis.dim());
  spec.linear = basis.linear_in_parameters();
  spec.init = init.size() == spec.dim ? init : nonlinear_init(basis, data);
  spec.predict = [&](const Eigen::VectorXd& b, std::size_t i) {
    return basis.mean(b, data.rows[i].t, data.rows[i].w);
  };
  spec.grad = [&](const Eigen::VectorXd& b, std::size_t i) {
    return basis.gradient(b, data.rows[i].t, data.rows[i].w);
  };
  spec.weight = [](std::size_t) { return 1.0; };
  spec.target = [&](std::size_t i) { return data.rows[i].c; };
  model.theta = solve_ls(spec, model.report);
  return model;
}

OutcomeModel fit_wdm(const ObservationalDataset& data, const BasisSpec& basis,
                     const PropensityModel& propensity,
                     const Eigen::VectorXd& init) {
  basis.validate();
  OutcomeModel model;
  model.estimator = EstimatorKind::WeightedDirectMethod;
  model.basis = basis;
  model.propensity = propensity;
  model.has_propensity = true;

  LsSpec spec;
  spec.n = data.rows.size();
  spec.dim = static_cast<Eigen::Index>(basis.dim());
  spec.linear = basis.linear_in_parameters();
  spec.init = init.size() == spec.dim ? init : nonlinear_init(basis, data);
  spec.predict = [&](const Eigen::VectorXd& b, std::size_t i) {
    return basis.mean(b, data.rows[i].t, data.rows[i].w);
  };
  spec.grad = [&](const Eigen::VectorXd& b, std::size_t i) {
    return basis.gradient(b, data.rows[i].t, data.rows[i].w);
  };
  spec.weight = [&](std::size_t i) {
    return 1.0 / propensity.e(data.rows[i].t, data.rows[i].w);
  };
  spec.target = [&](std::size_t i) { return data.rows[i].c; };
  model.theta = solve_ls(spec, model.report);
  return model;
}

OutcomeModel fit_grdr(const ObservationalDataset& data, const BasisSpec& basis,
                      const PropensityModel& propensity,
                      const Eigen::VectorXd& init) {
  basis.validate();
  OutcomeModel model;
  model.estimator = EstimatorKind::GeneralizedRegressionDR;
  model.basis = basis;
  model.propensity = propensity;
  model.has_propensity = true;

  const Eigen::Index p = static_cast<Eigen::Index>(basis.dim());
  auto clever = [&](std::size_t i) -> Eigen::Vector2d {
    const auto& r = data.rows[i];
    return {static_cast<double>(r.t) / propensity.e1(r.w),
            static_cast<double>(1 - r.t) / propensity.e0(r.w)};
  };

  LsSpec spec;
  spec.n = data.rows.size();
  spec.dim = p + 2;
  spec.linear = basis.linear_in_parameters();
  spec.init = Eigen::VectorXd::Zero(p + 2);
  spec.init.head(p) = init.size() == p ? init : nonlinear_init(basis, data);
  spec.predict = [&](const Eigen::VectorXd& b, std::size_t i) {
    Eigen::Vector2d cc = clever(i);
    return basis.mean(b.head(p), data.rows[i].t, data.rows[i].w) +
           b[p] * cc[0] + b[p + 1] * cc[1];
  };
  spec.grad = [&](const Eigen::VectorXd& b, std::size_t i) {
    Eigen::VectorXd g(p + 2);
    g.head(p) = basis.gradient(b.head(p), data.rows[i].t, data.rows[i].w);
    Eigen::Vector2d cc = clever(i);
    g[p] = cc[0];
    g[p + 1] = cc[1];
    return g;
  };
  spec.weight = [](std::size_t) { return 1.0; };
  spec.target = [&](std::size_t i) { return data.rows[i].c; };

  Eigen::VectorXd beta = solve_ls(spec, model.report);
  model.theta = beta.head(p);
  model.eps1 = beta[p];
  model.eps0 = beta[p + 1];
  return model;
}

OutcomeModel fit_outcome(EstimatorKind estimator,
                         const ObservationalDataset& data,
                         const BasisSpec& basis,
                         const PropensityModel& propensity,
                         const Eigen::VectorXd& init) {
  switch (estimator) {
    case EstimatorKind::DirectMethod:
      return fit_dm(data, basis, init);
    case EstimatorKind::WeightedDirectMethod:
      return fit_wdm(data, basis, propensity, init);
    case EstimatorKind::GeneralizedRegressionDR:
      return fit_grdr(data, basis, propensity, init);
  }
  throw ConfigError("unknown estimator kind");
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::DirectMethod:
      return "dm";
    case EstimatorKind::WeightedDirectMethod:
      return "wdm";
    case EstimatorKind::GeneralizedRegressionDR:
      return "grdr";
  }
  throw ConfigError("unknown estimator kind");
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "dm") return EstimatorKind::DirectMethod;
  if (name == "wdm") return EstimatorKind::WeightedDirectMethod;
  if (name == "grdr") return EstimatorKind::GeneralizedRegressionDR;
  throw ConfigError("unknown estimator kind: " + name);
}

}  // namespace polopt
