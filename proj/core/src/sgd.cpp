#include "gmmsgd/sgd.hpp"

#include <algorithm>
#include <cmath>

#include "gmmsgd/errors.hpp"
#include "gmmsgd/parallel.hpp"

namespace gmmsgd {

namespace {

const char* kModule = "sgd-lab";

int draw_class(const Eigen::ArrayXd& probs, Rng& rng) {
  const int k = static_cast<int>(probs.size());
  if (k == 1) return 0;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0;
  for (int i = 0; i < k - 1; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return k - 1;
}

void fill_normal(Eigen::Ref<Eigen::VectorXd> v, Rng& rng) {
  std::normal_distribution<double> normal;
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = normal(rng);
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return Rng(seq);
}

DataPoint sample_point(const SpectralMixture& model, int cls, Rng& rng, const TaskSpec* task) {
  if (cls < 0 || cls >= model.num_classes()) throw InvalidArgument(kModule, "class index out of range");
  DataPoint p;
  p.cls = cls;
  p.a.resize(model.d);
  fill_normal(p.a, rng);
  p.a.array() = p.a.array() * model.eigvals.row(cls).transpose().sqrt() +
                model.mean_coords.row(cls).transpose();
  if (task && task->soft_labels()) {
    const int ell = static_cast<int>(task->target.cols());
    p.y = task->target.transpose() * p.a;
    if (task->sigma > 0) {
      Eigen::VectorXd eps(ell);
      fill_normal(eps, rng);
      p.y += eps * (task->sigma / std::sqrt(static_cast<double>(model.num_classes())));
    }
  }
  return p;
}

SgdState make_sgd_state(const SpectralMixture& model, const TaskSpec& task,
                        std::uint64_t seed, const Eigen::MatrixXd& x0) {
  check_task(model, task);
  const int ell = task.width(model);
  SgdState s;
  s.rng = make_rng(seed, 0x5ad);
  if (x0.size()) {
    if (x0.rows() != model.d || x0.cols() != ell)
      throw InvalidArgument(kModule, "x0 must be d x " + std::to_string(ell));
    s.X = x0;
  } else {
    s.X = Eigen::MatrixXd::Zero(model.d, ell);
  }
  return s;
}

void sgd_step(SgdState& s, const SpectralMixture& model, const TaskSpec& task, double gamma_k) {
  const int cls = draw_class(model.probs, s.rng);
  const DataPoint pt = sample_point(model, cls, s.rng, &task);
  const Eigen::VectorXd r = s.X.transpose() * pt.a;
  Eigen::VectorXd g(r.size());
  switch (task.loss) {
    case LossFamily::BinaryLogistic:
      // class 0 carries label 1: d/dr softplus(-r) = -w(r)
      g[0] = cls == 0 ? -logistic_weight(r[0]) : logistic_weight(-r[0]);
      break;
    case LossFamily::CrossEntropy: {
      const double mx = r.maxCoeff();
      g = (r.array() - mx).exp();
      g /= g.sum();
      g[cls] -= 1.0;
      break;
    }
    case LossFamily::Mse:
      g = r - pt.y;
      break;
  }
  if (gamma_k != 0) s.X.noalias() -= (gamma_k / model.d) * pt.a * g.transpose();
  ++s.k;
  const double nrm = s.X.norm();
  if (!std::isfinite(nrm) || nrm > 1e150)
    throw NumericalError(kModule, "SGD iterate overflow, |X|=" + std::to_string(nrm),
                         static_cast<double>(s.k) / model.d, s.k);
}

CurveRow iterate_observables(const Eigen::MatrixXd& X, double t, const SpectralMixture& model,
                             const TaskSpec& task, const ZeroOnePartition* partition) {
  const int k = model.num_classes();
  CurveRow r;
  r.t = t;
  switch (task.loss) {
    case LossFamily::BinaryLogistic: {
      const Eigen::ArrayXd x = X.col(0).array();
      const Eigen::ArrayXd x2 = x.square();
      const double m0 = (x * model.mean_coords.row(0).transpose()).sum();
      const double m1 = (x * model.mean_coords.row(1).transpose()).sum();
      r.m = m0;
      r.V = x2.sum();
      for (int i = 0; i < k; ++i) r.B.push_back((model.eigvals.row(i).transpose() * x2).sum());
      r.loss = model.probs[0] * expected_softplus(-m0, r.B[0], task.quadrature_nodes) +
               model.probs[1] * expected_softplus(m1, r.B[1], task.quadrature_nodes);
      if (partition) {
        std::array<double, 4> mb{}, vb{};
        for (int b = 0; b < 4; ++b) {
          for (int rho : partition->blocks[b]) {
            mb[b] += x[rho] * model.mean_coords(0, rho);
            vb[b] += x2[rho];
          }
        }
        r.m_block = mb;
        r.v_block = vb;
      }
      break;
    }
    case LossFamily::CrossEntropy: {
      const CrossEntropyOracle oracle(k, task.softmax);
      r.V = X.squaredNorm();
      for (int i = 0; i < k; ++i) {
        const Eigen::MatrixXd Bi =
            X.transpose() * model.eigvals.row(i).transpose().matrix().asDiagonal() * X;
        const Eigen::VectorXd mi = X.transpose() * model.mean_coords.row(i).transpose().matrix();
        r.B.push_back(Bi.trace());
        r.m += model.probs[i] * mi[i];
        r.loss += model.probs[i] * oracle.evaluate(i, Bi, mi).value;
      }
      break;
    }
    case LossFamily::Mse: {
      const Eigen::MatrixXd delta = X - task.target;
      const int ell = static_cast<int>(delta.cols());
      const double floor = 0.5 * task.sigma * task.sigma * ell / k;
      r.V = delta.squaredNorm();
      double msq = 0;
      const Eigen::ArrayXd rowsq = delta.rowwise().squaredNorm().array();
      for (int i = 0; i < k; ++i) {
        const double b = (model.eigvals.row(i).transpose() * rowsq).sum();
        const Eigen::VectorXd mi = delta.transpose() * model.mean_coords.row(i).transpose().matrix();
        r.B.push_back(b);
        msq += model.probs[i] * mi.squaredNorm();
        r.loss += model.probs[i] * (0.5 * b + 0.5 * mi.squaredNorm() + floor);
      }
      r.m = std::sqrt(msq);
      break;
    }
  }
  r.align = r.V > 0 ? r.m / std::sqrt(r.V) : 0.0;
  return r;
}

PerModeStats per_mode_stats(const Eigen::VectorXd& x, const SpectralMixture& model) {
  PerModeStats s;
  const double d = model.d;
  s.V = d * x.array().square();
  s.M = d * x.array() * model.mean_coords.row(0).transpose();
  return s;
}

LearningCurve run_sgd(const SpectralMixture& model, const TaskSpec& task,
                      const LearningRateSchedule& gamma, const std::vector<double>& grid,
                      std::uint64_t seed, const SgdOptions& opts) {
  check_grid(grid);
  const int d = model.d;
  const double T = grid.back();
  const long total = static_cast<long>(std::floor(T * d));
  if (total > opts.max_steps)
    throw InvalidArgument(kModule, "T*d = " + std::to_string(total) + " exceeds the step budget");
  if (opts.partition && task.loss != LossFamily::BinaryLogistic)
    throw InvalidArgument(kModule, "subspace projections need a binary logistic task");

  SgdState s = make_sgd_state(model, task, seed, opts.x0);
  LearningCurve curve;
  curve.meta.kind = "sgd";
  curve.meta.seed = seed;
  curve.meta.model_hash = model_hash(model);
  curve.meta.gamma = gamma.describe();
  curve.meta.d = d;
  const ZeroOnePartition* part = opts.partition ? &*opts.partition : nullptr;
  for (double t : grid) {
    const long target = static_cast<long>(std::floor(t * d + 1e-9));
    while (s.k < target) sgd_step(s, model, task, gamma(static_cast<double>(s.k) / d));
    curve.rows.push_back(iterate_observables(s.X, t, model, task, part));
    if (opts.observer) opts.observer(t, s);
  }
  return curve;
}

ConcentrationTable concentration_sweep(const ConcentrationSpec& spec) {
  if (spec.dims.empty()) throw InvalidArgument(kModule, "concentration sweep needs dimensions");
  if (spec.seeds.empty()) throw InvalidArgument(kModule, "concentration sweep needs seeds");
  const std::size_t nd = spec.dims.size(), ns = spec.seeds.size();
  std::vector<SpectralMixture> models;
  std::vector<TaskSpec> tasks;
  for (int d : spec.dims) {
    models.push_back(spec.make_model(d));
    tasks.push_back(spec.make_task ? spec.make_task(models.back()) : TaskSpec{});
  }
  std::vector<LearningCurve> odes(nd);
  parallel_for(nd, spec.workers, [&](std::size_t j) {
    odes[j] = integrate_task(models[j], tasks[j], spec.gamma, spec.grid, spec.solver);
  });
  std::vector<double> err(nd * ns);
  parallel_for(nd * ns, spec.workers, [&](std::size_t job) {
    const std::size_t j = job / ns, s = job % ns;
    const LearningCurve sgd = run_sgd(models[j], tasks[j], spec.gamma, spec.grid, spec.seeds[s]);
    err[job] = compare(sgd, odes[j], Metric::Sup).at("loss");
  });

  ConcentrationTable table;
  for (std::size_t j = 0; j < nd; ++j) {
    ConcentrationRow row;
    row.d = spec.dims[j];
    row.errors.assign(err.begin() + j * ns, err.begin() + (j + 1) * ns);
    std::vector<double> sorted = row.errors;
    std::sort(sorted.begin(), sorted.end());
    row.median = ns % 2 ? sorted[ns / 2] : 0.5 * (sorted[ns / 2 - 1] + sorted[ns / 2]);
    table.rows.push_back(std::move(row));
  }
  if (nd >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& row : table.rows) {
      if (!(row.median > 0)) continue;
      const double x = std::log(static_cast<double>(row.d)), y = std::log(row.median);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++n;
    }
    if (n >= 2 && n * sxx - sx * sx > 0) table.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return table;
}

}  // namespace gmmsgd
