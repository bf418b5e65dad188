#include "gmmsgd/spectral_model.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "gmmsgd/errors.hpp"
#include "gmmsgd/hashing.hpp"

namespace gmmsgd {

namespace {

const char* kModule = "spectral-model";

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidArgument(kModule, msg);
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

}  // namespace

bool SpectralMixture::is_symmetric_binary(double tol) const {
  if (num_classes() != 2) return false;
  return ((mean_coords.row(0) + mean_coords.row(1)).abs() <= tol).all();
}

SpectralMixture build_power_law(int d, const std::vector<double>& alphas,
                                double beta, double norm) {
  require(d >= 2, "power law needs d >= 2");
  require(alphas.size() == 1 || alphas.size() == 2,
          "power law supports one or two classes");
  for (double a : alphas)
    require(std::isfinite(a) && a >= 0, "alpha must be >= 0, got " + fmt_double(a));
  require(std::isfinite(beta) && beta >= 0, "beta must be >= 0, got " + fmt_double(beta));
  require(std::isfinite(norm) && norm >= 0, "norm must be >= 0");

  const int classes = static_cast<int>(alphas.size());
  SpectralMixture m;
  m.d = d;
  m.probs = Eigen::ArrayXd::Constant(classes, 1.0 / classes);
  m.eigvals.resize(classes, d);
  m.mean_coords.resize(classes, d);

  Eigen::ArrayXd mu_sq(d);
  for (int rho = 0; rho < d; ++rho) {
    const double x = static_cast<double>(rho + 1) / d;
    for (int i = 0; i < classes; ++i) m.eigvals(i, rho) = std::pow(x, alphas[i]);
    mu_sq[rho] = std::pow(x, beta) / d;
  }
  const Eigen::ArrayXd coords = (mu_sq * (norm / mu_sq.sum())).sqrt();
  m.mean_coords.row(0) = coords.transpose();
  if (classes == 2) m.mean_coords.row(1) = -coords.transpose();
  return m;
}

SpectralMixture build_identity(int d, double mean_norm_sq) {
  return build_power_law(d, {0.0, 0.0}, 0.0, mean_norm_sq);
}

ZeroOneModel build_zero_one(int d, const std::array<double, 4>& fractions,
                            const std::array<double, 4>& mean_mass,
                            std::uint64_t seed) {
  require(d >= 1, "zero-one model needs d >= 1");
  double total = 0;
  for (double f : fractions) {
    require(std::isfinite(f) && f >= 0, "block fractions must be >= 0");
    total += f;
  }
  require(std::abs(total - 1.0) < 1e-9, "block fractions must sum to 1");
  for (double mm : mean_mass)
    require(std::isfinite(mm) && mm >= 0, "block mean mass must be >= 0");

  std::array<int, 4> sizes{};
  int used = 0;
  for (int b = 0; b < 4; ++b) {
    const double exact = fractions[b] * d;
    sizes[b] = static_cast<int>(std::lround(exact));
    require(std::abs(exact - sizes[b]) < 1e-6,
            "d=" + std::to_string(d) + " is not divisible by block fraction " +
                fmt_double(fractions[b]));
    used += sizes[b];
  }
  require(used == d, "block sizes do not add up to d");
  for (int b = 0; b < 4; ++b) {
    require(!(sizes[b] == 0 && mean_mass[b] > 0),
            std::string("block I") + kBlockNames[b] +
                " is empty but has positive requested mean mass");
  }

  ZeroOneModel out;
  SpectralMixture& m = out.model;
  ZeroOnePartition& part = out.partition;
  m.d = d;
  m.probs = Eigen::ArrayXd::Constant(2, 0.5);
  m.eigvals = ClassModeArray::Zero(2, d);
  m.mean_coords = ClassModeArray::Zero(2, d);
  part.block_of.resize(d);
  part.mean_mass = mean_mass;

  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 0x2e01u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;

  int rho = 0;
  for (int b = 0; b < 4; ++b) {
    const double lam1 = (b == 2 || b == 3) ? 1.0 : 0.0;  // j
    const double lam2 = (b == 1 || b == 3) ? 1.0 : 0.0;  // k
    Eigen::ArrayXd dir(sizes[b]);
    for (int k = 0; k < sizes[b]; ++k) dir[k] = normal(rng);
    const double len = std::sqrt(dir.square().sum());
    if (sizes[b] > 0 && len > 0) dir *= std::sqrt(mean_mass[b]) / len;
    for (int k = 0; k < sizes[b]; ++k, ++rho) {
      part.blocks[b].push_back(rho);
      part.block_of[rho] = static_cast<Block>(b);
      m.eigvals(0, rho) = lam1;
      m.eigvals(1, rho) = lam2;
      m.mean_coords(0, rho) = dir[k];
      m.mean_coords(1, rho) = -dir[k];
    }
  }
  return out;
}

SpectralMixture build_multiclass_power_law(int d, int classes, double alpha,
                                           double mean_norm_sq,
                                           std::uint64_t seed,
                                           bool orthogonalize) {
  require(d >= 2, "multiclass model needs d >= 2");
  require(classes >= 1, "need at least one class");
  require(!orthogonalize || classes <= d, "cannot orthogonalize more means than d");
  require(std::isfinite(alpha) && alpha >= 0, "alpha must be >= 0, got " + fmt_double(alpha));
  require(std::isfinite(mean_norm_sq) && mean_norm_sq >= 0, "mean_norm_sq must be >= 0");

  SpectralMixture m;
  m.d = d;
  m.probs = Eigen::ArrayXd::Constant(classes, 1.0 / classes);
  m.eigvals.resize(classes, d);
  for (int rho = 0; rho < d; ++rho)
    m.eigvals.col(rho).setConstant(std::pow(static_cast<double>(rho + 1) / d, alpha));

  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 0x3c1au};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd means(classes, d);
  for (int i = 0; i < classes; ++i)
    for (int rho = 0; rho < d; ++rho) means(i, rho) = normal(rng);

  if (orthogonalize) {
    // modified Gram-Schmidt, twice for good measure
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < classes; ++i) {
        for (int j = 0; j < i; ++j)
          means.row(i) -= means.row(i).dot(means.row(j)) * means.row(j);
        means.row(i).normalize();
      }
    }
  }
  for (int i = 0; i < classes; ++i) {
    const double n = means.row(i).norm();
    if (n > 0) means.row(i) *= std::sqrt(mean_norm_sq) / n;
  }
  m.mean_coords = means.array();
  return m;
}

std::vector<Violation> validate(const SpectralMixture& model,
                                const ValidationLimits& limits) {
  std::vector<Violation> out;
  auto add = [&](const char* assumption, std::string msg) {
    out.push_back({assumption, std::move(msg)});
  };
  const int k = model.num_classes();
  if (model.d <= 0) add("well-formed", "dimension must be positive");
  if (k <= 0) {
    add("well-formed", "at least one class required");
    return out;
  }
  if (model.eigvals.rows() != k || model.eigvals.cols() != model.d ||
      model.mean_coords.rows() != k || model.mean_coords.cols() != model.d) {
    add("well-formed", "eigenvalue/mean arrays must be classes x d");
    return out;
  }
  if (!model.probs.allFinite() || !model.eigvals.allFinite() ||
      !model.mean_coords.allFinite())
    add("well-formed", "non-finite entries");

  if ((model.probs < 0).any()) add("well-formed", "probabilities must be nonnegative");
  const double psum = model.probs.sum();
  if (std::abs(psum - 1.0) > limits.prob_tol)
    add("well-formed", "probabilities do not sum to 1 (sum=" + fmt_double(psum) + ")");

  if ((model.eigvals < 0).any())
    add("scaling", "covariance eigenvalues must be nonnegative");
  const double lmax = model.eigvals.maxCoeff();
  if (lmax > limits.op_norm_bound)
    add("scaling", "covariance operator norm " + fmt_double(lmax) +
                            " exceeds bound " + fmt_double(limits.op_norm_bound));

  double budget = 0;
  for (int i = 0; i < k; ++i) budget += model.probs[i] * model.mean_norm_sq(i);
  if (budget > limits.mean_budget)
    add("scaling", "sum_i p_i |mu_i|^2 = " + fmt_double(budget) +
                            " exceeds mean budget " + fmt_double(limits.mean_budget));

  if (k > limits.fixed_class_cap) {
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        const double ip = (model.mean_coords.row(i) * model.mean_coords.row(j)).sum();
        if (std::abs(ip) > limits.orth_tol) {
          add("scaling",
              "means must be orthogonal when classes > " +
                  std::to_string(limits.fixed_class_cap) + ": <mu_" +
                  std::to_string(i) + ", mu_" + std::to_string(j) +
                  "> = " + fmt_double(ip));
          return out;
        }
      }
    }
  }
  return out;
}

void write_model_csv(const SpectralMixture& model, std::ostream& out) {
  const int k = model.num_classes();
  out << "rho";
  for (int i = 0; i < k; ++i) out << ",lambda" << i + 1;
  for (int i = 0; i < k; ++i) out << ",mu" << i + 1;
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int rho = 0; rho < model.d; ++rho) {
    out << rho;
    for (int i = 0; i < k; ++i) out << ',' << model.eigvals(i, rho);
    for (int i = 0; i < k; ++i) out << ',' << model.mean_coords(i, rho);
    out << '\n';
  }
}

std::string model_hash(const SpectralMixture& model) {
  std::string bytes;
  auto put = [&bytes](const void* p, std::size_t n) {
    bytes.append(static_cast<const char*>(p), n);
  };
  put(&model.d, sizeof model.d);
  put(model.probs.data(), sizeof(double) * model.probs.size());
  put(model.eigvals.data(), sizeof(double) * model.eigvals.size());
  put(model.mean_coords.data(), sizeof(double) * model.mean_coords.size());
  return sha256_hex(bytes).substr(0, 16);
}

}  // namespace gmmsgd
