#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gmmsgd {

/// Row-major 2-d array; row i holds one class, column rho one eigenmode.
using ClassModeArray =
    Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A mixture of Gaussian classes whose covariances share one eigenbasis.
///
/// Everything is stored in eigencoordinates: eigvals(i, rho) is the variance
/// of class i along the rho-th shared eigenvector and mean_coords(i, rho) is
/// the projection of the class mean on that eigenvector. The dynamics only
/// ever need these two arrays and the class probabilities.
struct SpectralMixture {
  int d = 0;
  Eigen::ArrayXd probs;
  ClassModeArray eigvals;
  ClassModeArray mean_coords;

  int num_classes() const { return static_cast<int>(probs.size()); }

  /// Squared mean projection mean_coords(i, rho)^2.
  double mean_sq(int cls, int rho) const {
    const double c = mean_coords(cls, rho);
    return c * c;
  }
  double mean_norm_sq(int cls) const {
    return mean_coords.row(cls).square().sum();
  }
  double trace(int cls) const { return eigvals.row(cls).sum(); }

  /// True when there are two classes with means +mu and -mu.
  bool is_symmetric_binary(double tol = 1e-12) const;
};

enum class Block : std::uint8_t { k00 = 0, k01 = 1, k10 = 2, k11 = 3 };

inline constexpr std::array<const char*, 4> kBlockNames = {"00", "01", "10",
                                                           "11"};

/// Index sets I_jk of the zero-one model (lambda^(1) = j, lambda^(2) = k).
struct ZeroOnePartition {
  std::array<std::vector<int>, 4> blocks;
  std::array<double, 4> mean_mass{};
  std::vector<Block> block_of;  // one entry per mode

  const std::vector<int>& operator[](Block b) const {
    return blocks[static_cast<int>(b)];
  }
};

struct ZeroOneModel {
  SpectralMixture model;
  ZeroOnePartition partition;
};

/// Power-law spectrum lambda_rho = (rho/d)^alpha_i with mean profile
/// (1/d)(rho/d)^beta rescaled so that ||mu||^2 = norm. One alpha per class;
/// one or two classes (two means are +mu, -mu).
SpectralMixture build_power_law(int d, const std::vector<double>& alphas,
                                double beta, double norm);

/// K_1 = K_2 = I with a flat mean of squared norm `mean_norm_sq`.
SpectralMixture build_identity(int d, double mean_norm_sq);

/// Zero-one model with contiguous blocks I00, I01, I10, I11 of sizes
/// d * fractions[b] and mean coordinates drawn uniformly on the sphere of each
/// block with squared radius mean_mass[b].
ZeroOneModel build_zero_one(int d, const std::array<double, 4>& fractions,
                            const std::array<double, 4>& mean_mass,
                            std::uint64_t seed);

/// Many classes with a common power-law spectrum and random Gaussian means,
/// optionally Gram-Schmidt orthogonalized, each rescaled to mean_norm_sq.
SpectralMixture build_multiclass_power_law(int d, int classes, double alpha,
                                           double mean_norm_sq,
                                           std::uint64_t seed,
                                           bool orthogonalize = true);

struct ValidationLimits {
  double op_norm_bound = 1.0;    // max eigenvalue
  double mean_budget = 4.0;      // sum_i p_i ||mu_i||^2
  int fixed_class_cap = 8;       // above this, means must be orthogonal
  double prob_tol = 1e-12;
  double orth_tol = 1e-10;
};

struct Violation {
  std::string assumption;
  std::string message;
};

std::vector<Violation> validate(const SpectralMixture& model,
                                const ValidationLimits& limits = {});

/// Eigenvalues and mean coordinates, one row per mode.
void write_model_csv(const SpectralMixture& model, std::ostream& out);

/// Short hex digest of the model arrays; used to tag curves.
std::string model_hash(const SpectralMixture& model);

}  // namespace gmmsgd
