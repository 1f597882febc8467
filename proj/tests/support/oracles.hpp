#pragma once
// Reference implementations used as test oracles. They work on plain vectors and
// exhaustive search so that they share no code path with the library.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace mbtest {

using Rows = std::vector<std::vector<double>>;
/// rankings[a] lists players from most to least preferred by arm a.
using Rankings = std::vector<std::vector<int>>;
/// assignment[p] = arm or -1.
using Assignment = std::vector<int>;

Rows to_rows(const Eigen::MatrixXd& m);
Eigen::MatrixXd to_matrix(const Rows& rows);

/// Every injective partial assignment of n players to k arms.
std::vector<Assignment> all_assignments(int n, int k);

bool blocks(const Rows& u, const Rankings& rankings, const Assignment& mu, int player, int arm, double eps);
std::vector<std::pair<int, int>> blocking(const Rows& u, const Rankings& rankings, const Assignment& mu, double eps);
std::vector<Assignment> stable_set(const Rows& u, const Rankings& rankings, double eps);

/// Stable matching that is weakly best for every player at once, if one exists.
std::optional<Assignment> player_optimal(const Rows& u, const Rankings& rankings);
/// Per player, best utility over the eps-stable set (0 for unmatched).
std::vector<double> best_share(const Rows& u, const Rankings& rankings, double eps);

std::size_t max_matching_size(int n, int k, const std::vector<std::pair<int, int>>& edges);

double min_pair_gap(const Rows& u);

/// (lambda I + X^T X)^{-1} X^T y by a QR solve.
Eigen::VectorXd ridge_solution(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& ys, double lambda);

double radius_formula(double r, int d, double t, double b_x, double lambda, double b_theta, double delta);

/// P(min pairwise gap <= x) for independent uniforms on [0, 1/2], [1/4, 3/4] and
/// [1/2, 1], by integrating the excluded length of the third coordinate over a
/// midpoint grid on the first two.
double staggered_gap_cdf_numeric(double x, int grid = 2000);

/// Hand-rolled generators.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  Rows utilities(int n, int k, double lo = 0.0, double hi = 1.0);
  /// Rows whose sorted entries, and the unmatched value 0, differ by at least `gap`.
  Rows separated_utilities(int n, int k, double gap);
  Rankings rankings(int k, int n);
  std::vector<std::pair<int, int>> edges(int n, int k, double density);
  Eigen::VectorXd unit_vector(int d);
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace mbtest
