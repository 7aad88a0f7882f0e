#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "trackcert/certify.hpp"
#include "trackcert/schedule.hpp"

namespace trackcert {

enum class DriftPolicy { AlignedAway, FixedDirection, RandomUnit };

enum class ErrorPolicy {
  None,
  AbsoluteWorstCase,  // ||v|| = c
  RelativeWorstCase,  // ||v|| = delta ||grad||
  IidGaussian,        // zero mean, E||v||^2 = c^2
  Mixed,              // ||v||^2 = delta^2 ||F(x)||^2 + c^2, worst-case direction
};

DriftPolicy parse_drift_policy(const std::string& s);
ErrorPolicy parse_error_policy(const std::string& s);

// Per-trial generator: splitmix64(seed ^ index) seeds a Mersenne twister.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index);

// Moves a minimizer by exactly sigma per step.
struct DriftModel {
  DriftPolicy policy = DriftPolicy::AlignedAway;
  Eigen::VectorXd direction;  // used by FixedDirection

  // away_from is the point the minimizer should move away from (AlignedAway).
  Eigen::VectorXd next(const Eigen::VectorXd& x_star, const Eigen::VectorXd& away_from, double sigma,
                       std::mt19937_64& rng) const;
};

// f_t(x) = 1/2 (x - x*_t)^T H (x - x*_t) with spec(H) inside [m, L].
struct DriftingQuadratic {
  Eigen::MatrixXd H;
  Eigen::VectorXd x_star0;
  DriftModel drift;

  int dim() const { return static_cast<int>(H.rows()); }

  // Random orthogonal eigenbasis; the spectrum contains both m and L. In one
  // dimension the curvature is whichever of m, L maximizes |1 - alpha h|.
  static DriftingQuadratic random(int p, double m, double L, double alpha, DriftPolicy drift, std::mt19937_64& rng);
  // Throws BadConfig unless spec(H) lies in [m, L].
  void check_spectrum(double m, double L) const;
};

// F(x) = A (x - x*_t), A = m I + b J with J a block rotation; Lipschitz constant sqrt(m^2 + b^2).
struct MonotoneField {
  Eigen::MatrixXd A;
  Eigen::VectorXd x_star0;
  DriftModel drift;

  int dim() const { return static_cast<int>(A.rows()); }

  // p must be even (p = 1 gives the scalar field m).
  static MonotoneField rotation(int p, double m, double L, DriftPolicy drift, std::mt19937_64& rng);
};

// f_t = (1/n) sum_i 1/2 (x - x*_t - s_t d_i)^T H (x - x*_t - s_t d_i) with sum_i d_i = 0,
// scaled so that sqrt((1/n) sum_i ||grad f_i(x*_t)||^2) = G_t.
struct FiniteSumInstance {
  DriftingQuadratic base;
  std::vector<Eigen::VectorXd> offsets;  // unit-G directions d_i

  static FiniteSumInstance random(int p, int n, double m, double L, double alpha, DriftPolicy drift,
                                  std::mt19937_64& rng);
};

// f_t(x) = 1/2 (x - b_t)^T H (x - b_t) + lambda1 ||x||_1 with diagonal H.
// The track drives x*_t; b_t is recovered from first-order optimality.
struct CompositeQuadratic {
  Eigen::VectorXd h;  // diagonal of H
  double lambda1 = 0.0;
  Eigen::VectorXd x_star0;
  DriftModel drift;

  int dim() const { return static_cast<int>(h.size()); }
  double Lg() const;

  static CompositeQuadratic random(int p, double m, double L, double Lg, DriftPolicy drift, std::mt19937_64& rng);
  Eigen::VectorXd offset_for(const Eigen::VectorXd& x_star) const;
  double objective(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const;
};

double soft_threshold(double x, double k);

struct Trajectory {
  std::vector<Eigen::VectorXd> x;       // x_0..x_T (empty unless recorded)
  std::vector<Eigen::VectorXd> x_star;  // x*_0..x*_T (empty unless recorded)
  std::vector<double> e;                // ||x_t - x*_t||^2
  std::vector<double> gaps;             // f_t(x_t) - f_t(x*_t)
  std::vector<double> G;                // finite-sum gradient spread per step
  std::uint64_t seed = 0;
};

// Iterate x_{t+1} = x_t - alpha_t (grad f_t(x_t) + v_t).
Trajectory run_inexact_ogd(const DriftingQuadratic& problem, const ParamTrack& track, ErrorPolicy policy,
                           const Eigen::VectorXd& x0, std::uint64_t seed, bool record = true);
// Iterate x_{t+1} = x_t - alpha_t (F_t(x_t) + v_t); policy None or Mixed.
Trajectory run_vi_ogd(const MonotoneField& field, const ParamTrack& track, ErrorPolicy policy,
                      const Eigen::VectorXd& x0, std::uint64_t seed, bool record = true);
// Iterate x_{t+1} = x_t - alpha_t grad f^{(i_t)}(x_t), i_t uniform.
Trajectory run_stoch_finite_sum(const FiniteSumInstance& inst, const ParamTrack& track, const Eigen::VectorXd& x0,
                                std::uint64_t seed, bool record = true);
// Iterate x_{t+1} = prox_{alpha g}(x_t - alpha_t (grad f_t(x_t) + v_t)).
Trajectory run_ipogd(const CompositeQuadratic& problem, const ParamTrack& track, ErrorPolicy policy,
                     const Eigen::VectorXd& x0, std::uint64_t seed, bool record = true);

enum class SoundnessMode { Deterministic, MeanSquare };

struct SoundnessReport {
  bool ok = true;
  std::size_t first_violation = 0;  // meaningful when !ok
  double worst_ratio = 0.0;         // max_t e_t / U_t
};

// Deterministic: e_t <= U_t + 1e-9 max(1, U_t). Mean-square: e_t is a trial mean and
// must satisfy e_t <= U_t (1 + 5/sqrt(trials)). Throws HorizonMismatch.
SoundnessReport check_soundness(const std::vector<double>& e, const BoundTrace& bounds, SoundnessMode mode,
                                std::size_t trials = 1);

// Everything needed to run an analysis' algorithm on a generated instance.
struct SimOptions {
  int dim = 1;
  int components = 4;  // finite-sum
  DriftPolicy drift = DriftPolicy::AlignedAway;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
};

struct SimSummary {
  std::vector<double> e_mean;     // mean of ||x_t - x*_t||^2
  std::vector<double> err_mean;   // mean of ||x_t - x*_t||
  std::vector<double> err_max;    // max of ||x_t - x*_t||
  std::vector<double> gap_mean;   // mean of f_t(x_t) - f_t(x*_t) (composite for IP-OGD)
  std::size_t trials = 0;
};

// Error policy exercised for each analysis.
ErrorPolicy default_error_policy(const AnalysisKind& kind);

// Runs `trials` independent trajectories on one instance drawn from the seed; x_0 sits at
// distance sqrt(U0) from x*_0. Throws Unsupported for BiasedSgd.
SimSummary simulate(const AnalysisKind& kind, const ParamTrack& track, const SimOptions& opts);

}  // namespace trackcert
