#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "mldp/components.hpp"
#include "mldp/rng.hpp"

namespace mldp::testkit {

/// Classical single-DP auxiliary-parameter Gibbs sampler for the mixture of
/// regressions, written without any of the library's sampling or density
/// routines. It consumes the assignment stream make_stream(seed, 1) in the
/// same order as the library sampler, so the two can be compared draw for
/// draw when every I_n = 1.
class DpReferenceSampler {
 public:
  struct Atom {
    Eigen::VectorXd mu;
    Eigen::MatrixXd Sigma;
    Eigen::VectorXd beta;
    double s2 = 1.0;
  };

  DpReferenceSampler(std::vector<Eigen::VectorXd> x, std::vector<double> y, BasePrior prior,
                     double alpha, int aux, std::uint64_t seed);

  void sweep();
  /// Cluster label per sample, clusters numbered in order of creation with
  /// emptied clusters removed.
  const std::vector<int>& labels() const { return labels_; }
  std::size_t num_clusters() const { return atoms_.size(); }
  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  Atom draw_prior();
  Atom draw_posterior(int cluster);
  Atom draw_niw_nig(const Eigen::VectorXd& m, double k, const Eigen::MatrixXd& S, double v,
                    const Eigen::VectorXd& b, const Eigen::MatrixXd& Vb, double a, double c);
  double loglik(const Atom& atom, std::size_t i) const;

  std::vector<Eigen::VectorXd> x_;
  std::vector<double> y_;
  BasePrior H_;
  double alpha_;
  int aux_;
  Rng rng_;
  std::vector<int> labels_;
  std::vector<int> sizes_;
  std::vector<Atom> atoms_;
};

/// Neal's auxiliary-parameter assignment probabilities for one detached
/// sample: existing cluster k gets n_k f_k, each of the s auxiliaries gets
/// (alpha / s) f_a. Inputs are log f values.
std::vector<double> dp_candidate_probabilities(std::span<const int> sizes, double alpha,
                                               std::span<const double> existing_loglik,
                                               std::span<const double> aux_loglik);

}  // namespace mldp::testkit
