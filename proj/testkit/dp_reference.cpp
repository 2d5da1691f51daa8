#include "mldp/testkit/dp_reference.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace mldp::testkit {
namespace {

const double kLogTwoPi = std::log(2.0 * 3.14159265358979323846);

Eigen::MatrixXd lower_chol(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (m + m.transpose()));
  return llt.matrixL();
}

}  // namespace

DpReferenceSampler::DpReferenceSampler(std::vector<Eigen::VectorXd> x, std::vector<double> y,
                                       BasePrior prior, double alpha, int aux,
                                       std::uint64_t seed)
    : x_(std::move(x)),
      y_(std::move(y)),
      H_(std::move(prior)),
      alpha_(alpha),
      aux_(aux),
      rng_(make_stream(seed, 1)) {
  if (H_.beta0.size() == 0) H_.beta0 = Eigen::VectorXd::Zero(H_.mu0.size());
  labels_.assign(x_.size(), 0);
  sizes_.assign(1, static_cast<int>(x_.size()));
  atoms_.push_back(draw_posterior(0));
}

DpReferenceSampler::Atom DpReferenceSampler::draw_niw_nig(
    const Eigen::VectorXd& m, double k, const Eigen::MatrixXd& S, double v,
    const Eigen::VectorXd& b, const Eigen::MatrixXd& Vb, double a, double c) {
  const auto P = m.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(P, P);
  for (Eigen::Index i = 0; i < P; ++i) {
    A(i, i) = std::sqrt(std::chi_squared_distribution<double>(v - static_cast<double>(i))(rng_));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = std::normal_distribution<double>(0.0, 1.0)(rng_);
  }
  const Eigen::MatrixXd T = lower_chol(S) * A.inverse().transpose();
  Atom out;
  out.Sigma = T * T.transpose();
  out.Sigma = 0.5 * (out.Sigma + out.Sigma.transpose());
  Eigen::VectorXd z(P);
  for (Eigen::Index i = 0; i < P; ++i) z(i) = std::normal_distribution<double>(0.0, 1.0)(rng_);
  out.mu = m + lower_chol(out.Sigma) * z / std::sqrt(k);
  out.s2 = 1.0 / std::gamma_distribution<double>(a, 1.0 / c)(rng_);
  for (Eigen::Index i = 0; i < P; ++i) z(i) = std::normal_distribution<double>(0.0, 1.0)(rng_);
  out.beta = b + std::sqrt(out.s2) * (lower_chol(Vb) * z);
  return out;
}

DpReferenceSampler::Atom DpReferenceSampler::draw_prior() {
  return draw_niw_nig(H_.mu0, H_.lambda0, H_.Psi0, H_.nu0, H_.beta0, H_.V, H_.a_y, H_.b_y);
}

DpReferenceSampler::Atom DpReferenceSampler::draw_posterior(int cluster) {
  const auto P = H_.mu0.size();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < x_.size(); ++i)
    if (labels_[i] == cluster) idx.push_back(i);
  const double n = static_cast<double>(idx.size());

  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(P);
  for (auto i : idx) xbar += x_[i];
  xbar /= n;
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(P, P);
  Eigen::MatrixXd XtX = Eigen::MatrixXd::Zero(P, P);
  Eigen::VectorXd Xty = Eigen::VectorXd::Zero(P);
  double yty = 0.0;
  for (auto i : idx) {
    scatter += (x_[i] - xbar) * (x_[i] - xbar).transpose();
    XtX += x_[i] * x_[i].transpose();
    Xty += y_[i] * x_[i];
    yty += y_[i] * y_[i];
  }
  const double k = H_.lambda0 + n;
  const Eigen::VectorXd m = (H_.lambda0 * H_.mu0 + n * xbar) / k;
  const Eigen::VectorXd d = xbar - H_.mu0;
  const Eigen::MatrixXd S = H_.Psi0 + scatter + (H_.lambda0 * n / k) * d * d.transpose();

  const Eigen::MatrixXd V0inv = H_.V.inverse();
  const Eigen::MatrixXd Lambda = V0inv + XtX;
  const Eigen::MatrixXd Vn = Lambda.inverse();
  const Eigen::VectorXd bn = Vn * (V0inv * H_.beta0 + Xty);
  const double a = H_.a_y + 0.5 * n;
  const double c =
      H_.b_y + 0.5 * (yty + H_.beta0.dot(V0inv * H_.beta0) - bn.dot(Lambda * bn));
  return draw_niw_nig(m, k, S, H_.nu0 + n, bn, 0.5 * (Vn + Vn.transpose()), a, c);
}

double DpReferenceSampler::loglik(const Atom& atom, std::size_t i) const {
  const auto P = static_cast<double>(atom.mu.size());
  const Eigen::VectorXd r = x_[i] - atom.mu;
  const double quad = r.dot(atom.Sigma.ldlt().solve(r));
  const double logdet = std::log(atom.Sigma.determinant());
  const double e = y_[i] - x_[i].dot(atom.beta);
  return -0.5 * (P * kLogTwoPi + logdet + quad) - 0.5 * (kLogTwoPi + std::log(atom.s2) + e * e / atom.s2);
}

void DpReferenceSampler::sweep() {
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const int c = labels_[i];
    labels_[i] = -1;
    std::vector<Atom> aux;
    if (--sizes_[static_cast<std::size_t>(c)] == 0) {
      aux.push_back(atoms_[static_cast<std::size_t>(c)]);
      atoms_.erase(atoms_.begin() + c);
      sizes_.erase(sizes_.begin() + c);
      for (auto& l : labels_)
        if (l > c) --l;
    }
    while (static_cast<int>(aux.size()) < aux_) aux.push_back(draw_prior());

    std::vector<double> existing(atoms_.size()), auxiliary(aux.size());
    for (std::size_t k = 0; k < atoms_.size(); ++k) existing[k] = loglik(atoms_[k], i);
    for (std::size_t a = 0; a < aux.size(); ++a) auxiliary[a] = loglik(aux[a], i);
    const auto p = dp_candidate_probabilities(sizes_, alpha_, existing, auxiliary);

    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    std::size_t pick = p.size() - 1;
    double cum = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      cum += p[k];
      if (u < cum) {
        pick = k;
        break;
      }
    }
    if (pick < atoms_.size()) {
      labels_[i] = static_cast<int>(pick);
      ++sizes_[pick];
    } else {
      atoms_.push_back(aux[pick - atoms_.size()]);
      sizes_.push_back(1);
      labels_[i] = static_cast<int>(atoms_.size()) - 1;
    }
  }
  for (std::size_t k = 0; k < atoms_.size(); ++k) atoms_[k] = draw_posterior(static_cast<int>(k));
}

std::vector<double> dp_candidate_probabilities(std::span<const int> sizes, double alpha,
                                               std::span<const double> existing_loglik,
                                               std::span<const double> aux_loglik) {
  std::vector<double> lp;
  for (std::size_t k = 0; k < sizes.size(); ++k)
    lp.push_back(std::log(static_cast<double>(sizes[k])) + existing_loglik[k]);
  const double s = static_cast<double>(aux_loglik.size());
  for (double l : aux_loglik) lp.push_back(std::log(alpha / s) + l);
  double top = -std::numeric_limits<double>::infinity();
  for (double v : lp) top = std::max(top, v);
  double total = 0.0;
  for (double& v : lp) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : lp) v /= total;
  return lp;
}

}  // namespace mldp::testkit
