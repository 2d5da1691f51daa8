#include "mldp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "mldp/error.hpp"

namespace mldp {

double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size())
    throw ShapeError("rmse: " + std::to_string(y_true.size()) + " targets vs " +
                     std::to_string(y_pred.size()) + " predictions");
  if (y_true.empty()) throw InputError("rmse: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double d = y_pred[i] - y_true[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(y_true.size()));
}

double auc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size())
    throw ShapeError("auc: " + std::to_string(labels.size()) + " labels vs " +
                     std::to_string(scores.size()) + " scores");
  std::size_t n1 = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw InputError("auc: labels must be 0 or 1");
    n1 += static_cast<std::size_t>(l);
  }
  const std::size_t n0 = labels.size() - n1;
  if (n0 == 0 || n1 == 0) throw InputError("auc is undefined when only one class is present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // Midranks; positive-class rank sum minus its minimum is the count of
  // (positive, negative) pairs won, ties worth one half.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum += mid;
    i = j;
  }
  const double u = rank_sum - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

EvalReport EvalReport::from(std::string metric, std::vector<double> reps,
                            std::vector<std::size_t> n) {
  if (reps.empty()) throw InputError("report needs at least one repetition");
  EvalReport r;
  r.metric = std::move(metric);
  r.reps = std::move(reps);
  r.n = std::move(n);
  for (double v : r.reps)
    if (!std::isfinite(v)) throw NumericError("non-finite " + r.metric + " value");
  r.mean = std::accumulate(r.reps.begin(), r.reps.end(), 0.0) / static_cast<double>(r.reps.size());
  if (r.reps.size() > 1) {
    double ss = 0.0;
    for (double v : r.reps) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(r.reps.size() - 1));
  }
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = {{"metric", metric}, {"mean", mean}, {"std", std}, {"reps", reps}};
  if (!n.empty()) j["n"] = n;
  return j;
}

void print_table(std::ostream& os, const std::vector<std::pair<std::string, EvalReport>>& rows) {
  os << std::left << std::setw(12) << "model" << std::setw(8) << "metric" << std::right
     << std::setw(12) << "mean" << std::setw(12) << "std" << std::setw(6) << "reps" << '\n';
  for (const auto& [name, r] : rows) {
    os << std::left << std::setw(12) << name << std::setw(8) << r.metric << std::right
       << std::fixed << std::setprecision(5) << std::setw(12) << r.mean << std::setw(12) << r.std
       << std::setw(6) << r.reps.size() << '\n';
  }
  os.unsetf(std::ios::fixed);
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ShapeError("ARI: labelings have different lengths");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < n; ++i) {
    joint[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  const auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sa = 0, sb = 0;
  for (const auto& [k, v] : joint) index += c2(v);
  for (const auto& [k, v] : ra) sa += c2(v);
  for (const auto& [k, v] : rb) sb += c2(v);
  const double expected = sa * sb / c2(static_cast<double>(n));
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

Eigen::MatrixXd similarity_matrix(const std::vector<std::vector<int>>& labelings) {
  if (labelings.empty()) throw InputError("similarity matrix needs at least one labeling");
  const auto n = static_cast<Eigen::Index>(labelings.front().size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  for (const auto& l : labelings) {
    if (static_cast<Eigen::Index>(l.size()) != n) throw ShapeError("labelings differ in length");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j)
        if (l[static_cast<std::size_t>(i)] == l[static_cast<std::size_t>(j)]) S(i, j) += 1.0;
  }
  S /= static_cast<double>(labelings.size());
  return S.selfadjointView<Eigen::Upper>();
}

std::size_t dahl_point_estimate(const std::vector<std::vector<int>>& labelings) {
  const Eigen::MatrixXd S = similarity_matrix(labelings);
  const auto n = S.rows();
  std::size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < labelings.size(); ++t) {
    const auto& l = labelings[t];
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double d = (l[static_cast<std::size_t>(i)] == l[static_cast<std::size_t>(j)] ? 1.0 : 0.0) - S(i, j);
        loss += d * d;
      }
    if (loss < best_loss) {
      best_loss = loss;
      best = t;
    }
  }
  return best;
}

}  // namespace mldp
