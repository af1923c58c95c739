#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "mcrl/fitkit.hpp"
#include "mcrl/modelselect.hpp"
#include "mcrl/simlab.hpp"

namespace mcrl {

TrendResult mann_kendall(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 3) throw std::invalid_argument("mann_kendall: need at least 3 values");
  TrendResult r;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) r.s += (x[j] > x[i]) - (x[j] < x[i]);

  std::map<double, long long> ties;
  for (double v : x) ++ties[v];
  const auto nn = static_cast<double>(n);
  double var = nn * (nn - 1) * (2 * nn + 5);
  for (const auto& [v, t] : ties) {
    const auto tt = static_cast<double>(t);
    var -= tt * (tt - 1) * (2 * tt + 5);
  }
  r.variance = var / 18.0;
  r.direction = (r.s > 0) - (r.s < 0);
  if (r.variance <= 0.0 || r.s == 0) {
    r.z = 0.0;
    r.p = 1.0;
    return r;
  }
  const double sd = std::sqrt(r.variance);
  r.z = r.s > 0 ? (static_cast<double>(r.s) - 1) / sd : (static_cast<double>(r.s) + 1) / sd;
  r.p = std::min(1.0, std::erfc(std::abs(r.z) / std::sqrt(2.0)));
  return r;
}

ChiSquareResult chi_square_proportions(const std::vector<std::vector<double>>& counts) {
  const std::size_t R = counts.size();
  if (R < 2) throw std::invalid_argument("chi_square: need at least 2 rows");
  const std::size_t C = counts.front().size();
  if (C < 2) throw std::invalid_argument("chi_square: need at least 2 columns");
  std::vector<double> row(R, 0.0), col(C, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < R; ++i) {
    if (counts[i].size() != C) throw std::invalid_argument("chi_square: ragged table");
    for (std::size_t j = 0; j < C; ++j) {
      if (!(counts[i][j] >= 0.0)) throw std::invalid_argument("chi_square: negative count");
      row[i] += counts[i][j];
      col[j] += counts[i][j];
      total += counts[i][j];
    }
  }
  for (double v : row)
    if (v <= 0.0) throw std::invalid_argument("chi_square: empty row");
  for (double v : col)
    if (v <= 0.0) throw std::invalid_argument("chi_square: empty column");
  ChiSquareResult res;
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j) {
      const double e = row[i] * col[j] / total;
      res.chi2 += (counts[i][j] - e) * (counts[i][j] - e) / e;
    }
  res.df = static_cast<int>((R - 1) * (C - 1));
  const boost::math::chi_squared dist(res.df);
  res.p = res.chi2 <= 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, res.chi2));
  return res;
}

bool classify_learner(const ParticipantRecord& record, const std::string& condition) {
  if (condition.rfind("exp2-", 0) == 0) {
    std::vector<double> clicks;
    for (const auto& t : record.trials) clicks.push_back(t.n_clicks());
    if (clicks.size() < 3) return false;
    return mann_kendall(clicks).p < 0.05;
  }
  std::optional<StrategyLabel> prev;
  for (const auto& t : record.trials) {
    const auto label = strategy_of(t, condition);
    if (!label) throw std::invalid_argument("no learner rule for condition " + condition);
    if (prev && *prev != *label) return true;
    prev = label;
  }
  return false;
}

}  // namespace mcrl
