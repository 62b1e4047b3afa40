#include "naive.hpp"

#include <cmath>

namespace naive {

double pairwiseAuroc(const std::vector<double>& id, const std::vector<double>& ood) {
  double wins = 0.0;
  for (double a : id) {
    for (double b : ood) {
      if (a > b) wins += 1.0;
      else if (a == b) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

double thresholdWalkFpr(const std::vector<double>& id, const std::vector<double>& ood,
                        double tpr) {
  bool found = false;
  double best = 0.0;
  for (double t : id) {
    std::size_t accepted = 0;
    for (double s : id) accepted += (s >= t);
    if (static_cast<double>(accepted) / static_cast<double>(id.size()) >= tpr) {
      if (!found || t > best) best = t;
      found = true;
    }
  }
  std::size_t fp = 0;
  for (double s : ood) fp += (s >= best);
  return static_cast<double>(fp) / static_cast<double>(ood.size());
}

Stats channelStats(const Rows& shots, const std::vector<std::uint32_t>& labels,
                   std::size_t classes) {
  const std::size_t n = shots.front().size();
  std::vector<std::vector<double>> proto(classes, std::vector<double>(n, 0.0));
  std::vector<double> count(classes, 0.0);
  for (std::size_t r = 0; r < shots.size(); ++r) {
    count[labels[r]] += 1.0;
    for (std::size_t i = 0; i < n; ++i) proto[labels[r]][i] += shots[r][i];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    for (double& x : proto[c]) x /= count[c];
  }
  Stats out;
  for (std::size_t i = 0; i < n; ++i) {
    double pairs = 0.0, prod = 0.0;
    for (std::size_t a = 0; a < classes; ++a) {
      for (std::size_t b = a + 1; b < classes; ++b) {
        prod += proto[a][i] * proto[b][i];
        pairs += 1.0;
      }
    }
    double mean = 0.0;
    for (std::size_t c = 0; c < classes; ++c) mean += proto[c][i];
    mean /= static_cast<double>(classes);
    double var = 0.0;
    for (std::size_t c = 0; c < classes; ++c) var += (proto[c][i] - mean) * (proto[c][i] - mean);
    out.s.push_back(prod / pairs);
    out.v.push_back(var / static_cast<double>(classes));
  }
  return out;
}

void partition(const std::vector<double>& f, std::size_t q, std::vector<std::size_t>& positive,
               std::vector<std::size_t>& negative) {
  std::vector<bool> taken(f.size(), false);
  for (std::size_t k = 0; k < q; ++k) {
    std::size_t pick = f.size();
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (taken[i]) continue;
      if (pick == f.size() || f[i] < f[pick]) pick = i;
    }
    taken[pick] = true;
  }
  positive.clear();
  negative.clear();
  for (std::size_t i = 0; i < f.size(); ++i) (taken[i] ? positive : negative).push_back(i);
}

namespace {

Row unitF(const Row& r) {
  double sq = 0.0;
  for (float x : r) sq += static_cast<double>(x) * x;
  const double norm = std::sqrt(sq);
  Row out;
  for (float x : r) out.push_back(static_cast<float>(x / norm));
  return out;
}

std::vector<double> unitD(std::vector<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  for (double& x : v) x /= norm;
  return v;
}

Row pick(const Row& r, const std::vector<std::size_t>& idx) {
  Row out;
  for (std::size_t i : idx) out.push_back(r[i]);
  return out;
}

Row poolF(const Row& r) {
  Row out;
  for (std::size_t j = 0; j + 1 < r.size(); j += 2) out.push_back((r[j] + r[j + 1]) / 2.0f);
  return out;
}

Rows templateMean(const std::vector<Rows>& templates) {
  const std::size_t classes = templates[0].size();
  const std::size_t n = templates[0][0].size();
  Rows out(classes, Row(n));
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (const auto& t : templates) s += t[c][i];
      out[c][i] = static_cast<float>(s / static_cast<double>(templates.size()));
    }
  }
  return out;
}

double dot(const std::vector<double>& a, const Row& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// p_i = 1 / sum_j exp((l_j - l_i) / tau)
std::vector<double> softmax(const std::vector<double>& l, double tau) {
  std::vector<double> p(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) {
    double denom = 0.0;
    for (double lj : l) denom += std::exp((lj - l[i]) / tau);
    p[i] = 1.0 / denom;
  }
  return p;
}

std::size_t firstMax(const std::vector<double>& v, std::size_t end) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < end; ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::vector<double> sideLogits(const Instance& inst, const Row& feature, const Rows& textMean,
                               const std::vector<std::size_t>& side) {
  std::vector<double> q;
  Rows keys, text;
  if (inst.avgpool) {
    for (std::size_t j = 0; j + 1 < feature.size(); j += 2) {
      q.push_back((static_cast<double>(feature[j]) + feature[j + 1]) / 2.0);
    }
    for (const auto& s : inst.shots) keys.push_back(unitF(poolF(s)));
    for (const auto& t : textMean) text.push_back(unitF(poolF(t)));
  } else {
    for (std::size_t i : side) q.push_back(feature[i]);
    for (const auto& s : inst.shots) keys.push_back(unitF(pick(s, side)));
    for (const auto& t : textMean) text.push_back(unitF(pick(t, side)));
  }
  q = unitD(q);

  const std::size_t ck = keys.size();
  std::vector<double> affinity(ck);
  for (std::size_t j = 0; j < ck; ++j) affinity[j] = std::exp(-inst.beta * (1.0 - dot(q, keys[j])));
  // explicit one-hot value matrix
  std::vector<std::vector<double>> values(ck, std::vector<double>(inst.classes, 0.0));
  for (std::size_t j = 0; j < ck; ++j) values[j][inst.labels[j]] = 1.0;

  std::vector<double> logits(inst.classes);
  for (std::size_t c = 0; c < inst.classes; ++c) {
    double cache = 0.0;
    for (std::size_t j = 0; j < ck; ++j) cache += affinity[j] * values[j][c];
    logits[c] = dot(q, text[c]) + inst.alpha * cache;
  }
  return logits;
}

}  // namespace

Score score(const Instance& inst, const Row& feature) {
  const Rows posMean = templateMean(inst.positiveTemplates);
  const Rows negMean = templateMean(inst.negativeTemplates);
  Score out;
  out.pPos = sideLogits(inst, feature, posMean, inst.positive);
  out.pNeg = sideLogits(inst, feature, negMean, inst.negative);
  std::vector<double> joined = out.pPos;
  joined.insert(joined.end(), out.pNeg.begin(), out.pNeg.end());
  out.pDual = softmax(joined, inst.tau);

  const std::size_t c = inst.classes;
  if (inst.mode == "dual") {
    out.predicted = firstMax(out.pDual, c);
    out.oodScore = out.pDual[out.predicted];
  } else if (inst.mode == "positive-only") {
    out.predicted = firstMax(out.pPos, c);
    out.oodScore = softmax(out.pPos, inst.tau)[out.predicted];
  } else if (inst.mode == "negative-only") {
    std::vector<double> flipped;
    for (double v : out.pNeg) flipped.push_back(-v);
    out.predicted = firstMax(flipped, c);
    out.oodScore = softmax(flipped, inst.tau)[out.predicted];
  } else {
    std::vector<double> q(feature.begin(), feature.end());
    q = unitD(q);
    std::vector<double> sims;
    for (const auto& t : posMean) sims.push_back(dot(q, unitF(t)));
    out.predicted = firstMax(sims, c);
    out.oodScore = softmax(sims, inst.tau)[out.predicted];
  }
  return out;
}

Row randomUnit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = g(rng);
  v = unitD(v);
  return Row(v.begin(), v.end());
}

}  // namespace naive
