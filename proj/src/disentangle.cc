#include "xmt/disentangle.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "xmt/metrics.h"
#include "xmt/parallel.h"

namespace xmt {

double lex_score(const TokenSeq& hyp, const TokenSeq& ref) {
  BleuParams p;
  p.max_n = 1;
  return sentence_bleu(hyp, {ref}, p);
}

double sem_score(const Sample& s) {
  if (!s.human_score) throw DataError("sample '" + s.id + "' has no human_score");
  return *s.human_score;
}

double emb_score(const TokenSeq& hyp, const TokenSeq& ref, const EmbeddingTable& emb) {
  auto mean_vec = [&emb](const TokenSeq& t, std::vector<double>* out) {
    std::size_t found = 0;
    for (const auto& tok : t) {
      const std::vector<double>* v = emb.find(tok);
      if (!v) continue;
      if (out->empty()) out->assign(v->size(), 0.0);
      for (std::size_t i = 0; i < v->size(); ++i) (*out)[i] += (*v)[i];
      ++found;
    }
    if (found == 0) return false;
    for (double& x : *out) x /= static_cast<double>(found);
    return true;
  };
  std::vector<double> mh, mr;
  if (!mean_vec(hyp, &mh) || !mean_vec(ref, &mr)) return hyp == ref ? 1.0 : 0.0;
  return cosine(mh, mr);
}

double length_ratio(const TokenSeq& hyp, const TokenSeq& ref) {
  if (ref.empty()) throw DataError("length_ratio: empty reference");
  return static_cast<double>(hyp.size()) / static_cast<double>(ref.size());
}

FitResult ols_fit(const RegressorSet& x, const std::vector<double>& y) {
  std::size_t rows = y.size();
  std::size_t cols = x.columns.size();
  if (cols == 0) throw UsageError("ols_fit: no regressors");
  for (const auto& col : x.columns) {
    if (col.size() != rows) throw UsageError("ols_fit: column length mismatch");
  }
  if (rows < cols + 1) {
    throw UsageError("ols_fit: need at least " + std::to_string(cols + 1) +
                     " rows, got " + std::to_string(rows));
  }
  double y_mean = 0;
  for (double v : y) y_mean += v;
  y_mean /= static_cast<double>(rows);
  double ss_tot = 0;
  for (double v : y) ss_tot += (v - y_mean) * (v - y_mean);
  if (ss_tot == 0) throw DataError("ols_fit: y has zero variance");

  Eigen::MatrixXd a(rows, cols + 1);
  Eigen::VectorXd b(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    a(r, 0) = 1.0;
    for (std::size_t c = 0; c < cols; ++c) a(r, c + 1) = x.columns[c][r];
    b(r) = y[r];
  }

  FitResult fit;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::VectorXd beta;
  if (qr.rank() == static_cast<Eigen::Index>(cols + 1)) {
    beta = qr.solve(b);
  } else {
    Eigen::MatrixXd ata = a.transpose() * a;
    ata.diagonal().array() += 1e-8;
    beta = ata.ldlt().solve(a.transpose() * b);
    fit.ridge_applied = true;
  }
  fit.intercept = beta(0);
  fit.coefficients.assign(beta.data() + 1, beta.data() + 1 + cols);

  Eigen::VectorXd resid = b - a * beta;
  double ss_res = resid.squaredNorm();
  fit.r_squared = 1.0 - ss_res / ss_tot;
  return fit;
}

namespace {

// z-score in place; returns (mean, population std). Constant columns map
// to all-zero with std reported as 0.
std::pair<double, double> zscore_column(std::vector<double>& col) {
  double mean = 0;
  for (double v : col) mean += v;
  mean /= static_cast<double>(col.size());
  double var = 0;
  for (double v : col) var += (v - mean) * (v - mean);
  var /= static_cast<double>(col.size());
  double sd = std::sqrt(var);
  for (double& v : col) v = sd > 0 ? (v - mean) / sd : 0.0;
  return {mean, sd};
}

}  // namespace

DisentangleReport disentangle_report(const std::vector<Sample>& dataset,
                                     const MetricFn& m,
                                     const std::vector<std::string>& factors,
                                     const EmbeddingTable* emb) {
  if (factors.empty()) throw UsageError("disentangle: empty factor set");
  for (const auto& f : factors) {
    if (f != "lex" && f != "sem" && f != "emb" && f != "lenr") {
      throw UsageError("disentangle: unknown factor '" + f +
                       "' (expected lex, sem, emb or lenr)");
    }
    if (f == "emb" && !emb) {
      throw UsageError("disentangle: factor 'emb' requires an embedding table");
    }
  }
  if (dataset.empty()) throw DataError("disentangle: empty dataset");

  // The first reference (or the pseudo-reference as fallback) anchors the
  // reference-side factors.
  auto factor_ref = [](const Sample& s) -> const TokenSeq* {
    if (!s.refs.empty() && !s.refs.front().empty()) return &s.refs.front();
    if (s.pseudo_ref && !s.pseudo_ref->empty()) return &*s.pseudo_ref;
    return nullptr;
  };

  struct Row {
    bool ok = false;
    std::vector<double> values;
    double y = 0;
  };
  std::vector<Row> rows(dataset.size());
  parallel_for(dataset.size(), [&](std::size_t i) {
    const Sample& s = dataset[i];
    Row& row = rows[i];
    row.values.reserve(factors.size());
    try {
      for (const auto& f : factors) {
        if (f == "sem") {
          row.values.push_back(sem_score(s));
          continue;
        }
        const TokenSeq* ref = factor_ref(s);
        if (!ref) throw DataError("sample '" + s.id + "' has no usable reference");
        if (f == "lex") row.values.push_back(lex_score(s.hyp, *ref));
        else if (f == "emb") row.values.push_back(emb_score(s.hyp, *ref, *emb));
        else row.values.push_back(length_ratio(s.hyp, *ref));
      }
      row.y = m(s);
      row.ok = true;
    } catch (const Error&) {
      row.ok = false;  // excluded and counted
    }
  });

  DisentangleReport report;
  report.factor_names = factors;
  RegressorSet x;
  x.names = factors;
  x.columns.assign(factors.size(), {});
  std::vector<double> y;
  for (const Row& row : rows) {
    if (!row.ok) {
      ++report.excluded_samples;
      continue;
    }
    for (std::size_t c = 0; c < factors.size(); ++c) x.columns[c].push_back(row.values[c]);
    y.push_back(row.y);
  }
  if (y.empty()) throw DataError("disentangle: every sample was excluded");

  for (std::size_t c = 0; c < factors.size(); ++c) {
    auto [mean, sd] = zscore_column(x.columns[c]);
    x.constant_flags.push_back(sd == 0);
    report.zscore_params[factors[c]] = {mean, sd};
  }
  auto [y_mean, y_sd] = zscore_column(y);
  report.zscore_params["metric"] = {y_mean, y_sd};
  if (y_sd == 0) throw DataError("disentangle: metric scores have zero variance");

  FitResult fit = ols_fit(x, y);
  report.coefficients = fit.coefficients;
  report.constant_factors = x.constant_flags;
  report.intercept = fit.intercept;
  report.r_squared = fit.r_squared;
  report.ridge_applied = fit.ridge_applied;
  return report;
}

}  // namespace xmt
