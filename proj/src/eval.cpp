#include "perfweld/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "perfweld/parallel.hpp"

namespace perfweld {

double mape(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size())
    throw std::invalid_argument("mape: length mismatch (" + std::to_string(y_true.size()) +
                                " vs " + std::to_string(y_pred.size()) + ")");
  if (y_true.empty()) throw std::invalid_argument("mape: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (!(y_true[i] > 0.0))
      throw std::invalid_argument("mape: y_true[" + std::to_string(i) + "] must be positive");
    sum += std::abs(y_true[i] - y_pred[i]) / y_true[i];
  }
  return 100.0 * sum / static_cast<double>(y_true.size());
}

double mape(const Predictor& model, const Dataset& ds) {
  std::vector<double> y_pred(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) y_pred[r] = model.predict(ds.row(r));
  return mape(ds.responses(), y_pred);
}

void EvalReport::sort_rows() {
  std::sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) {
    return std::tie(a.model, a.fraction, a.seed) < std::tie(b.model, b.fraction, b.seed);
  });
}

void EvalReport::write_csv(std::ostream& os) const {
  os << "model,fraction,seed,train_size,test_size,mape\n";
  os << std::setprecision(17);
  for (const auto& r : rows)
    os << r.model << "," << r.fraction << "," << r.seed << "," << r.train_size << ","
       << r.test_size << "," << r.mape << "\n";
}

EvalReport EvalReport::read_csv(std::istream& is) {
  EvalReport report;
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("report: empty stream");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    EvalRow row;
    std::string cell;
    std::getline(ss, row.model, ',');
    std::getline(ss, cell, ',');
    row.fraction = std::stod(cell);
    std::getline(ss, cell, ',');
    row.seed = std::stoull(cell);
    std::getline(ss, cell, ',');
    row.train_size = std::stoull(cell);
    std::getline(ss, cell, ',');
    row.test_size = std::stoull(cell);
    std::getline(ss, cell, ',');
    row.mape = std::stod(cell);
    report.rows.push_back(std::move(row));
  }
  return report;
}

EvalReport learning_curve(const Dataset& ds, const std::vector<double>& fractions,
                          const std::vector<std::uint64_t>& seeds,
                          const std::vector<ModelSpec>& models, int jobs) {
  if (ds.empty()) throw std::invalid_argument("learning_curve: empty dataset");
  if (fractions.empty()) throw std::invalid_argument("learning_curve: no fractions");
  if (seeds.empty()) throw std::invalid_argument("learning_curve: no seeds");
  if (models.empty()) throw std::invalid_argument("learning_curve: no models");
  for (double f : fractions)
    if (!(f > 0.0 && f < 1.0))
      throw std::invalid_argument("learning_curve: fraction must be in (0, 1)");

  struct Cell {
    double fraction;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double f : fractions)
    for (std::uint64_t s : seeds) cells.push_back({f, s});

  EvalReport report;
  report.rows.resize(cells.size() * models.size());
  parallel_for(cells.size(), jobs, [&](std::size_t c) {
    const auto [fraction, seed] = cells[c];
    auto [train, test] = split_uniform(ds, fraction, seed);
    for (std::size_t m = 0; m < models.size(); ++m) {
      const ModelSpec& spec = models[m];
      if (train.size() < spec.min_train)
        throw std::invalid_argument("learning_curve: training split of " +
                                    std::to_string(train.size()) + " rows is below model \"" +
                                    spec.name + "\" minimum of " +
                                    std::to_string(spec.min_train));
      PredictorPtr model = spec.fit(train, seed);
      EvalRow row;
      row.model = spec.name;
      row.fraction = fraction;
      row.seed = seed;
      row.train_size = train.size();
      row.test_size = test.size();
      row.mape = mape(*model, test);
      report.rows[c * models.size() + m] = std::move(row);
    }
  });
  report.sort_rows();
  return report;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  if (lo == hi) return values[lo];
  const double t = pos - static_cast<double>(lo);
  return values[lo] + t * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const EvalReport& report) {
  if (report.rows.empty()) throw std::invalid_argument("summarize: empty report");
  std::map<std::pair<std::string, double>, std::vector<double>> groups;
  for (const auto& r : report.rows) groups[{r.model, r.fraction}].push_back(r.mape);
  std::vector<SummaryRow> out;
  for (const auto& [key, mapes] : groups) {
    SummaryRow row;
    row.model = key.first;
    row.fraction = key.second;
    row.n = mapes.size();
    row.median = quantile(mapes, 0.5);
    row.q25 = quantile(mapes, 0.25);
    row.q75 = quantile(mapes, 0.75);
    out.push_back(std::move(row));
  }
  return out;
}

void write_summary_table(const std::vector<SummaryRow>& summary, std::ostream& os) {
  os << std::left << std::setw(22) << "model" << std::right << std::setw(10) << "fraction"
     << std::setw(6) << "n" << std::setw(12) << "median" << std::setw(12) << "q25"
     << std::setw(12) << "q75" << "\n";
  for (const auto& r : summary) {
    os << std::left << std::setw(22) << r.model << std::right << std::setw(10)
       << std::setprecision(4) << r.fraction << std::setw(6) << r.n << std::fixed
       << std::setprecision(3) << std::setw(12) << r.median << std::setw(12) << r.q25
       << std::setw(12) << r.q75 << "\n";
    os.unsetf(std::ios_base::fixed);
  }
}

void write_plot_data(const std::vector<SummaryRow>& summary, std::ostream& os) {
  os << std::setprecision(17);
  std::string current;
  bool first = true;
  for (const auto& r : summary) {
    if (r.model != current) {
      if (!first) os << "\n\n";
      os << "# model: " << r.model << "\n";
      os << "# fraction median q25 q75\n";
      current = r.model;
      first = false;
    }
    os << r.fraction << " " << r.median << " " << r.q25 << " " << r.q75 << "\n";
  }
}

}  // namespace perfweld
