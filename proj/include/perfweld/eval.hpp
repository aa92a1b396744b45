#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "perfweld/dataset.hpp"
#include "perfweld/model.hpp"

namespace perfweld {

// Mean absolute percentage error, in percent. y_true must be strictly
// positive and the lengths equal.
double mape(std::span<const double> y_true, std::span<const double> y_pred);

double mape(const Predictor& model, const Dataset& ds);

struct EvalRow {
  std::string model;
  double fraction = 0;
  std::uint64_t seed = 0;
  std::size_t train_size = 0, test_size = 0;
  double mape = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  void sort_rows();  // by (model, fraction, seed)
  void write_csv(std::ostream& os) const;
  static EvalReport read_csv(std::istream& is);
};

// A model entry in a learning-curve run: a name plus a fit callback taking
// the training split and the cell seed.
struct ModelSpec {
  std::string name;
  std::function<PredictorPtr(const Dataset& train, std::uint64_t seed)> fit;
  std::size_t min_train = 1;
};

// For each (fraction, seed) cell: one uniform split shared by every model
// (paired comparison), fit, MAPE on the complement. Cells may run
// concurrently under `jobs`; the report is sorted and independent of the
// execution order.
EvalReport learning_curve(const Dataset& ds, const std::vector<double>& fractions,
                          const std::vector<std::uint64_t>& seeds,
                          const std::vector<ModelSpec>& models, int jobs = 1);

struct SummaryRow {
  std::string model;
  double fraction = 0;
  std::size_t n = 0;
  double median = 0, q25 = 0, q75 = 0;
  double iqr() const { return q75 - q25; }
};

// Median and interquartile MAPE per (model, fraction), ordered by the sort
// of the group keys.
std::vector<SummaryRow> summarize(const EvalReport& report);

void write_summary_table(const std::vector<SummaryRow>& summary, std::ostream& os);

// gnuplot-friendly: one block per model, blank-line separated, columns
// "fraction median q25 q75".
void write_plot_data(const std::vector<SummaryRow>& summary, std::ostream& os);

// Linear-interpolation quantile (the common "type 7" rule). p in [0, 1].
double quantile(std::vector<double> values, double p);

}  // namespace perfweld
