#include "perfweld/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "perfweld/rng.hpp"

namespace perfweld {

std::optional<std::size_t> DatasetSchema::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i)
    if (feature_names[i] == name) return i;
  return std::nullopt;
}

void DatasetSchema::validate() const {
  if (feature_names.empty()) throw std::invalid_argument("schema needs at least one feature");
  if (response_name.empty()) throw std::invalid_argument("schema response name is empty");
  std::unordered_set<std::string> seen;
  for (const auto& n : feature_names) {
    if (n.empty()) throw std::invalid_argument("schema has an empty feature name");
    if (!seen.insert(n).second)
      throw std::invalid_argument("schema has a duplicate column name: " + n);
  }
  if (seen.count(response_name))
    throw std::invalid_argument("schema response name collides with a feature: " + response_name);
}

void Dataset::add_row(std::span<const double> features, double response) {
  if (features.size() != schema_.n_features())
    throw std::invalid_argument("row has " + std::to_string(features.size()) +
                                " features, schema expects " +
                                std::to_string(schema_.n_features()));
  if (!(response > 0.0) || !std::isfinite(response))
    throw std::invalid_argument("response must be a positive finite number");
  features_.insert(features_.end(), features.begin(), features.end());
  responses_.push_back(response);
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out(schema_);
  out.features_.reserve(rows.size() * schema_.n_features());
  out.responses_.reserve(rows.size());
  for (std::size_t r : rows) out.add_row(row(r), response(r));
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim spaces and a trailing CR
    std::size_t b = cell.find_first_not_of(" \t\r");
    std::size_t e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t data_row, const std::string& column) {
  double v = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument("row " + std::to_string(data_row) + ", column " + column +
                                ": non-numeric value \"" + cell + "\"");
  return v;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ",";
    out += parts[i];
  }
  return out;
}

Dataset parse_csv(std::istream& in, const std::string& path, const DatasetSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  std::vector<std::string> header = split_csv_line(line);
  std::vector<std::string> expected = schema.feature_names;
  expected.push_back(schema.response_name);
  if (header != expected)
    throw std::invalid_argument(path + ": header mismatch; expected \"" + join(expected) +
                                "\", found \"" + join(header) + "\"");

  Dataset ds(schema);
  std::vector<double> feats(schema.n_features());
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++data_row;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != expected.size())
      throw std::invalid_argument("row " + std::to_string(data_row) + ": expected " +
                                  std::to_string(expected.size()) + " cells, found " +
                                  std::to_string(cells.size()));
    for (std::size_t c = 0; c < schema.n_features(); ++c)
      feats[c] = parse_cell(cells[c], data_row, schema.feature_names[c]);
    double resp = parse_cell(cells.back(), data_row, schema.response_name);
    if (!(resp > 0.0))
      throw std::invalid_argument("row " + std::to_string(data_row) + ": response " +
                                  cells.back() + " must be positive");
    ds.add_row(feats, resp);
  }
  return ds;
}

}  // namespace

Dataset load_dataset(const std::string& path, const DatasetSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return parse_csv(in, path, schema);
}

Dataset load_dataset(const std::string& path, const std::string& response_name) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  std::vector<std::string> header = split_csv_line(line);
  DatasetSchema schema;
  schema.response_name = response_name;
  bool found = false;
  for (const auto& col : header) {
    if (col == response_name) {
      found = true;
    } else {
      schema.feature_names.push_back(col);
    }
  }
  if (!found)
    throw std::invalid_argument(path + ": no response column \"" + response_name + "\"");
  if (header.back() != response_name)
    throw std::invalid_argument(path + ": response column \"" + response_name +
                                "\" must be the last column");
  schema.validate();
  in.seekg(0);
  return parse_csv(in, path, schema);
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  const auto& schema = ds.schema();
  for (std::size_t c = 0; c < schema.n_features(); ++c) out << schema.feature_names[c] << ",";
  out << schema.response_name << "\n";
  out.precision(17);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    auto x = ds.row(r);
    for (double v : x) out << v << ",";
    out << ds.response(r) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::pair<Dataset, Dataset> split_uniform(const Dataset& ds, double fraction,
                                          std::uint64_t seed) {
  if (ds.empty()) throw std::invalid_argument("split_uniform: empty dataset");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_uniform: fraction must be in (0, 1)");
  const std::size_t n = ds.size();
  const std::size_t n_train =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * n)));

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n_train; ++i)
    std::swap(idx[i], idx[i + rng.next_index(n - i)]);

  std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + n_train);
  std::vector<std::size_t> test_idx(idx.begin() + n_train, idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

DatasetSchema stencil_schema(bool blocking, bool unroll, bool threads) {
  DatasetSchema s;
  s.feature_names = {"I", "J", "K"};
  if (blocking) {
    s.feature_names.insert(s.feature_names.end(), {"b_i", "b_j", "b_k"});
  }
  if (unroll) s.feature_names.push_back("u");
  if (threads) s.feature_names.push_back("t");
  s.response_name = "time_seconds";
  return s;
}

DatasetSchema fmm_schema(bool threads) {
  DatasetSchema s;
  if (threads) s.feature_names.push_back("t");
  s.feature_names.insert(s.feature_names.end(), {"N", "q", "k"});
  s.response_name = "time_seconds";
  return s;
}

}  // namespace perfweld
