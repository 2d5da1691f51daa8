#include "mldp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "mldp/error.hpp"
#include "mldp/rng.hpp"

namespace mldp {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Splits one CSV record, honoring double quotes. Returns false if the record
// continues on the next line (open quote).
bool split_record(const std::string& line, std::vector<std::string>& fields, std::string& cur,
                  bool& in_quotes) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (in_quotes) {
    cur += '\n';
    return false;
  }
  fields.push_back(cur);
  cur.clear();
  return true;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Table::Table(std::vector<std::string> columns, std::vector<std::vector<std::string>> rows)
    : columns_(std::move(columns)), cells_(std::move(rows)) {
  std::set<std::string> seen;
  for (const auto& c : columns_)
    if (!seen.insert(c).second) throw DataError("duplicate column '" + c + "'");
  for (std::size_t r = 0; r < cells_.size(); ++r)
    if (cells_[r].size() != columns_.size())
      throw DataError("row " + std::to_string(r + 1) + " has " + std::to_string(cells_[r].size()) +
                      " fields, expected " + std::to_string(columns_.size()));
}

bool Table::has_column(const std::string& name) const {
  return std::find(columns_.begin(), columns_.end(), name) != columns_.end();
}

std::size_t Table::column_index(const std::string& name) const {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw DataError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - columns_.begin());
}

ColumnType Table::column_type(const std::string& name) const {
  const auto c = column_index(name);
  for (const auto& row : cells_)
    if (!parse_double(row[c])) return ColumnType::text;
  return ColumnType::numeric;
}

std::vector<double> Table::numeric(const std::string& name) const {
  const auto c = column_index(name);
  std::vector<double> out(cells_.size());
  for (std::size_t r = 0; r < cells_.size(); ++r) {
    const auto v = parse_double(cells_[r][c]);
    if (!v) {
      const std::string what = trim(cells_[r][c]).empty() ? "missing value"
                                                          : "unparseable value '" + cells_[r][c] + "'";
      throw DataError(what + " at row " + std::to_string(r + 1) + ", column '" + name + "'");
    }
    if (!std::isfinite(*v))
      throw DataError("non-finite value at row " + std::to_string(r + 1) + ", column '" + name + "'");
    out[r] = *v;
  }
  return out;
}

std::vector<std::string> Table::text(const std::string& name) const {
  const auto c = column_index(name);
  std::vector<std::string> out;
  out.reserve(cells_.size());
  for (const auto& row : cells_) out.push_back(trim(row[c]));
  return out;
}

Table Table::subset(const std::vector<std::size_t>& row_indices) const {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(row_indices.size());
  for (auto r : row_indices) rows.push_back(cells_.at(r));
  return Table(columns_, std::move(rows));
}

void Table::add_column(const std::string& name, const std::vector<std::string>& values) {
  if (has_column(name)) throw DataError("duplicate column '" + name + "'");
  if (values.size() != cells_.size())
    throw ShapeError("new column '" + name + "' has " + std::to_string(values.size()) +
                     " values for " + std::to_string(cells_.size()) + " rows");
  columns_.push_back(name);
  for (std::size_t r = 0; r < cells_.size(); ++r) cells_[r].push_back(values[r]);
}

bool CsvSchema::is_categorical(const std::string& name) const {
  return std::find(categorical_columns.begin(), categorical_columns.end(), name) !=
         categorical_columns.end();
}

Table parse_csv(std::istream& is, const std::string& source) {
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (!in_quotes && fields.empty() && trim(line).empty()) continue;
    if (!split_record(line, fields, cur, in_quotes)) continue;
    for (auto& f : fields) f = trim(f);
    if (!have_header) {
      header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != header.size())
        throw DataError(source + ": row " + std::to_string(rows.size() + 1) + " has " +
                        std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(header.size()));
      rows.push_back(std::move(fields));
    }
    fields.clear();
  }
  if (in_quotes) throw DataError(source + ": unterminated quoted field");
  if (!have_header) throw DataError(source + ": empty file");
  return Table(std::move(header), std::move(rows));
}

void write_csv(const Table& table, std::ostream& os) {
  const auto write_row = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << quote(r[c]);
    os << '\n';
  };
  write_row(table.columns());
  for (std::size_t r = 0; r < table.rows(); ++r) write_row(table.row(r));
}

void check_schema(const Table& table, const CsvSchema& schema, bool require_response,
                  const std::string& source) {
  const auto require = [&](const std::string& name) {
    if (!table.has_column(name)) throw DataError(source + ": missing column '" + name + "'");
  };
  for (const auto& c : schema.factor_columns) require(c);
  for (const auto& c : schema.feature_columns) require(c);
  for (const auto& c : schema.categorical_columns) require(c);
  try {
    for (const auto& c : schema.factor_columns) {
      const auto idx = table.column_index(c);
      for (std::size_t r = 0; r < table.rows(); ++r)
        if (trim(table.cell(r, idx)).empty())
          throw DataError("missing value at row " + std::to_string(r + 1) + ", column '" + c + "'");
    }
    for (const auto& c : schema.feature_columns)
      if (!schema.is_categorical(c)) (void)table.numeric(c);
    if (require_response) {
      if (schema.response_column.empty()) throw DataError("no response column declared");
      require(schema.response_column);
      (void)table.numeric(schema.response_column);
    }
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

Table load_csv(const std::string& path, const CsvSchema& schema, bool require_response) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  Table t = parse_csv(in, path);
  check_schema(t, schema, require_response, path);
  return t;
}

Coding parse_coding(const std::string& name) {
  if (name == "one-hot") return Coding::one_hot;
  if (name == "dummy") return Coding::dummy;
  throw ConfigError("unknown coding '" + name + "' (expected one-hot or dummy)");
}

std::string coding_name(Coding c) { return c == Coding::one_hot ? "one-hot" : "dummy"; }

BinaryEncoder BinaryEncoder::fit(const Table& table, const std::vector<std::string>& categorical,
                                 Coding coding) {
  BinaryEncoder enc;
  enc.coding = coding;
  for (const auto& name : categorical) {
    const auto values = table.text(name);
    std::set<std::string> levels(values.begin(), values.end());
    enc.columns.push_back(name);
    enc.levels.emplace_back(levels.begin(), levels.end());
  }
  return enc;
}

std::vector<std::string> BinaryEncoder::expand(const std::vector<std::string>& names) const {
  std::vector<std::string> out;
  for (const auto& name : names) {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
      out.push_back(name);
      continue;
    }
    const auto& lv = levels[static_cast<std::size_t>(it - columns.begin())];
    for (std::size_t l = coding == Coding::dummy ? 1 : 0; l < lv.size(); ++l)
      out.push_back(name + "=" + lv[l]);
  }
  return out;
}

Table BinaryEncoder::transform(const Table& table) const {
  const auto out_columns = expand(table.columns());
  std::vector<std::vector<std::string>> rows(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) rows[r].reserve(out_columns.size());
  for (std::size_t c = 0; c < table.cols(); ++c) {
    const auto& name = table.columns()[c];
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
      for (std::size_t r = 0; r < table.rows(); ++r) rows[r].push_back(table.cell(r, c));
      continue;
    }
    const auto& lv = levels[static_cast<std::size_t>(it - columns.begin())];
    const std::size_t first = coding == Coding::dummy ? 1 : 0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      const std::string v = trim(table.cell(r, c));
      const auto pos = std::lower_bound(lv.begin(), lv.end(), v);
      if (pos == lv.end() || *pos != v)
        throw DataError("unseen level '" + v + "' in column '" + name + "' at row " +
                        std::to_string(r + 1));
      const auto hit = static_cast<std::size_t>(pos - lv.begin());
      for (std::size_t l = first; l < lv.size(); ++l) rows[r].push_back(l == hit ? "1" : "0");
    }
  }
  return Table(out_columns, std::move(rows));
}

nlohmann::json BinaryEncoder::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t i = 0; i < columns.size(); ++i)
    cols.push_back({{"column", columns[i]}, {"levels", levels[i]}});
  return {{"coding", coding_name(coding)}, {"columns", cols}};
}

BinaryEncoder BinaryEncoder::from_json(const nlohmann::json& j) {
  BinaryEncoder enc;
  enc.coding = parse_coding(j.at("coding").get<std::string>());
  for (const auto& c : j.at("columns")) {
    enc.columns.push_back(c.at("column").get<std::string>());
    enc.levels.push_back(c.at("levels").get<std::vector<std::string>>());
  }
  return enc;
}

Table binary_encode(const Table& table, const std::vector<std::string>& categorical,
                    Coding coding) {
  return BinaryEncoder::fit(table, categorical, coding).transform(table);
}

Eigen::MatrixXd numeric_matrix(const Table& table, const std::vector<std::string>& names) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(table.rows()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t c = 0; c < names.size(); ++c) {
    const auto v = table.numeric(names[c]);
    for (std::size_t r = 0; r < v.size(); ++r) X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r];
  }
  return X;
}

PCAModel pca_fit(const Eigen::MatrixXd& X, int k, bool scale) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (k < 1 || k > std::min<Eigen::Index>(n - 1, p))
    throw ConfigError("PCA needs 1 <= k <= min(rows - 1, cols); got k=" + std::to_string(k) +
                      " for a " + std::to_string(n) + "x" + std::to_string(p) + " matrix");
  if (!X.allFinite()) throw NumericError("PCA input contains non-finite values");
  PCAModel m;
  m.k = k;
  m.center = X.colwise().mean().transpose();
  Eigen::MatrixXd Z = X.rowwise() - m.center.transpose();
  if (scale) {
    m.scale = (Z.colwise().squaredNorm() / static_cast<double>(n - 1)).cwiseSqrt().transpose();
    for (Eigen::Index j = 0; j < p; ++j)
      if (m.scale(j) <= 0.0) m.scale(j) = 1.0;
    Z = Z.array().rowwise() / m.scale.transpose().array();
  }
  const Eigen::MatrixXd C = (Z.transpose() * Z) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success) throw NumericError("PCA eigendecomposition failed");
  m.loadings.resize(p, k);
  m.eigenvalues.resize(k);
  for (int i = 0; i < k; ++i) {
    const Eigen::Index src = p - 1 - i;
    Eigen::VectorXd v = es.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    m.loadings.col(i) = v;
    m.eigenvalues(i) = es.eigenvalues()(src);
  }
  return m;
}

Eigen::MatrixXd pca_transform(const PCAModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.center.size())
    throw ShapeError("PCA model expects " + std::to_string(model.center.size()) +
                     " columns, got " + std::to_string(X.cols()));
  Eigen::MatrixXd Z = X.rowwise() - model.center.transpose();
  if (model.scale.size() > 0) Z = Z.array().rowwise() / model.scale.transpose().array();
  return Z * model.loadings;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json PCAModel::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (Eigen::Index i = 0; i < loadings.cols(); ++i) cols.push_back(vec_json(loadings.col(i)));
  return {{"k", k}, {"center", vec_json(center)}, {"scale", vec_json(scale)},
          {"eigenvalues", vec_json(eigenvalues)}, {"loadings", cols}};
}

PCAModel PCAModel::from_json(const nlohmann::json& j) {
  PCAModel m;
  m.k = j.at("k").get<int>();
  m.center = vec_from(j.at("center"));
  m.scale = vec_from(j.at("scale"));
  m.eigenvalues = vec_from(j.at("eigenvalues"));
  const auto& cols = j.at("loadings");
  m.loadings.resize(m.center.size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const auto v = vec_from(cols[i]);
    if (v.size() != m.center.size()) throw ShapeError("PCA loadings do not match the center");
    m.loadings.col(static_cast<Eigen::Index>(i)) = v;
  }
  if (m.k != m.loadings.cols()) throw ShapeError("PCA k does not match the loadings");
  return m;
}

Split split(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("split fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_stream(seed, 0);
  // Explicit Fisher-Yates so the permutation does not depend on the
  // standard library's shuffle.
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  const auto n_train =
      std::min(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

int FactorMapping::index_of(const std::string& value, std::size_t row, int J) const {
  const auto where = [&] {
    return " at row " + std::to_string(row + 1) + ", column '" + column + "'";
  };
  if (!levels.empty()) {
    const auto it = std::find(levels.begin(), levels.end(), value);
    if (it == levels.end()) throw RangeError("unknown factor level '" + value + "'" + where());
    const int j = static_cast<int>(it - levels.begin()) + 1;
    if (j > J) throw RangeError("factor level '" + value + "' maps past J=" + std::to_string(J) + where());
    return j;
  }
  int j = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), j);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw DataError("factor value '" + value + "' is not an integer" + where());
  if (j < 1 || j > J)
    throw RangeError("factor value " + value + " outside 1.." + std::to_string(J) + where());
  return j;
}

std::vector<GroupIndex> factor_indices(const Table& table,
                                       const std::vector<FactorMapping>& factors,
                                       const FactorConfig& cfg) {
  if (static_cast<int>(factors.size()) != cfg.n_groups())
    throw ConfigError("expected " + std::to_string(cfg.n_groups()) + " factor columns, got " +
                      std::to_string(factors.size()));
  std::vector<std::vector<std::string>> values;
  for (const auto& f : factors) values.push_back(table.text(f.column));
  std::vector<GroupIndex> out;
  out.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::vector<int> idx(factors.size());
    for (std::size_t n = 0; n < factors.size(); ++n)
      idx[n] = factors[n].index_of(values[n][r], r, cfg.factors_per_group()[n]);
    out.emplace_back(std::move(idx));
  }
  return out;
}

GroupedDataset group_by_factors(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const std::vector<GroupIndex>& groups, const FactorConfig& cfg,
                                std::vector<std::string> feature_names) {
  if (X.rows() != y.size() || static_cast<std::size_t>(X.rows()) != groups.size())
    throw ShapeError("features, response and group labels disagree on the row count");
  GroupedDataset data(cfg, static_cast<int>(X.cols()));
  data.feature_names = std::move(feature_names);
  data.source_rows.assign(cfg.num_cells(), {});
  for (std::size_t r = 0; r < groups.size(); ++r) data.source_rows[flat_index(groups[r], cfg)].push_back(r);
  for (std::size_t g = 0; g < cfg.num_cells(); ++g) {
    const auto& rows = data.source_rows[g];
    const auto m = static_cast<Eigen::Index>(rows.size());
    data.X[g].resize(m, X.cols());
    data.y[g].resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      data.X[g].row(i) = X.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
      data.y[g](i) = y(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
    }
  }
  data.validate();
  return data;
}

GroupedDataset group_by_factors(const Table& table, const std::vector<FactorMapping>& factors,
                                const FactorConfig& cfg,
                                const std::vector<std::string>& feature_columns,
                                const std::string& response_column) {
  const auto X = numeric_matrix(table, feature_columns);
  const auto yv = table.numeric(response_column);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
  return group_by_factors(X, y, factor_indices(table, factors, cfg), cfg, feature_columns);
}

void GroupedDataset::validate() const {
  if (X.size() != cfg.num_cells() || y.size() != cfg.num_cells())
    throw ShapeError("dataset must hold one matrix and one response vector per factor combination");
  const int p = dim();
  for (std::size_t g = 0; g < X.size(); ++g) {
    if (X[g].cols() != p) throw ShapeError("group " + std::to_string(g) + " has a different feature count");
    if (X[g].rows() != y[g].size())
      throw ShapeError("group " + std::to_string(g) + " has mismatched X and y row counts");
    if (!X[g].allFinite() || !y[g].allFinite())
      throw NumericError("group " + std::to_string(g) + " contains non-finite values");
  }
  if (!feature_names.empty() && static_cast<int>(feature_names.size()) != p)
    throw ShapeError("feature_names does not match the feature count");
  if (!source_rows.empty()) {
    if (source_rows.size() != X.size()) throw ShapeError("source_rows must have one entry per group");
    for (std::size_t g = 0; g < X.size(); ++g)
      if (static_cast<Eigen::Index>(source_rows[g].size()) != X[g].rows())
        throw ShapeError("source_rows does not match group " + std::to_string(g));
  }
}

Preprocessor Preprocessor::fit(const Table& train, const CsvSchema& schema,
                               const std::vector<FactorMapping>& factors, const FactorConfig& cfg,
                               const PreprocessOptions& options) {
  check_schema(train, schema, true, "training data");
  Preprocessor p;
  p.schema = schema;
  p.factors = factors;
  p.cfg = cfg;
  p.options = options;
  p.encoder = BinaryEncoder::fit(train, schema.categorical_columns, options.coding);
  p.feature_names = p.encoder.expand(schema.feature_columns);
  if (p.feature_names.empty()) throw ConfigError("no feature columns");
  if (options.pca_k > 0) {
    const auto X = numeric_matrix(p.encoder.transform(train), p.feature_names);
    p.pca = pca_fit(X, options.pca_k, options.pca_scale);
    p.feature_names.clear();
    for (int i = 0; i < options.pca_k; ++i) p.feature_names.push_back("pc" + std::to_string(i + 1));
  }
  return p;
}

ProcessedRows Preprocessor::apply(const Table& table, bool with_response) const {
  check_schema(table, schema, with_response, "input data");
  ProcessedRows out;
  const auto encoded = encoder.transform(table);
  out.X = numeric_matrix(encoded, encoder.expand(schema.feature_columns));
  if (pca) out.X = pca_transform(*pca, out.X);
  if (with_response) {
    const auto yv = table.numeric(schema.response_column);
    out.y.resize(static_cast<Eigen::Index>(yv.size()));
    for (std::size_t r = 0; r < yv.size(); ++r) {
      if (options.log1p_response && yv[r] <= -1.0)
        throw DataError("log1p needs responses above -1; row " + std::to_string(r + 1) + " has " +
                        std::to_string(yv[r]));
      out.y(static_cast<Eigen::Index>(r)) = options.log1p_response ? std::log1p(yv[r]) : yv[r];
    }
  }
  out.groups = factor_indices(table, factors, cfg);
  return out;
}

GroupedDataset Preprocessor::grouped(const Table& table) const {
  const auto rows = apply(table, true);
  return group_by_factors(rows.X, rows.y, rows.groups, cfg, feature_names);
}

double Preprocessor::response_from_model(double v) const {
  return options.log1p_response ? std::expm1(v) : v;
}

nlohmann::json Preprocessor::to_json() const {
  nlohmann::json fs = nlohmann::json::array();
  for (const auto& f : factors) fs.push_back({{"column", f.column}, {"levels", f.levels}});
  nlohmann::json j = {
      {"schema",
       {{"factor_columns", schema.factor_columns},
        {"feature_columns", schema.feature_columns},
        {"response_column", schema.response_column},
        {"categorical_columns", schema.categorical_columns}}},
      {"factors", fs},
      {"factors_per_group", cfg.factors_per_group()},
      {"bases_per_group", cfg.bases_per_group()},
      {"options",
       {{"pca_k", options.pca_k},
        {"pca_scale", options.pca_scale},
        {"log1p_response", options.log1p_response},
        {"coding", coding_name(options.coding)}}},
      {"encoder", encoder.to_json()},
      {"feature_names", feature_names},
      {"pca", pca ? pca->to_json() : nlohmann::json(nullptr)}};
  return j;
}

Preprocessor Preprocessor::from_json(const nlohmann::json& j) {
  try {
    Preprocessor p;
    const auto& s = j.at("schema");
    p.schema.factor_columns = s.at("factor_columns").get<std::vector<std::string>>();
    p.schema.feature_columns = s.at("feature_columns").get<std::vector<std::string>>();
    p.schema.response_column = s.at("response_column").get<std::string>();
    p.schema.categorical_columns = s.at("categorical_columns").get<std::vector<std::string>>();
    for (const auto& f : j.at("factors"))
      p.factors.push_back({f.at("column").get<std::string>(), f.at("levels").get<std::vector<std::string>>()});
    p.cfg = FactorConfig(j.at("factors_per_group").get<Dims>(), j.at("bases_per_group").get<Dims>());
    const auto& o = j.at("options");
    p.options.pca_k = o.at("pca_k").get<int>();
    p.options.pca_scale = o.at("pca_scale").get<bool>();
    p.options.log1p_response = o.at("log1p_response").get<bool>();
    p.options.coding = parse_coding(o.at("coding").get<std::string>());
    p.encoder = BinaryEncoder::from_json(j.at("encoder"));
    p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (!j.at("pca").is_null()) p.pca = PCAModel::from_json(j.at("pca"));
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed preprocessing record: ") + e.what());
  }
}

}  // namespace mldp
