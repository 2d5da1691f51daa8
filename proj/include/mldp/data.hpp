#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mldp/dataset.hpp"
#include "mldp/error.hpp"
#include "mldp/multiindex.hpp"

namespace mldp {

enum class ColumnType { numeric, text };

/// Raw CSV contents. Cells are kept as text; numeric() parses on demand and
/// reports the offending row (1-based, header excluded) and column.
class Table {
 public:
  Table() = default;
  Table(std::vector<std::string> columns, std::vector<std::vector<std::string>> rows);

  std::size_t rows() const { return cells_.size(); }
  std::size_t cols() const { return columns_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::string>& row(std::size_t r) const { return cells_[r]; }
  const std::string& cell(std::size_t r, std::size_t c) const { return cells_[r][c]; }

  bool has_column(const std::string& name) const;
  std::size_t column_index(const std::string& name) const;
  ColumnType column_type(const std::string& name) const;

  std::vector<double> numeric(const std::string& name) const;
  std::vector<std::string> text(const std::string& name) const;

  Table subset(const std::vector<std::size_t>& row_indices) const;
  void add_column(const std::string& name, const std::vector<std::string>& values);

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> cells_;
};

/// Column roles of a dataset file.
struct CsvSchema {
  std::vector<std::string> factor_columns;
  std::vector<std::string> feature_columns;
  std::string response_column;
  std::vector<std::string> categorical_columns;

  bool is_categorical(const std::string& name) const;
};

Table parse_csv(std::istream& is, const std::string& source = "<stream>");
void write_csv(const Table& table, std::ostream& os);

/// Reads a CSV file and checks it against the schema: every named column
/// exists, numeric features and the response parse as finite numbers.
/// require_response=false admits files without a response column.
Table load_csv(const std::string& path, const CsvSchema& schema, bool require_response = true);
void check_schema(const Table& table, const CsvSchema& schema, bool require_response = true,
                  const std::string& source = "<table>");

enum class Coding { one_hot, dummy };
Coding parse_coding(const std::string& name);
std::string coding_name(Coding c);

/// Categorical-to-indicator coding with levels sorted lexicographically.
/// one_hot yields c indicator columns for c levels; dummy drops the first.
struct BinaryEncoder {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> levels;
  Coding coding = Coding::one_hot;

  static BinaryEncoder fit(const Table& table, const std::vector<std::string>& categorical,
                           Coding coding = Coding::one_hot);
  /// Replaces every encoded column, in place, by its indicator columns named
  /// "column=level". Other columns pass through unchanged.
  Table transform(const Table& table) const;
  /// Expands a list of column names the way transform() expands the table.
  std::vector<std::string> expand(const std::vector<std::string>& names) const;

  nlohmann::json to_json() const;
  static BinaryEncoder from_json(const nlohmann::json& j);
};

Table binary_encode(const Table& table, const std::vector<std::string>& categorical,
                    Coding coding = Coding::one_hot);

Eigen::MatrixXd numeric_matrix(const Table& table, const std::vector<std::string>& names);

struct PCAModel {
  Eigen::VectorXd center;
  /// Per-column divisor; empty when scaling is off.
  Eigen::VectorXd scale;
  Eigen::MatrixXd loadings;
  Eigen::VectorXd eigenvalues;
  int k = 0;

  nlohmann::json to_json() const;
  static PCAModel from_json(const nlohmann::json& j);
};

/// Top-k principal directions of the centered (optionally standardized)
/// training matrix, by descending eigenvalue. Each direction is signed so
/// its largest-magnitude entry is positive.
PCAModel pca_fit(const Eigen::MatrixXd& X, int k, bool scale = false);
Eigen::MatrixXd pca_transform(const PCAModel& model, const Eigen::MatrixXd& X);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Random partition of 0..n-1 with ceil(fraction * n) training rows. Both
/// index lists are sorted.
Split split(std::size_t n, double fraction, std::uint64_t seed);

/// How one factor column maps onto 1..J_n: by position in an explicit level
/// list, or, when levels is empty, by reading the cell as that integer.
struct FactorMapping {
  std::string column;
  std::vector<std::string> levels;

  int index_of(const std::string& value, std::size_t row, int J) const;
};

std::vector<GroupIndex> factor_indices(const Table& table,
                                       const std::vector<FactorMapping>& factors,
                                       const FactorConfig& cfg);

GroupedDataset group_by_factors(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const std::vector<GroupIndex>& groups, const FactorConfig& cfg,
                                std::vector<std::string> feature_names = {});
GroupedDataset group_by_factors(const Table& table, const std::vector<FactorMapping>& factors,
                                const FactorConfig& cfg,
                                const std::vector<std::string>& feature_columns,
                                const std::string& response_column);

struct PreprocessOptions {
  /// 0 keeps every feature.
  int pca_k = 0;
  bool pca_scale = false;
  bool log1p_response = false;
  Coding coding = Coding::one_hot;
};

/// Rows after preprocessing, in input order.
struct ProcessedRows {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<GroupIndex> groups;
};

/// The fitted preprocessing chain: binary coding, then optional PCA, with
/// an optional log1p on the response. Fit on training rows only; the same
/// transformation is then applied to any table with the same schema.
struct Preprocessor {
  CsvSchema schema;
  std::vector<FactorMapping> factors;
  FactorConfig cfg{{1}, {1}};
  PreprocessOptions options;
  BinaryEncoder encoder;
  std::optional<PCAModel> pca;
  std::vector<std::string> feature_names;

  static Preprocessor fit(const Table& train, const CsvSchema& schema,
                          const std::vector<FactorMapping>& factors, const FactorConfig& cfg,
                          const PreprocessOptions& options);
  ProcessedRows apply(const Table& table, bool with_response = true) const;
  GroupedDataset grouped(const Table& table) const;
  /// Maps a prediction on the model scale back to the response scale.
  double response_from_model(double v) const;
  int dim() const { return static_cast<int>(feature_names.size()); }

  nlohmann::json to_json() const;
  static Preprocessor from_json(const nlohmann::json& j);
};

}  // namespace mldp
