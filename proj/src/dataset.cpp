#include "pfr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "pfr/rng.hpp"

namespace pfr {

namespace {

constexpr const char* kMissing = "?";

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// One CSV record, comma-separated with optional double-quoted fields.
std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

int SensitiveSpec::class_index(std::string_view value) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == value) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> SensitiveColumn::privileged_indicator() const {
  std::vector<int> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = codes[i] == privileged_code ? 1 : 0;
  return out;
}

SensitiveColumn SensitiveColumn::subset(const std::vector<std::size_t>& rows) const {
  SensitiveColumn out;
  out.spec = spec;
  out.privileged_code = privileged_code;
  out.codes.reserve(rows.size());
  for (std::size_t r : rows) out.codes.push_back(codes.at(r));
  return out;
}

const SensitiveColumn& TabularDataset::sensitive_column(std::string_view name) const {
  for (const auto& s : sensitive) {
    if (s.spec.column == name) return s;
  }
  throw ParameterError("unknown sensitive column: " + std::string(name));
}

DatasetConfig DatasetConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dataset config: invalid JSON: ") + e.what());
  }
  DatasetConfig cfg;
  try {
    cfg.path = j.value("path", "");
    if (!j.contains("target_column")) throw ConfigError("dataset config: missing target_column");
    cfg.target_column = j.at("target_column").get<std::string>();
    cfg.positive_label = j.value("positive_label", "");
    if (j.contains("sensitive")) {
      for (const auto& s : j.at("sensitive")) {
        if (!s.contains("column") || !s.contains("privileged_value")) {
          throw ConfigError("dataset config: sensitive entries need column and privileged_value");
        }
        cfg.sensitive.push_back({s.at("column").get<std::string>(),
                                 s.at("privileged_value").get<std::string>()});
      }
    }
    cfg.numeric_columns = j.value("numeric_columns", std::vector<std::string>{});
    cfg.categorical_columns = j.value("categorical_columns", std::vector<std::string>{});
    cfg.ignore_columns = j.value("ignore_columns", std::vector<std::string>{});
    cfg.strict_categories = j.value("strict_categories", true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dataset config: ") + e.what());
  }
  return cfg;
}

DatasetConfig DatasetConfig::from_json_file(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open dataset config: " + config_path);
  std::stringstream ss;
  ss << in.rdbuf();
  DatasetConfig cfg = from_json_text(ss.str());
  // Relative data paths resolve against the config file's directory.
  if (!cfg.path.empty() && cfg.path.front() != '/') {
    auto slash = config_path.find_last_of('/');
    if (slash != std::string::npos) cfg.path = config_path.substr(0, slash + 1) + cfg.path;
  }
  return cfg;
}

TabularDataset load_csv(const std::string& path, const DatasetConfig& config) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty dataset file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = parse_csv_line(line);

  std::unordered_map<std::string, std::size_t> col_pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].empty()) throw SchemaError("empty column name in header");
    if (!col_pos.emplace(header[i], i).second) {
      throw SchemaError("duplicate column name: " + header[i]);
    }
  }

  auto require_column = [&](const std::string& name) {
    auto it = col_pos.find(name);
    if (it == col_pos.end()) throw SchemaError("missing column: " + name);
    return it->second;
  };

  const std::size_t target_pos = require_column(config.target_column);
  std::map<std::size_t, std::string> sensitive_pos;  // position -> privileged value
  for (const auto& s : config.sensitive) {
    std::size_t pos = require_column(s.column);
    if (pos == target_pos) throw SchemaError("sensitive column equals target: " + s.column);
    if (!sensitive_pos.emplace(pos, s.privileged_value).second) {
      throw SchemaError("duplicate sensitive column: " + s.column);
    }
  }
  for (const auto& name : config.ignore_columns) require_column(name);
  for (const auto& name : config.numeric_columns) require_column(name);
  for (const auto& name : config.categorical_columns) require_column(name);

  std::unordered_set<std::size_t> ignored;
  for (const auto& name : config.ignore_columns) ignored.insert(col_pos.at(name));

  // Complete-case rows only: any missing marker drops the row.
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = parse_csv_line(line);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << line_no << ": expected " << header.size() << " fields, got "
          << fields.size();
      throw SchemaError(msg.str());
    }
    bool missing = false;
    for (const auto& f : fields) {
      if (f == kMissing) {
        missing = true;
        break;
      }
    }
    if (!missing) rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw SchemaError("dataset has no complete rows: " + path);
  const std::size_t n = rows.size();

  // Target: binary via positive_label, or literal 0/1.
  std::vector<int> target(n);
  std::set<std::string> target_values;
  for (const auto& r : rows) target_values.insert(r[target_pos]);
  if (config.positive_label.empty()) {
    for (const auto& v : target_values) {
      if (v != "0" && v != "1") {
        throw UnsupportedTargetError("target column " + config.target_column +
                                     " holds non-binary value '" + v +
                                     "' and no positive_label is configured");
      }
    }
    for (std::size_t i = 0; i < n; ++i) target[i] = rows[i][target_pos] == "1" ? 1 : 0;
  } else {
    if (target_values.count(config.positive_label) == 0) {
      throw UnsupportedTargetError("positive_label '" + config.positive_label +
                                   "' never occurs in target column");
    }
    if (target_values.size() > 2) {
      throw UnsupportedTargetError("target column " + config.target_column + " holds " +
                                   std::to_string(target_values.size()) +
                                   " distinct values; binary targets only");
    }
    for (std::size_t i = 0; i < n; ++i) {
      target[i] = rows[i][target_pos] == config.positive_label ? 1 : 0;
    }
  }

  TabularDataset ds;
  ds.target = std::move(target);

  // Sensitive columns, in config order.
  for (const auto& s : config.sensitive) {
    std::size_t pos = col_pos.at(s.column);
    SensitiveColumn col;
    col.spec.column = s.column;
    col.spec.privileged_value = s.privileged_value;
    std::set<std::string> classes;
    for (const auto& r : rows) classes.insert(r[pos]);
    col.spec.classes.assign(classes.begin(), classes.end());
    if (col.spec.classes.size() < 2) {
      throw SchemaError("sensitive column " + s.column + " has a single class");
    }
    col.privileged_code = col.spec.class_index(s.privileged_value);
    if (col.privileged_code < 0) {
      throw ConfigError("privileged value '" + s.privileged_value + "' not found in column " +
                        s.column);
    }
    col.codes.reserve(n);
    for (const auto& r : rows) col.codes.push_back(col.spec.class_index(r[pos]));
    ds.sensitive.push_back(std::move(col));
  }

  // Feature columns: everything but target, sensitive, and ignored.
  for (std::size_t pos = 0; pos < header.size(); ++pos) {
    if (pos == target_pos || sensitive_pos.count(pos) || ignored.count(pos)) continue;
    const std::string& name = header[pos];

    bool numeric;
    if (contains(config.numeric_columns, name)) {
      numeric = true;
    } else if (contains(config.categorical_columns, name)) {
      numeric = false;
    } else {
      numeric = true;
      for (const auto& r : rows) {
        double v;
        if (!parse_double(r[pos], v)) {
          numeric = false;
          break;
        }
      }
    }

    FeatureColumn col;
    col.schema.name = name;
    if (numeric) {
      col.schema.kind = ColumnKind::numeric;
      col.numeric.reserve(n);
      for (const auto& r : rows) {
        double v;
        if (!parse_double(r[pos], v)) {
          throw SchemaError("column " + name + " configured numeric but holds '" + r[pos] + "'");
        }
        col.numeric.push_back(v);
      }
    } else {
      col.schema.kind = ColumnKind::categorical;
      std::set<std::string> categories;
      for (const auto& r : rows) categories.insert(r[pos]);
      if (categories.size() < 2) {
        throw SchemaError("categorical column " + name + " has fewer than 2 categories");
      }
      col.schema.categories.assign(categories.begin(), categories.end());
      std::unordered_map<std::string, int> index;
      for (std::size_t i = 0; i < col.schema.categories.size(); ++i) {
        index[col.schema.categories[i]] = static_cast<int>(i);
      }
      col.codes.reserve(n);
      for (const auto& r : rows) col.codes.push_back(index.at(r[pos]));
    }
    ds.features.push_back(std::move(col));
  }

  return ds;
}

std::optional<std::size_t> EncodedMatrix::column_index(std::string_view id) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> EncodedMatrix::column_ids() const {
  std::vector<std::string> ids;
  ids.reserve(columns.size());
  for (const auto& c : columns) ids.push_back(c.id);
  return ids;
}

EncodedMatrix EncodedMatrix::select_rows(const std::vector<std::size_t>& rows) const {
  EncodedMatrix out;
  out.columns = columns;
  out.scaling = scaling;
  out.n_rows = rows.size();
  const std::size_t d = n_cols();
  out.values.resize(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* src = row(rows[i]);
    std::copy(src, src + d, out.values.begin() + i * d);
  }
  return out;
}

EncodedMatrix one_hot_encode(const TabularDataset& dataset) {
  EncodedMatrix m;
  m.n_rows = dataset.n_rows();
  for (const auto& col : dataset.features) {
    if (col.schema.kind == ColumnKind::numeric) {
      m.columns.push_back({col.schema.name, col.schema.name, std::nullopt});
    } else {
      for (const auto& cat : col.schema.categories) {
        m.columns.push_back({col.schema.name + "=" + cat, col.schema.name, cat});
      }
    }
  }
  const std::size_t d = m.columns.size();
  m.values.assign(m.n_rows * d, 0.0);
  std::size_t offset = 0;
  for (const auto& col : dataset.features) {
    if (col.schema.kind == ColumnKind::numeric) {
      for (std::size_t r = 0; r < m.n_rows; ++r) m.values[r * d + offset] = col.numeric[r];
      offset += 1;
    } else {
      for (std::size_t r = 0; r < m.n_rows; ++r) {
        m.values[r * d + offset + static_cast<std::size_t>(col.codes[r])] = 1.0;
      }
      offset += col.schema.categories.size();
    }
  }
  return m;
}

EncodedMatrix encode_with_columns(const TabularDataset& dataset,
                                  const std::vector<EncodedColumn>& columns,
                                  bool strict_categories) {
  EncodedMatrix m;
  m.columns = columns;
  m.n_rows = dataset.n_rows();
  const std::size_t d = columns.size();
  m.values.assign(m.n_rows * d, 0.0);

  // Reference column id -> position.
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t j = 0; j < d; ++j) position.emplace(columns[j].id, j);

  std::unordered_set<std::string> seen_attributes;
  for (const auto& col : dataset.features) {
    seen_attributes.insert(col.schema.name);
    if (col.schema.kind == ColumnKind::numeric) {
      auto it = position.find(col.schema.name);
      if (it == position.end()) continue;  // extra dataset column, not in reference
      for (std::size_t r = 0; r < m.n_rows; ++r) m.values[r * d + it->second] = col.numeric[r];
    } else {
      // Map each category to its indicator position, if the reference has one.
      std::vector<std::optional<std::size_t>> cat_pos(col.schema.categories.size());
      for (std::size_t c = 0; c < col.schema.categories.size(); ++c) {
        auto it = position.find(col.schema.name + "=" + col.schema.categories[c]);
        if (it != position.end()) cat_pos[c] = it->second;
      }
      for (std::size_t r = 0; r < m.n_rows; ++r) {
        const auto& p = cat_pos[static_cast<std::size_t>(col.codes[r])];
        if (p) {
          m.values[r * d + *p] = 1.0;
        } else if (strict_categories) {
          throw ValidationError("unseen category " + col.schema.name + "=" +
                                col.schema.categories[static_cast<std::size_t>(col.codes[r])]);
        }
      }
    }
  }
  for (const auto& ref : columns) {
    if (!seen_attributes.count(ref.source_attribute)) {
      throw ColumnMismatchError("dataset lacks attribute for reference column: " + ref.id);
    }
  }
  return m;
}

EncodedMatrix min_max_scale(const EncodedMatrix& m) {
  if (m.n_rows == 0) throw ParameterError("min_max_scale: matrix has no rows");
  EncodedMatrix out;
  out.columns = m.columns;
  out.n_rows = m.n_rows;
  const std::size_t d = m.n_cols();
  out.scaling.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = m.at(0, j), hi = m.at(0, j);
    for (std::size_t r = 1; r < m.n_rows; ++r) {
      lo = std::min(lo, m.at(r, j));
      hi = std::max(hi, m.at(r, j));
    }
    out.scaling[j] = {lo, hi};
  }
  out.values.resize(m.values.size());
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto& p = out.scaling[j];
      // Constant columns map to zero rather than dividing by zero.
      out.values[r * d + j] = p.max > p.min ? (m.at(r, j) - p.min) / (p.max - p.min) : 0.0;
    }
  }
  return out;
}

EncodedMatrix min_max_apply(const EncodedMatrix& m, const std::vector<ScalingParams>& params) {
  if (params.size() != m.n_cols()) {
    throw ParameterError("min_max_apply: parameter count does not match columns");
  }
  EncodedMatrix out;
  out.columns = m.columns;
  out.scaling = params;
  out.n_rows = m.n_rows;
  const std::size_t d = m.n_cols();
  out.values.resize(m.values.size());
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto& p = params[j];
      out.values[r * d + j] = p.max > p.min ? (m.at(r, j) - p.min) / (p.max - p.min) : 0.0;
    }
  }
  return out;
}

std::pair<EncodedMatrix, std::vector<int>> oversample_minority(const EncodedMatrix& m,
                                                               const std::vector<int>& labels,
                                                               std::uint64_t seed) {
  if (labels.size() != m.n_rows) {
    throw ParameterError("oversample_minority: label count does not match rows");
  }
  std::vector<std::size_t> class0, class1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? class1 : class0).push_back(i);
  }
  if (class0.empty() || class1.empty()) {
    throw DegenerateLabelsError("oversample_minority: single-class labels");
  }

  Rng rng(seed);
  std::vector<std::size_t> rows(labels.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto& minority = class1.size() < class0.size() ? class1 : class0;
  const std::size_t deficit =
      class0.size() > class1.size() ? class0.size() - class1.size() : class1.size() - class0.size();
  for (std::size_t k = 0; k < deficit; ++k) {
    rows.push_back(minority[rng.next_below(minority.size())]);
  }
  rng.shuffle(rows);

  std::vector<int> out_labels;
  out_labels.reserve(rows.size());
  for (std::size_t r : rows) out_labels.push_back(labels[r]);
  return {m.select_rows(rows), std::move(out_labels)};
}

SplitResult split(const EncodedMatrix& m, const std::vector<int>& labels, double fraction,
                  std::uint64_t seed) {
  if (labels.size() != m.n_rows) throw ParameterError("split: label count does not match rows");
  if (m.n_rows < 2) throw ParameterError("split: need at least 2 rows");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ParameterError("split: fraction must lie in (0, 1)");
  }

  // Stratified: shuffle within each label class, take the leading fraction.
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  std::vector<std::size_t> train_rows, eval_rows;
  std::uint64_t salt = 0;
  for (auto& [label, rows] : by_class) {
    Rng rng(mix_seed(seed, 0x5714, salt++));
    rng.shuffle(rows);
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
    take = std::min(take, rows.size());
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + take);
    eval_rows.insert(eval_rows.end(), rows.begin() + take, rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(eval_rows.begin(), eval_rows.end());

  SplitResult out;
  out.train = m.select_rows(train_rows);
  out.eval = m.select_rows(eval_rows);
  for (std::size_t r : train_rows) out.train_labels.push_back(labels[r]);
  for (std::size_t r : eval_rows) out.eval_labels.push_back(labels[r]);
  out.train_rows = std::move(train_rows);
  out.eval_rows = std::move(eval_rows);
  return out;
}

EncodedMatrix drop_columns(const EncodedMatrix& m, const std::vector<std::string>& ids) {
  std::unordered_set<std::string> to_drop;
  for (const auto& id : ids) {
    if (!m.column_index(id)) throw ParameterError("drop_columns: unknown column id: " + id);
    to_drop.insert(id);
  }
  EncodedMatrix out;
  out.n_rows = m.n_rows;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < m.n_cols(); ++j) {
    if (to_drop.count(m.columns[j].id)) continue;
    keep.push_back(j);
    out.columns.push_back(m.columns[j]);
    if (m.scaled()) out.scaling.push_back(m.scaling[j]);
  }
  out.values.resize(out.n_rows * keep.size());
  const std::size_t d_out = keep.size();
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    const double* src = m.row(r);
    double* dst = out.values.data() + r * d_out;
    for (std::size_t k = 0; k < d_out; ++k) dst[k] = src[keep[k]];
  }
  return out;
}

}  // namespace pfr
