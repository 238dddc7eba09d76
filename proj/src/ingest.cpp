#include "anemiakit/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace anemiakit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Outcome and derived-variable rules

void AnemiaThresholds::validate() const {
  if (!(moderate_min > 0 && moderate_min < mild_min &&
        mild_min < no_anemia_min)) {
    throw Error(ErrorCode::kInvalidArgument,
                "anemia thresholds must satisfy 0 < moderate < mild < none");
  }
}

int label_from_hemoglobin(double hb_g_dl, const AnemiaThresholds& t) {
  if (!std::isfinite(hb_g_dl) || hb_g_dl <= 0) {
    throw Error(ErrorCode::kInvalidMeasurement,
                "hemoglobin must be a positive finite value in g/dL");
  }
  return hb_g_dl < t.no_anemia_min ? 1 : 0;
}

NutritionStatus derive_nutrition_status(std::span<const double> z_scores) {
  bool any = false;
  bool inside = true;
  for (double z : z_scores) {
    if (!std::isfinite(z)) continue;
    any = true;
    if (z < -2.0 || z > 2.0) inside = false;
  }
  if (!any) {
    throw Error(ErrorCode::kMissingAnthropometry,
                "no finite anthropometric z-score available");
  }
  return inside ? NutritionStatus::kNourished : NutritionStatus::kMalnourished;
}

// ---------------------------------------------------------------------------
// Schema

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kOrdinal: return "ordinal";
    case FeatureKind::kOneHot: return "one_hot";
    case FeatureKind::kBinary: return "binary";
  }
  return "?";
}

std::string_view to_string(ImputeRule rule) {
  switch (rule) {
    case ImputeRule::kNone: return "none";
    case ImputeRule::kMedian: return "median";
    case ImputeRule::kMode: return "mode";
  }
  return "?";
}

namespace {

FeatureKind parse_kind(const std::string& s) {
  if (s == "ordinal") return FeatureKind::kOrdinal;
  if (s == "one_hot") return FeatureKind::kOneHot;
  if (s == "binary") return FeatureKind::kBinary;
  throw Error(ErrorCode::kSchemaViolation, "unknown feature kind '" + s + "'");
}

ImputeRule parse_impute(const std::string& s) {
  if (s == "none") return ImputeRule::kNone;
  if (s == "median") return ImputeRule::kMedian;
  if (s == "mode") return ImputeRule::kMode;
  throw Error(ErrorCode::kSchemaViolation, "unknown impute rule '" + s + "'");
}

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  if (std::nearbyint(v) == v && std::fabs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

}  // namespace

void FeatureSpec::validate() const {
  if (name.empty()) throw Error(ErrorCode::kSchemaViolation, "feature without name");
  if (levels.empty()) {
    throw Error(ErrorCode::kSchemaViolation, "feature '" + name + "' has no levels");
  }
  std::set<std::string> seen(levels.begin(), levels.end());
  if (seen.size() != levels.size()) {
    throw Error(ErrorCode::kSchemaViolation,
                "feature '" + name + "' has duplicate levels");
  }
  if (level_index(reference_level) < 0) {
    throw Error(ErrorCode::kSchemaViolation, "feature '" + name +
                                                 "' reference level '" +
                                                 reference_level + "' not in levels");
  }
  if (kind == FeatureKind::kBinary && levels.size() != 2) {
    throw Error(ErrorCode::kSchemaViolation,
                "binary feature '" + name + "' must have exactly 2 levels");
  }
  if (cap) {
    for (const auto& l : levels) {
      if (!parse_number(l)) {
        throw Error(ErrorCode::kSchemaViolation,
                    "feature '" + name + "' has a cap but non-numeric level '" + l + "'");
      }
    }
  }
  if (!nutrition_z_columns.empty()) {
    if (kind != FeatureKind::kBinary || level_index("nourished") < 0 ||
        level_index("malnourished") < 0) {
      throw Error(ErrorCode::kSchemaViolation,
                  "derived nutrition feature '" + name +
                      "' must be binary with levels nourished/malnourished");
    }
  }
}

int FeatureSpec::level_index(std::string_view label) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == label) return static_cast<int>(i);
  }
  return -1;
}

int FeatureSpec::reference_index() const { return level_index(reference_level); }

void DatasetSchema::validate() const {
  if (label_name.empty()) throw Error(ErrorCode::kSchemaViolation, "schema has no label");
  if (features.empty()) throw Error(ErrorCode::kSchemaViolation, "schema has no features");
  thresholds.validate();
  std::set<std::string> names;
  for (const auto& f : features) {
    f.validate();
    if (!names.insert(f.name).second) {
      throw Error(ErrorCode::kSchemaViolation, "duplicate feature '" + f.name + "'");
    }
    if (f.name == label_name) {
      throw Error(ErrorCode::kSchemaViolation, "label '" + label_name + "' is also a feature");
    }
  }
  for (const auto& name : forced_includes) {
    if (feature_index(name) < 0) {
      throw Error(ErrorCode::kSchemaViolation,
                  "forced include '" + name + "' is not a feature");
    }
  }
}

int DatasetSchema::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

bool DatasetSchema::is_missing(std::string_view cell) const {
  return std::find(missing_tokens.begin(), missing_tokens.end(), cell) !=
         missing_tokens.end();
}

DatasetSchema DatasetSchema::from_json(const json& doc) {
  DatasetSchema s;
  try {
    s.label_name = doc.at("label_name").get<std::string>();
    if (doc.contains("label_kind")) {
      const auto kind = doc["label_kind"].get<std::string>();
      if (kind == "binary") {
        s.label_kind = LabelKind::kBinary;
      } else if (kind == "hemoglobin") {
        s.label_kind = LabelKind::kHemoglobin;
      } else {
        throw Error(ErrorCode::kSchemaViolation, "unknown label_kind '" + kind + "'");
      }
    }
    s.positive_label = doc.value("positive_label", s.positive_label);
    s.negative_label = doc.value("negative_label", s.negative_label);
    if (doc.contains("missing_tokens")) {
      s.missing_tokens = doc["missing_tokens"].get<std::vector<std::string>>();
    }
    if (doc.contains("forced_includes")) {
      s.forced_includes = doc["forced_includes"].get<std::vector<std::string>>();
    }
    if (doc.contains("thresholds")) {
      const auto& t = doc["thresholds"];
      s.thresholds.no_anemia_min = t.value("no_anemia_min", s.thresholds.no_anemia_min);
      s.thresholds.mild_min = t.value("mild_min", s.thresholds.mild_min);
      s.thresholds.moderate_min = t.value("moderate_min", s.thresholds.moderate_min);
    }
    for (const auto& f : doc.at("features")) {
      FeatureSpec spec;
      spec.name = f.at("name").get<std::string>();
      spec.kind = parse_kind(f.at("kind").get<std::string>());
      spec.levels = f.at("levels").get<std::vector<std::string>>();
      spec.reference_level = f.contains("reference_level")
                                 ? f["reference_level"].get<std::string>()
                                 : (spec.levels.empty() ? "" : spec.levels.front());
      spec.impute = parse_impute(f.value("impute", std::string("none")));
      if (f.contains("cap") && !f["cap"].is_null()) spec.cap = f["cap"].get<double>();
      if (f.contains("nutrition_z_columns")) {
        spec.nutrition_z_columns = f["nutrition_z_columns"].get<std::vector<std::string>>();
      }
      s.features.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("schema JSON: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::ordered_json DatasetSchema::to_json() const {
  nlohmann::ordered_json doc;
  doc["label_name"] = label_name;
  doc["label_kind"] = label_kind == LabelKind::kBinary ? "binary" : "hemoglobin";
  doc["positive_label"] = positive_label;
  doc["negative_label"] = negative_label;
  doc["missing_tokens"] = missing_tokens;
  doc["forced_includes"] = forced_includes;
  doc["thresholds"] = {{"no_anemia_min", thresholds.no_anemia_min},
                       {"mild_min", thresholds.mild_min},
                       {"moderate_min", thresholds.moderate_min}};
  auto features_doc = nlohmann::ordered_json::array();
  for (const auto& f : features) {
    nlohmann::ordered_json fj;
    fj["name"] = f.name;
    fj["kind"] = to_string(f.kind);
    fj["levels"] = f.levels;
    fj["reference_level"] = f.reference_level;
    fj["impute"] = to_string(f.impute);
    fj["cap"] = f.cap ? nlohmann::ordered_json(*f.cap) : nlohmann::ordered_json();
    if (!f.nutrition_z_columns.empty()) fj["nutrition_z_columns"] = f.nutrition_z_columns;
    features_doc.push_back(std::move(fj));
  }
  doc["features"] = std::move(features_doc);
  return doc;
}

DatasetSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open schema " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation,
                "schema " + path.string() + ": " + e.what());
  }
  return DatasetSchema::from_json(doc);
}

// ---------------------------------------------------------------------------
// Imputation

std::vector<std::string> impute_column(const RawColumn& column,
                                       const FeatureSpec& spec) {
  std::vector<std::optional<std::string>> cells = column;
  if (spec.cap) {
    for (auto& cell : cells) {
      if (!cell) continue;
      auto v = parse_number(*cell);
      if (!v) {
        throw Error(ErrorCode::kSchemaViolation, "feature '" + spec.name +
                                                     "': non-numeric value '" +
                                                     *cell + "' in capped column");
      }
      *cell = format_number(std::min(*v, *spec.cap));
    }
  }

  const bool has_missing =
      std::any_of(cells.begin(), cells.end(), [](const auto& c) { return !c; });
  std::vector<std::string> out;
  out.reserve(cells.size());
  if (!has_missing) {
    for (auto& c : cells) out.push_back(std::move(*c));
    return out;
  }
  if (spec.impute == ImputeRule::kNone) {
    throw Error(ErrorCode::kUnimputable,
                "feature '" + spec.name + "' has missing values and impute=none");
  }

  std::vector<const std::string*> observed;
  for (const auto& c : cells) {
    if (c) observed.push_back(&*c);
  }
  if (observed.empty()) {
    throw Error(ErrorCode::kUnimputable,
                "feature '" + spec.name + "' has no observed values");
  }

  std::string fill;
  if (spec.impute == ImputeRule::kMedian) {
    const bool numeric = std::all_of(spec.levels.begin(), spec.levels.end(),
                                     [](const auto& l) { return parse_number(l).has_value(); });
    if (numeric) {
      std::vector<double> values;
      for (const auto* s : observed) {
        auto v = parse_number(*s);
        if (!v) {
          throw Error(ErrorCode::kSchemaViolation, "feature '" + spec.name +
                                                       "': non-numeric value '" + *s + "'");
        }
        values.push_back(*v);
      }
      std::sort(values.begin(), values.end());
      fill = format_number(values[(values.size() - 1) / 2]);
    } else {
      std::vector<int> ranks;
      for (const auto* s : observed) {
        const int r = spec.level_index(*s);
        if (r < 0) {
          throw Error(ErrorCode::kSchemaViolation, "feature '" + spec.name +
                                                       "': unknown level '" + *s + "'");
        }
        ranks.push_back(r);
      }
      std::sort(ranks.begin(), ranks.end());
      fill = spec.levels[static_cast<std::size_t>(ranks[(ranks.size() - 1) / 2])];
    }
  } else {
    std::map<std::string, std::size_t> counts;
    for (const auto* s : observed) ++counts[*s];
    // Ties resolve to the earliest declared level, then lexicographically.
    auto order = [&](const std::string& s) {
      const int idx = spec.level_index(s);
      return idx < 0 ? static_cast<int>(spec.levels.size()) : idx;
    };
    const std::string* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [value, count] : counts) {
      if (!best || count > best_count ||
          (count == best_count && order(value) < order(*best))) {
        best = &value;
        best_count = count;
      }
    }
    fill = *best;
  }

  for (auto& c : cells) out.push_back(c ? std::move(*c) : fill);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::shared_ptr<const DatasetSchema> schema,
                 std::vector<std::vector<int>> columns, Labels labels)
    : schema_(std::move(schema)), columns_(std::move(columns)), labels_(std::move(labels)) {
  if (!schema_) throw Error(ErrorCode::kInvalidArgument, "dataset without schema");
  if (columns_.size() != schema_->features.size()) {
    throw Error(ErrorCode::kInvalidArgument, "column count does not match schema");
  }
  if (labels_.empty()) throw Error(ErrorCode::kInvalidArgument, "dataset has no rows");
  for (std::size_t f = 0; f < columns_.size(); ++f) {
    const auto& spec = schema_->features[f];
    if (columns_[f].size() != labels_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "ragged column '" + spec.name + "'");
    }
    for (std::size_t r = 0; r < columns_[f].size(); ++r) {
      const int code = columns_[f][r];
      if (code < 0 || code >= spec.cardinality()) {
        throw Error(ErrorCode::kSchemaViolation,
                    "row " + std::to_string(r) + " feature '" + spec.name +
                        "': level code out of range");
      }
    }
  }
  for (int y : labels_) {
    if (y != 0 && y != 1) throw Error(ErrorCode::kInvalidArgument, "labels must be 0/1");
  }
}

const std::string& Dataset::category(std::size_t row, std::size_t feature) const {
  return schema_->features[feature].levels[static_cast<std::size_t>(columns_[feature][row])];
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<std::vector<int>> cols(columns_.size());
  for (std::size_t f = 0; f < columns_.size(); ++f) {
    cols[f].reserve(rows.size());
    for (auto r : rows) cols[f].push_back(columns_[f].at(r));
  }
  Labels y;
  y.reserve(rows.size());
  for (auto r : rows) y.push_back(labels_.at(r));
  return Dataset(schema_, std::move(cols), std::move(y));
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char c;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::kIo, "unterminated quoted CSV field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

Dataset read_dataset_csv(std::istream& in, std::shared_ptr<const DatasetSchema> schema,
                         LoadReport* report) {
  const auto table = parse_csv(in);
  if (table.empty()) throw Error(ErrorCode::kIo, "CSV has no header row");
  const auto& header = table.front();
  auto find_column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::kSchemaViolation, "CSV lacks column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const auto& sch = *schema;
  const std::size_t label_col = find_column(sch.label_name);
  LoadReport rep;
  rep.rows_read = table.size() - 1;

  // Labels first: rows with a missing label are dropped listwise.
  std::vector<std::size_t> kept;
  Labels labels;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& row = table[r];
    if (row.size() != header.size()) {
      throw Error(ErrorCode::kSchemaViolation,
                  "CSV row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    const std::string& cell = row[label_col];
    if (sch.is_missing(cell)) {
      ++rep.rows_dropped_missing_label;
      continue;
    }
    int y;
    if (sch.label_kind == LabelKind::kHemoglobin) {
      auto hb = parse_number(cell);
      if (!hb) {
        throw Error(ErrorCode::kInvalidMeasurement,
                    "CSV row " + std::to_string(r) + ": hemoglobin '" + cell + "'");
      }
      y = label_from_hemoglobin(*hb, sch.thresholds);
    } else if (cell == sch.positive_label) {
      y = 1;
    } else if (cell == sch.negative_label) {
      y = 0;
    } else {
      throw Error(ErrorCode::kSchemaViolation,
                  "CSV row " + std::to_string(r) + ": label '" + cell + "'");
    }
    kept.push_back(r);
    labels.push_back(y);
  }

  // Raw cells per feature (derived features computed from z-score columns).
  std::vector<RawColumn> raw(sch.features.size());
  for (std::size_t f = 0; f < sch.features.size(); ++f) {
    const auto& spec = sch.features[f];
    raw[f].reserve(kept.size());
    if (!spec.nutrition_z_columns.empty()) {
      std::vector<std::size_t> zcols;
      for (const auto& z : spec.nutrition_z_columns) zcols.push_back(find_column(z));
      for (auto r : kept) {
        std::vector<double> z;
        for (auto c : zcols) {
          const auto& cell = table[r][c];
          if (sch.is_missing(cell)) continue;
          auto v = parse_number(cell);
          if (!v) {
            throw Error(ErrorCode::kSchemaViolation,
                        "CSV row " + std::to_string(r) + ": z-score '" + cell + "'");
          }
          z.push_back(*v);
        }
        if (z.empty()) {
          raw[f].push_back(std::nullopt);
        } else {
          raw[f].push_back(derive_nutrition_status(z) == NutritionStatus::kNourished
                               ? "nourished"
                               : "malnourished");
        }
      }
    } else {
      const std::size_t c = find_column(spec.name);
      for (auto r : kept) {
        const auto& cell = table[r][c];
        if (sch.is_missing(cell)) {
          raw[f].push_back(std::nullopt);
        } else {
          raw[f].push_back(cell);
        }
      }
    }
  }

  // Listwise deletion for features that must not be imputed.
  std::vector<char> keep(kept.size(), 1);
  for (std::size_t f = 0; f < sch.features.size(); ++f) {
    if (sch.features[f].impute != ImputeRule::kNone) continue;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (!raw[f][i]) keep[i] = 0;
    }
  }
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (keep[i]) survivors.push_back(i);
  }
  rep.rows_dropped_missing_feature = kept.size() - survivors.size();
  if (survivors.empty()) throw Error(ErrorCode::kSchemaViolation, "no usable rows in CSV");

  std::vector<std::vector<int>> columns(sch.features.size());
  for (std::size_t f = 0; f < sch.features.size(); ++f) {
    const auto& spec = sch.features[f];
    RawColumn column;
    column.reserve(survivors.size());
    for (auto i : survivors) column.push_back(std::move(raw[f][i]));
    const auto filled = impute_column(column, spec);
    columns[f].reserve(filled.size());
    for (std::size_t i = 0; i < filled.size(); ++i) {
      const int code = spec.level_index(filled[i]);
      if (code < 0) {
        throw Error(ErrorCode::kSchemaViolation,
                    "CSV row " + std::to_string(kept[survivors[i]]) + " feature '" +
                        spec.name + "': unknown level '" + filled[i] + "'");
      }
      columns[f].push_back(code);
    }
  }
  Labels y;
  y.reserve(survivors.size());
  for (auto i : survivors) y.push_back(labels[i]);
  rep.rows_kept = y.size();
  if (report) *report = rep;
  return Dataset(std::move(schema), std::move(columns), std::move(y));
}

Dataset load_dataset_csv(const std::filesystem::path& path,
                         std::shared_ptr<const DatasetSchema> schema, LoadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open data file " + path.string());
  return read_dataset_csv(in, std::move(schema), report);
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

std::vector<int> resolve_features(const Dataset& ds, std::span<const int> features) {
  std::vector<int> out;
  if (features.empty()) {
    out.resize(ds.n_features());
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  out.assign(features.begin(), features.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  for (int f : out) {
    if (f < 0 || static_cast<std::size_t>(f) >= ds.n_features()) {
      throw Error(ErrorCode::kInvalidArgument, "feature index out of range");
    }
  }
  return out;
}

EncodedMatrix build_matrix(const Dataset& ds, const std::vector<ColumnOrigin>& map) {
  EncodedMatrix m;
  m.column_map = map;
  m.values.resize(static_cast<Eigen::Index>(ds.n_rows()),
                  static_cast<Eigen::Index>(map.size()));
  const auto& schema = ds.schema();
  for (std::size_t c = 0; c < map.size(); ++c) {
    const auto& origin = map[c];
    const auto& spec = schema.features[static_cast<std::size_t>(origin.feature)];
    const auto& col = ds.column(static_cast<std::size_t>(origin.feature));
    const int ref = spec.reference_index();
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
      double v;
      if (origin.level >= 0) {
        v = col[r] == origin.level ? 1.0 : 0.0;
      } else if (spec.kind == FeatureKind::kBinary) {
        v = col[r] == ref ? 0.0 : 1.0;
      } else {
        v = static_cast<double>(col[r]);
      }
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return m;
}

void push_indicators(std::vector<ColumnOrigin>& map, int f, const FeatureSpec& spec) {
  const int ref = spec.reference_index();
  for (int l = 0; l < spec.cardinality(); ++l) {
    if (l == ref) continue;
    map.push_back({f, l, spec.name + "=" + spec.levels[static_cast<std::size_t>(l)]});
  }
}

}  // namespace

std::vector<int> EncodedMatrix::cardinalities(const DatasetSchema& schema) const {
  std::vector<int> out;
  out.reserve(column_map.size());
  for (const auto& origin : column_map) {
    const auto& spec = schema.features[static_cast<std::size_t>(origin.feature)];
    out.push_back(origin.level >= 0 || spec.kind == FeatureKind::kBinary
                      ? 2
                      : spec.cardinality());
  }
  return out;
}

EncodedMatrix encode(const Dataset& ds, std::span<const int> features) {
  std::vector<ColumnOrigin> map;
  for (int f : resolve_features(ds, features)) {
    const auto& spec = ds.schema().features[static_cast<std::size_t>(f)];
    if (spec.kind == FeatureKind::kOneHot) {
      push_indicators(map, f, spec);
    } else {
      map.push_back({f, -1, spec.name});
    }
  }
  return build_matrix(ds, map);
}

EncodedMatrix encode_treatment(const Dataset& ds, std::span<const int> features) {
  std::vector<ColumnOrigin> map;
  for (int f : resolve_features(ds, features)) {
    push_indicators(map, f, ds.schema().features[static_cast<std::size_t>(f)]);
  }
  return build_matrix(ds, map);
}

std::vector<int> decode_row(const EncodedMatrix& m, std::size_t row,
                            const DatasetSchema& schema) {
  std::vector<int> features;
  std::vector<int> codes;
  const auto r = static_cast<Eigen::Index>(row);
  for (std::size_t c = 0; c < m.column_map.size(); ++c) {
    const auto& origin = m.column_map[c];
    const auto& spec = schema.features[static_cast<std::size_t>(origin.feature)];
    const double v = m.values(r, static_cast<Eigen::Index>(c));
    if (features.empty() || features.back() != origin.feature) {
      features.push_back(origin.feature);
      codes.push_back(spec.reference_index());
    }
    int& code = codes.back();
    if (origin.level >= 0) {
      if (v == 1.0) code = origin.level;
    } else if (spec.kind == FeatureKind::kBinary) {
      const int ref = spec.reference_index();
      code = v == 0.0 ? ref : 1 - ref;
    } else {
      code = static_cast<int>(v);
    }
  }
  return codes;
}

void write_encoded_csv(std::ostream& out, const EncodedMatrix& m, const Labels& labels) {
  for (const auto& origin : m.column_map) {
    out << '"' << origin.name << "\",";
  }
  out << "label\n";
  char buf[32];
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m.values(r, c));
      out << buf << ',';
    }
    out << labels.at(static_cast<std::size_t>(r)) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splitting

SplitPlan stratified_split(const Labels& labels, double test_frac, std::uint64_t seed) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "test fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i] == 1 ? 1 : 0].push_back(i);
  }
  for (int k = 0; k < 2; ++k) {
    if (by_class[k].size() < 2) {
      throw Error(ErrorCode::kInfeasible, "class " + std::to_string(k) +
                                              " has fewer than 2 members; cannot stratify");
    }
  }

  const double n = static_cast<double>(labels.size());
  const auto total = static_cast<std::size_t>(std::llround(n * test_frac));
  std::size_t alloc[2];
  double remainder[2];
  for (int k = 0; k < 2; ++k) {
    const double exact = static_cast<double>(by_class[k].size()) * test_frac;
    alloc[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - std::floor(exact);
  }
  std::size_t assigned = alloc[0] + alloc[1];
  const int order[2] = {remainder[1] > remainder[0] ? 1 : 0,
                        remainder[1] > remainder[0] ? 0 : 1};
  for (int i = 0; assigned < total && i < 2; ++i) {
    ++alloc[order[i]];
    ++assigned;
  }

  SplitPlan plan;
  plan.seed = seed;
  Rng rng(seed);
  for (int k = 0; k < 2; ++k) {
    auto idx = by_class[k];
    rng.shuffle(idx);
    plan.test_indices.insert(plan.test_indices.end(), idx.begin(),
                             idx.begin() + static_cast<std::ptrdiff_t>(alloc[k]));
    plan.train_indices.insert(plan.train_indices.end(),
                              idx.begin() + static_cast<std::ptrdiff_t>(alloc[k]), idx.end());
  }
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  return plan;
}

}  // namespace anemiakit
