#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ordrisk/error.hpp"
#include "ordrisk/matrix.hpp"
#include "ordrisk/risk.hpp"

namespace ordrisk {

enum class PredictorKind { continuous, binary };

struct Predictor {
    std::string name;
    PredictorKind kind = PredictorKind::continuous;
    friend bool operator==(const Predictor&, const Predictor&) = default;
};

/// Ordered, named predictor columns.
class PredictorSchema {
public:
    explicit PredictorSchema(std::vector<Predictor> predictors) : predictors_(std::move(predictors)) {
        if (predictors_.empty()) throw DataError("schema must have at least one predictor");
        std::set<std::string_view> seen;
        for (const auto& p : predictors_) {
            if (p.name.empty()) throw DataError("schema predictor names must be non-empty");
            if (!seen.insert(p.name).second) throw DataError("duplicate predictor name '" + p.name + "'");
        }
    }

    std::size_t size() const noexcept { return predictors_.size(); }
    const Predictor& operator[](std::size_t i) const { return predictors_.at(i); }
    std::span<const Predictor> predictors() const noexcept { return predictors_; }

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < predictors_.size(); ++i)
            if (predictors_[i].name == name) return i;
        return std::nullopt;
    }

    /// Stem-cell layout: seven predictors, two of them binary.
    static PredictorSchema stemcell7() {
        using enum PredictorKind;
        return PredictorSchema({{"arrhythmia", binary},
                                {"AMtwooutoffive", binary},
                                {"maxpro", continuous},
                                {"fst_pro", continuous},
                                {"foldprolong", continuous},
                                {"foldaym", continuous},
                                {"pred7", continuous}});
    }

    /// Ventricular-wedge layout: fifteen continuous predictors.
    static PredictorSchema wedge15() {
        std::vector<Predictor> ps;
        for (int v : {1, 2, 3, 4, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16})
            ps.push_back({"c3v" + std::to_string(v), PredictorKind::continuous});
        return PredictorSchema(std::move(ps));
    }

    friend bool operator==(const PredictorSchema&, const PredictorSchema&) = default;

private:
    std::vector<Predictor> predictors_;
};

struct Drug {
    std::string id;
    RiskCategory label = RiskCategory::low;
    friend bool operator==(const Drug&, const Drug&) = default;
};

/// Missing cells are stored as quiet NaN.
inline constexpr double missing_value = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// Grouped observation table: every row belongs to one drug, labels attach to drugs.
///
/// Immutable after construction; all derived datasets are new values.
class Dataset {
public:
    Dataset(PredictorSchema schema, std::vector<Drug> drugs, std::vector<std::size_t> row_drug, RowMatrix values)
        : schema_(std::move(schema)), drugs_(std::move(drugs)), row_drug_(std::move(row_drug)), values_(std::move(values)) {
        validate();
        index_rows();
    }

    const PredictorSchema& schema() const noexcept { return schema_; }
    std::size_t predictor_count() const noexcept { return schema_.size(); }
    std::size_t drug_count() const noexcept { return drugs_.size(); }
    std::size_t row_count() const noexcept { return row_drug_.size(); }
    bool empty() const noexcept { return drugs_.empty(); }

    const Drug& drug(std::size_t k) const { return drugs_.at(k); }
    std::span<const Drug> drugs() const noexcept { return drugs_; }

    std::optional<std::size_t> find_drug(std::string_view id) const {
        for (std::size_t k = 0; k < drugs_.size(); ++k)
            if (drugs_[k].id == id) return k;
        return std::nullopt;
    }

    std::size_t row_drug(std::size_t row) const { return row_drug_.at(row); }
    std::span<const std::size_t> row_drugs() const noexcept { return row_drug_; }
    RiskCategory row_label(std::size_t row) const { return drugs_[row_drug_.at(row)].label; }

    /// Row indices of drug k, in table order.
    std::span<const std::size_t> drug_rows(std::size_t k) const { return drug_rows_.at(k); }

    std::span<const double> row(std::size_t r) const { return values_.row(r); }
    const RowMatrix& values() const noexcept { return values_; }

    bool has_missing() const noexcept {
        return std::any_of(values_.values().begin(), values_.values().end(), is_missing);
    }

    /// Number of drugs per category, indexed by index_of(category).
    std::array<std::size_t, 3> category_counts() const noexcept {
        std::array<std::size_t, 3> counts{};
        for (const auto& d : drugs_) ++counts[index_of(d.label)];
        return counts;
    }

    /// Dataset made of the listed rows (repeats allowed). Drugs without any
    /// selected row are dropped; surviving drugs keep their relative order.
    Dataset select_rows(std::span<const std::size_t> rows) const {
        std::vector<bool> keep(drugs_.size(), false);
        for (auto r : rows) keep.at(row_drug_.at(r)) = true;
        std::vector<std::size_t> remap(drugs_.size(), 0);
        std::vector<Drug> drugs;
        for (std::size_t k = 0; k < drugs_.size(); ++k) {
            if (!keep[k]) continue;
            remap[k] = drugs.size();
            drugs.push_back(drugs_[k]);
        }
        std::vector<std::size_t> row_drug;
        row_drug.reserve(rows.size());
        for (auto r : rows) row_drug.push_back(remap[row_drug_[r]]);
        return Dataset(schema_, std::move(drugs), std::move(row_drug), values_.select_rows(rows));
    }

    /// Dataset holding the listed drugs' rows in table order.
    Dataset select_drugs(std::span<const std::size_t> drug_indices) const {
        std::vector<bool> keep(drugs_.size(), false);
        for (auto k : drug_indices) keep.at(k) = true;
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < row_drug_.size(); ++r)
            if (keep[row_drug_[r]]) rows.push_back(r);
        return select_rows(rows);
    }

    /// Same rows and drugs with replacement predictor values.
    Dataset with_values(RowMatrix values) const { return Dataset(schema_, drugs_, row_drug_, std::move(values)); }

    /// Same rows and values with replacement drug labels (one per drug).
    Dataset with_labels(std::span<const RiskCategory> labels) const {
        if (labels.size() != drugs_.size()) throw std::invalid_argument("with_labels: one label per drug required");
        auto drugs = drugs_;
        for (std::size_t k = 0; k < drugs.size(); ++k) drugs[k].label = labels[k];
        return Dataset(schema_, std::move(drugs), row_drug_, values_);
    }

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.schema_ == b.schema_ && a.drugs_ == b.drugs_ && a.row_drug_ == b.row_drug_ && a.values_ == b.values_;
    }

private:
    void validate() const {
        if (values_.rows() != row_drug_.size()) throw DataError("row count does not match drug assignment count");
        if (values_.cols() != schema_.size())
            throw DataError("value columns (" + std::to_string(values_.cols()) + ") do not match schema (" +
                            std::to_string(schema_.size()) + ")");
        std::set<std::string_view> ids;
        for (const auto& d : drugs_) {
            if (d.id.empty()) throw DataError("drug id must be non-empty");
            if (!ids.insert(d.id).second) throw DataError("duplicate drug id '" + d.id + "'");
        }
        std::vector<bool> seen(drugs_.size(), false);
        for (auto k : row_drug_) {
            if (k >= drugs_.size()) throw DataError("row refers to an unknown drug");
            seen[k] = true;
        }
        for (std::size_t k = 0; k < drugs_.size(); ++k)
            if (!seen[k]) throw DataError("drug '" + drugs_[k].id + "' has no observations");
        for (std::size_t r = 0; r < values_.rows(); ++r) {
            for (std::size_t c = 0; c < values_.cols(); ++c) {
                const double v = values_(r, c);
                if (is_missing(v)) continue;
                if (!std::isfinite(v))
                    throw DataError("non-finite value in column '" + schema_[c].name + "'");
                if (schema_[c].kind == PredictorKind::binary && v != 0.0 && v != 1.0)
                    throw DataError("binary column '" + schema_[c].name + "' holds " + std::to_string(v));
            }
        }
    }

    void index_rows() {
        drug_rows_.assign(drugs_.size(), {});
        for (std::size_t r = 0; r < row_drug_.size(); ++r) drug_rows_[row_drug_[r]].push_back(r);
    }

    PredictorSchema schema_;
    std::vector<Drug> drugs_;
    std::vector<std::size_t> row_drug_;
    RowMatrix values_;
    std::vector<std::vector<std::size_t>> drug_rows_;
};

// ---------------------------------------------------------------------------
// Leave-one-drug-out split

struct LodoSplit {
    Dataset train;
    Dataset test;
    /// True when the held-out drug was the only drug (train has no rows).
    bool train_empty() const noexcept { return train.empty(); }
};

inline LodoSplit split_lodo(const Dataset& dataset, std::size_t k) {
    if (k >= dataset.drug_count())
        throw std::out_of_range("split_lodo: drug index " + std::to_string(k) + " out of range (N = " +
                                std::to_string(dataset.drug_count()) + ")");
    std::vector<std::size_t> others;
    others.reserve(dataset.drug_count() - 1);
    for (std::size_t i = 0; i < dataset.drug_count(); ++i)
        if (i != k) others.push_back(i);
    const std::size_t held_out[] = {k};
    return {dataset.select_drugs(others), dataset.select_drugs(held_out)};
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    if (quoted) throw DataError("line " + std::to_string(line_no) + ": unterminated quoted field");
    fields.push_back(std::move(field));
    return fields;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::string quote_if_needed(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

/// Parses a predictor cell; nullopt means the cell is not a finite decimal number.
inline std::optional<double> parse_cell(std::string_view cell) {
    cell = trim(cell);
    if (cell.empty() || cell == "NA") return missing_value;
    if (cell.front() == '+') cell.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

inline RawTable read_raw(std::istream& in) {
    RawTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line, line_no);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) throw DataError("CSV input is empty (no header)");
    return table;
}

inline bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

inline Dataset build_dataset(const RawTable& table, const PredictorSchema& schema) {
    const auto& header = table.header;
    if (header.size() < 2 || !iequals(trim(header[0]), "drug") || !iequals(trim(header[1]), "risk"))
        throw DataError("header must start with 'drug,risk'");
    if (header.size() != schema.size() + 2)
        throw DataError("header has " + std::to_string(header.size() - 2) + " predictor columns, schema expects " +
                        std::to_string(schema.size()));
    for (std::size_t c = 0; c < schema.size(); ++c)
        if (trim(header[c + 2]) != schema[c].name)
            throw DataError("header column " + std::to_string(c + 3) + " is '" + std::string(trim(header[c + 2])) +
                            "', schema expects '" + schema[c].name + "'");

    std::vector<Drug> drugs;
    std::unordered_map<std::string, std::size_t> drug_index;
    std::vector<std::size_t> row_drug;
    std::vector<double> values;
    values.reserve(table.rows.size() * schema.size());

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& fields = table.rows[r];
        const std::string where = "line " + std::to_string(table.line_numbers[r]);
        if (fields.size() != header.size())
            throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
        const std::string id(trim(fields[0]));
        if (id.empty()) throw DataError(where + ": empty drug id");
        const auto label = parse_risk(trim(fields[1]));
        if (!label) throw DataError(where + ": unknown risk token '" + fields[1] + "'");

        auto [it, inserted] = drug_index.try_emplace(id, drugs.size());
        if (inserted) {
            drugs.push_back({id, *label});
        } else if (drugs[it->second].label != *label) {
            throw DataError(where + ": conflicting labels for drug '" + id + "' (" +
                            std::string(to_string(drugs[it->second].label)) + " vs " +
                            std::string(to_string(*label)) + ")");
        }
        row_drug.push_back(it->second);

        for (std::size_t c = 0; c < schema.size(); ++c) {
            const auto v = parse_cell(fields[c + 2]);
            if (!v)
                throw DataError(where + ": non-numeric value '" + fields[c + 2] + "' in column '" + schema[c].name +
                                "'");
            if (schema[c].kind == PredictorKind::binary && !is_missing(*v) && *v != 0.0 && *v != 1.0)
                throw DataError(where + ": binary column '" + schema[c].name + "' holds '" + fields[c + 2] + "'");
            values.push_back(*v);
        }
    }
    const std::size_t n = row_drug.size();
    return Dataset(schema, std::move(drugs), std::move(row_drug), RowMatrix(n, schema.size(), std::move(values)));
}

} // namespace detail

/// Reads a `drug,risk,<predictors...>` table whose predictor columns must match `schema`.
inline Dataset load_csv(std::istream& in, const PredictorSchema& schema) {
    return detail::build_dataset(detail::read_raw(in), schema);
}

/// Reads a table and derives the schema from its header. A column is binary when
/// every present value is 0 or 1, continuous otherwise.
inline Dataset load_csv_inferred(std::istream& in) {
    const auto table = detail::read_raw(in);
    if (table.header.size() < 3) throw DataError("header must name at least one predictor after 'drug,risk'");
    std::vector<Predictor> predictors;
    for (std::size_t c = 2; c < table.header.size(); ++c) {
        bool any_present = false;
        bool all_binary = true;
        for (const auto& row : table.rows) {
            if (row.size() != table.header.size()) break; // reported by build_dataset
            const auto v = detail::parse_cell(row[c]);
            if (!v || is_missing(*v)) continue;
            any_present = true;
            if (*v != 0.0 && *v != 1.0) all_binary = false;
        }
        predictors.push_back({std::string(detail::trim(table.header[c])),
                              any_present && all_binary ? PredictorKind::binary : PredictorKind::continuous});
    }
    return detail::build_dataset(table, PredictorSchema(std::move(predictors)));
}

/// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
    if (is_missing(v)) return "NA";
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
    return std::string(buf.data(), ptr);
}

/// Writes the canonical textual form: LF endings, `NA` for missing, lowercase risk tokens.
inline void write_csv(const Dataset& dataset, std::ostream& out) {
    out << "drug,risk";
    for (const auto& p : dataset.schema().predictors()) out << ',' << detail::quote_if_needed(p.name);
    out << '\n';
    for (std::size_t r = 0; r < dataset.row_count(); ++r) {
        const auto& d = dataset.drug(dataset.row_drug(r));
        out << detail::quote_if_needed(d.id) << ',' << to_string(d.label);
        for (double v : dataset.row(r)) out << ',' << format_number(v);
        out << '\n';
    }
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input file '" + path + "'");
    return in;
}

} // namespace ordrisk
