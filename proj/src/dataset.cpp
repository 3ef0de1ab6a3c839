#include "paygap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace paygap {

double weighted_quantile(std::vector<double> values, std::vector<double> weights, double q) {
    if (values.empty()) throw std::invalid_argument("weighted_quantile: empty input");
    if (values.size() != weights.size())
        throw std::invalid_argument("weighted_quantile: size mismatch");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("weighted_quantile: q outside [0,1]");
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw std::invalid_argument("weighted_quantile: nonpositive weight total");
    double cum = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        cum += weights[order[k]];
        if (cum >= q * total - 1e-12 * total) return values[order[k]];
    }
    return values[order.back()];
}

std::vector<std::string> split_string(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim_string(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// ---------------------------------------------------------------- Schema

namespace {

ColumnRole parse_role(const std::string& s, const std::string& col) {
    if (s == "group") return ColumnRole::Group;
    if (s == "outcome") return ColumnRole::Outcome;
    if (s == "weight") return ColumnRole::Weight;
    if (s == "covariate") return ColumnRole::Covariate;
    throw validation_error("schema: unknown role '" + s + "' for column '" + col + "'");
}

const char* role_name(ColumnRole r) {
    switch (r) {
        case ColumnRole::Group: return "group";
        case ColumnRole::Outcome: return "outcome";
        case ColumnRole::Weight: return "weight";
        default: return "covariate";
    }
}

}  // namespace

const SchemaColumn* Schema::find(const std::string& name) const {
    for (const auto& c : columns)
        if (c.name == name) return &c;
    return nullptr;
}

const SchemaColumn& Schema::require(const std::string& name) const {
    const SchemaColumn* c = find(name);
    if (!c) throw validation_error("schema: unknown column '" + name + "'");
    return *c;
}

std::string Schema::group_column() const {
    for (const auto& c : columns)
        if (c.role == ColumnRole::Group) return c.name;
    throw validation_error("schema: no group column declared");
}

std::string Schema::outcome_column() const {
    for (const auto& c : columns)
        if (c.role == ColumnRole::Outcome) return c.name;
    throw validation_error("schema: no outcome column declared");
}

std::optional<std::string> Schema::weight_column() const {
    for (const auto& c : columns)
        if (c.role == ColumnRole::Weight) return c.name;
    return std::nullopt;
}

std::vector<SchemaColumn> Schema::covariates() const {
    std::vector<SchemaColumn> out;
    for (const auto& c : columns)
        if (c.role == ColumnRole::Covariate) out.push_back(c);
    return out;
}

void Schema::validate() const {
    int n_group = 0, n_outcome = 0, n_weight = 0;
    for (const auto& c : columns) {
        if (c.role == ColumnRole::Group) ++n_group;
        if (c.role == ColumnRole::Outcome) ++n_outcome;
        if (c.role == ColumnRole::Weight) ++n_weight;
        if (c.role == ColumnRole::Covariate && c.type == ColumnType::Categorical) {
            if (c.levels.size() < 2)
                throw validation_error("schema: categorical column '" + c.name +
                                       "' needs at least 2 levels");
            for (std::size_t i = 0; i < c.levels.size(); ++i)
                for (std::size_t j = i + 1; j < c.levels.size(); ++j)
                    if (c.levels[i] == c.levels[j])
                        throw validation_error("schema: duplicate level '" + c.levels[i] +
                                               "' in column '" + c.name + "'");
        }
    }
    for (std::size_t i = 0; i < columns.size(); ++i)
        for (std::size_t j = i + 1; j < columns.size(); ++j)
            if (columns[i].name == columns[j].name)
                throw validation_error("schema: duplicate column '" + columns[i].name + "'");
    if (n_group != 1) throw validation_error("schema: exactly one group column required");
    if (n_outcome != 1) throw validation_error("schema: exactly one outcome column required");
    if (n_weight > 1) throw validation_error("schema: at most one weight column allowed");
}

Schema Schema::parse(const std::string& text) {
    Schema schema;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim_string(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw validation_error("schema line " + std::to_string(lineno) +
                                   ": expected 'name = role[:type[:levels]]'");
        std::string name = trim_string(s.substr(0, eq));
        std::string rhs = trim_string(s.substr(eq + 1));
        auto parts = split_string(rhs, ':');
        SchemaColumn col;
        col.name = name;
        col.role = parse_role(trim_string(parts[0]), name);
        if (col.role == ColumnRole::Covariate) {
            if (parts.size() < 2)
                throw validation_error("schema: covariate '" + name + "' needs a type");
            std::string type = trim_string(parts[1]);
            if (type == "continuous") {
                col.type = ColumnType::Continuous;
            } else if (type == "categorical") {
                col.type = ColumnType::Categorical;
                if (parts.size() < 3)
                    throw validation_error("schema: categorical '" + name + "' needs levels");
                for (auto& lvl : split_string(parts[2], ','))
                    col.levels.push_back(trim_string(lvl));
            } else {
                throw validation_error("schema: unknown type '" + type + "' for '" + name + "'");
            }
        }
        schema.columns.push_back(std::move(col));
    }
    schema.validate();
    return schema;
}

Schema Schema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open schema file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Schema::to_string() const {
    std::ostringstream out;
    for (const auto& c : columns) {
        out << c.name << " = " << role_name(c.role);
        if (c.role == ColumnRole::Covariate) {
            if (c.type == ColumnType::Continuous) {
                out << ":continuous";
            } else {
                out << ":categorical:";
                for (std::size_t i = 0; i < c.levels.size(); ++i) {
                    if (i) out << ",";
                    out << c.levels[i];
                }
            }
        }
        out << "\n";
    }
    return out.str();
}

// --------------------------------------------------------------- Dataset

const Covariate& Dataset::covariate(const std::string& name) const {
    int idx = covariate_index(name);
    if (idx < 0) throw validation_error("unknown covariate '" + name + "'");
    return covariates[static_cast<std::size_t>(idx)];
}

int Dataset::covariate_index(const std::string& name) const {
    for (std::size_t i = 0; i < covariates.size(); ++i)
        if (covariates[i].name == name) return static_cast<int>(i);
    return -1;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.group.reserve(rows.size());
    out.outcome.reserve(rows.size());
    out.weight.reserve(rows.size());
    for (std::size_t r : rows) {
        out.group.push_back(group[r]);
        out.outcome.push_back(outcome[r]);
        out.weight.push_back(weight[r]);
    }
    out.covariates.reserve(covariates.size());
    for (const auto& cov : covariates) {
        Covariate c;
        c.name = cov.name;
        c.type = cov.type;
        c.levels = cov.levels;
        if (cov.type == ColumnType::Continuous) {
            c.values.reserve(rows.size());
            for (std::size_t r : rows) c.values.push_back(cov.values[r]);
        } else {
            c.codes.reserve(rows.size());
            for (std::size_t r : rows) c.codes.push_back(cov.codes[r]);
        }
        out.covariates.push_back(std::move(c));
    }
    return out;
}

std::vector<std::size_t> Dataset::rows_of_group(int g) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < group.size(); ++i)
        if (group[i] == g) out.push_back(i);
    return out;
}

double Dataset::group_weight_sum(int g) const {
    double s = 0.0;
    for (std::size_t i = 0; i < group.size(); ++i)
        if (group[i] == g) s += weight[i];
    return s;
}

void Dataset::validate() const {
    std::size_t n = n_rows();
    if (outcome.size() != n || weight.size() != n)
        throw validation_error("dataset: column length mismatch");
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (group[i] != 0 && group[i] != 1)
            throw validation_error("dataset row " + std::to_string(i + 1) +
                                   ": group value must be 0 or 1");
        if (!(weight[i] > 0.0))
            throw validation_error("dataset row " + std::to_string(i + 1) +
                                   ": weight must be positive");
        if (!std::isfinite(outcome[i]))
            throw validation_error("dataset row " + std::to_string(i + 1) +
                                   ": non-finite outcome");
        has0 |= group[i] == 0;
        has1 |= group[i] == 1;
    }
    for (const auto& cov : covariates) {
        if (cov.size() != n)
            throw validation_error("dataset: covariate '" + cov.name + "' length mismatch");
        if (cov.type == ColumnType::Categorical) {
            for (std::size_t i = 0; i < n; ++i)
                if (cov.codes[i] < 0 || cov.codes[i] >= cov.level_count())
                    throw validation_error("dataset row " + std::to_string(i + 1) +
                                           ": invalid level code in '" + cov.name + "'");
        }
    }
    if (!has0 || !has1)
        throw validation_error("dataset: both group values 0 and 1 must be present");
}

// ------------------------------------------------------------------- CSV

namespace {

std::vector<std::string> parse_csv_line(const std::string& line) {
    auto fields = split_string(line, ',');
    for (auto& f : fields) f = trim_string(f);
    return fields;
}

}  // namespace

Dataset parse_dataset_csv(const std::string& csv_text, const Schema& schema) {
    schema.validate();
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw validation_error("csv: empty file (header required)");
    auto header = parse_csv_line(line);

    // Map schema columns onto header positions.
    std::map<std::string, int> pos;
    for (std::size_t i = 0; i < header.size(); ++i) pos[header[i]] = static_cast<int>(i);
    auto col_pos = [&](const std::string& name) -> int {
        auto it = pos.find(name);
        return it == pos.end() ? -1 : it->second;
    };

    int group_pos = col_pos(schema.group_column());
    int outcome_pos = col_pos(schema.outcome_column());
    if (group_pos < 0)
        throw validation_error("csv: missing mandatory column '" + schema.group_column() + "'");
    if (outcome_pos < 0)
        throw validation_error("csv: missing mandatory column '" + schema.outcome_column() + "'");
    int weight_pos = -1;
    if (auto wc = schema.weight_column()) {
        weight_pos = col_pos(*wc);
        if (weight_pos < 0) throw validation_error("csv: missing weight column '" + *wc + "'");
    }

    Dataset data;
    std::vector<int> cov_pos;
    for (const auto& sc : schema.covariates()) {
        int p = col_pos(sc.name);
        if (p < 0) throw validation_error("csv: missing covariate column '" + sc.name + "'");
        cov_pos.push_back(p);
        Covariate cov;
        cov.name = sc.name;
        cov.type = sc.type;
        cov.levels = sc.levels;
        data.covariates.push_back(std::move(cov));
    }

    auto parse_double = [](const std::string& s, int row, const std::string& col) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw validation_error("csv row " + std::to_string(row) + ": bad numeric value '" +
                                   s + "' in column '" + col + "'");
        }
    };

    int row = 0;  // data rows, header excluded
    while (std::getline(in, line)) {
        ++row;
        if (trim_string(line).empty()) continue;
        auto fields = parse_csv_line(line);
        if (fields.size() != header.size())
            throw validation_error("csv row " + std::to_string(row) + ": expected " +
                                   std::to_string(header.size()) + " fields, got " +
                                   std::to_string(fields.size()));
        const std::string& gs = fields[static_cast<std::size_t>(group_pos)];
        if (gs != "0" && gs != "1")
            throw validation_error("csv row " + std::to_string(row) +
                                   ": non-binary group value '" + gs + "'");
        data.group.push_back(gs == "1" ? 1 : 0);
        data.outcome.push_back(
            parse_double(fields[static_cast<std::size_t>(outcome_pos)], row, "outcome"));
        double w = 1.0;
        if (weight_pos >= 0)
            w = parse_double(fields[static_cast<std::size_t>(weight_pos)], row, "weight");
        if (!(w > 0.0))
            throw validation_error("csv row " + std::to_string(row) +
                                   ": non-positive weight " + fields[static_cast<std::size_t>(weight_pos)]);
        data.weight.push_back(w);
        for (std::size_t k = 0; k < cov_pos.size(); ++k) {
            Covariate& cov = data.covariates[k];
            const std::string& val = fields[static_cast<std::size_t>(cov_pos[k])];
            if (cov.type == ColumnType::Continuous) {
                cov.values.push_back(parse_double(val, row, cov.name));
            } else {
                auto it = std::find(cov.levels.begin(), cov.levels.end(), val);
                if (it == cov.levels.end())
                    throw validation_error("csv row " + std::to_string(row) + ": level '" + val +
                                           "' of column '" + cov.name +
                                           "' is not declared in the schema");
                cov.codes.push_back(static_cast<int>(it - cov.levels.begin()));
            }
        }
    }
    if (data.n_rows() == 0) throw validation_error("csv: no data rows");
    data.validate();
    return data;
}

Dataset load_dataset(const std::string& csv_path, const Schema& schema) {
    std::ifstream in(csv_path);
    if (!in) throw validation_error("cannot open data file: " + csv_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dataset_csv(ss.str(), schema);
}

void write_dataset_csv(const Dataset& data, const Schema& schema, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot write data file: " + path);
    out << schema.group_column() << "," << schema.outcome_column();
    if (auto wc = schema.weight_column()) out << "," << *wc;
    for (const auto& cov : data.covariates) out << "," << cov.name;
    out << "\n";
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        out << data.group[i] << "," << fmt_num(data.outcome[i]);
        if (schema.weight_column()) out << "," << fmt_num(data.weight[i]);
        for (const auto& cov : data.covariates) {
            if (cov.type == ColumnType::Continuous)
                out << "," << fmt_num(cov.values[i]);
            else
                out << "," << cov.levels[static_cast<std::size_t>(cov.codes[i])];
        }
        out << "\n";
    }
}

// ------------------------------------------------- standardized difference

namespace {

double std_diff_one(std::span<const double> x, std::span<const double> w,
                    std::span<const int> group, const std::string& label) {
    std::vector<double> x0, w0, x1, w1;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (group[i] == 1) {
            x1.push_back(x[i]);
            w1.push_back(w[i]);
        } else {
            x0.push_back(x[i]);
            w0.push_back(w[i]);
        }
    }
    double m1 = weighted_mean(x1, w1), m0 = weighted_mean(x0, w0);
    double v1 = weighted_var(x1, w1), v0 = weighted_var(x0, w0);
    double denom = std::sqrt((v1 + v0) / 2.0);
    if (denom == 0.0) {
        if (m1 == m0) return 0.0;
        throw validation_error("standardized_difference: degenerate scale in '" + label + "'");
    }
    return 100.0 * std::abs(m1 - m0) / denom;
}

}  // namespace

std::vector<StdDiffEntry> standardized_difference(const Dataset& data, const std::string& column) {
    const Covariate& cov = data.covariate(column);
    std::vector<StdDiffEntry> out;
    if (cov.type == ColumnType::Continuous) {
        out.push_back({column, std_diff_one(cov.values, data.weight, data.group, column)});
        return out;
    }
    for (int lvl = 0; lvl < cov.level_count(); ++lvl) {
        std::vector<double> ind(data.n_rows());
        for (std::size_t i = 0; i < data.n_rows(); ++i)
            ind[i] = cov.codes[i] == lvl ? 1.0 : 0.0;
        std::string label = column + "=" + cov.levels[static_cast<std::size_t>(lvl)];
        out.push_back({label, std_diff_one(ind, data.weight, data.group, label)});
    }
    return out;
}

}  // namespace paygap
