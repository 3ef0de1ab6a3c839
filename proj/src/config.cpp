#include "paygap/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace paygap {

KeyValue KeyValue::parse(const std::string& text) {
    KeyValue kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim_string(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw validation_error("config line " + std::to_string(lineno) +
                                   ": expected 'key = value'");
        std::string key = trim_string(s.substr(0, eq));
        std::string value = trim_string(s.substr(eq + 1));
        if (key.empty())
            throw validation_error("config line " + std::to_string(lineno) + ": empty key");
        kv.entries.emplace_back(key, value);
    }
    return kv;
}

KeyValue KeyValue::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool KeyValue::has(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return true;
    return false;
}

std::string KeyValue::get(const std::string& key, const std::string& fallback) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    return fallback;
}

std::string KeyValue::require(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    throw validation_error("config: missing required key '" + key + "'");
}

double KeyValue::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    try {
        return std::stod(get(key));
    } catch (...) {
        throw validation_error("config: bad numeric value for '" + key + "'");
    }
}

long KeyValue::get_long(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    try {
        return std::stol(get(key));
    } catch (...) {
        throw validation_error("config: bad integer value for '" + key + "'");
    }
}

bool KeyValue::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw validation_error("config: bad boolean value for '" + key + "'");
}

std::vector<std::string> KeyValue::get_list(const std::string& key) const {
    std::vector<std::string> out;
    for (auto& item : split_string(get(key), ',')) {
        std::string s = trim_string(item);
        if (!s.empty()) out.push_back(s);
    }
    return out;
}

std::vector<std::string> KeyValue::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries)
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
}

void KeyValue::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries)
        if (k == key) {
            v = value;
            return;
        }
    entries.emplace_back(key, value);
}

std::string KeyValue::to_string() const {
    std::ostringstream out;
    for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
    return out.str();
}

// ------------------------------------------------------------- term DSL

namespace {

class TermParser {
public:
    explicit TermParser(const std::string& text) : s_(text) {}

    std::vector<Term> parse_list() {
        std::vector<Term> out;
        skip_ws();
        while (!eof()) {
            out.push_back(parse_term());
            skip_ws();
            if (!eof() && s_[pos_] == '+') {
                ++pos_;
                skip_ws();
            }
        }
        return out;
    }

private:
    bool eof() const { return pos_ >= s_.size(); }
    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    char peek() const { return eof() ? '\0' : s_[pos_]; }
    void expect(char c) {
        if (peek() != c)
            throw validation_error("model terms: expected '" + std::string(1, c) + "' at '" +
                                   s_.substr(pos_) + "'");
        ++pos_;
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos_;
        while (!eof()) {
            char c = s_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')
                ++pos_;
            else
                break;
        }
        if (start == pos_)
            throw validation_error("model terms: expected a name at '" + s_.substr(pos_) + "'");
        return s_.substr(start, pos_ - start);
    }
    double number() {
        skip_ws();
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(s_.substr(pos_), &used);
        } catch (...) {
            throw validation_error("model terms: expected a number at '" + s_.substr(pos_) + "'");
        }
        pos_ += used;
        return v;
    }

    Term parse_term() {
        std::string head = ident();
        skip_ws();
        expect('(');
        Term t;
        if (head == "main") {
            t = Term::main(ident());
        } else if (head == "dummy") {
            t = Term::dummy(ident());
        } else if (head == "poly") {
            std::string col = ident();
            skip_ws();
            expect(',');
            t = Term::poly(col, static_cast<int>(number()));
        } else if (head == "bins") {
            std::string col = ident();
            std::vector<double> cuts;
            skip_ws();
            while (peek() == ',') {
                ++pos_;
                cuts.push_back(number());
                skip_ws();
            }
            t = Term::bins(col, cuts);
        } else if (head == "coarse") {
            std::string block = ident();
            skip_ws();
            expect(',');
            t = Term::coarse(block, ident());
        } else if (head == "inter") {
            Term a = parse_term();
            skip_ws();
            expect(',');
            Term b = parse_term();
            t = Term::interaction(std::move(a), std::move(b));
        } else {
            throw validation_error("model terms: unknown term '" + head + "'");
        }
        skip_ws();
        expect(')');
        return t;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<Term> parse_terms(const std::string& text) {
    return TermParser(text).parse_list();
}

// ------------------------------------------------------------ RunConfig

namespace {

bool is_reserved_support_key(const std::string& tail) {
    return tail == "order" || tail.rfind("order.", 0) == 0 || tail == "rank_model";
}

std::map<std::string, std::string> parse_level_map(const std::string& value,
                                                   const std::string& key) {
    std::map<std::string, std::string> out;
    for (auto& pair : split_string(value, ',')) {
        auto kv = split_string(trim_string(pair), ':');
        if (kv.size() != 2)
            throw validation_error("config '" + key + "': expected 'fine:coarse' pairs");
        out[trim_string(kv[0])] = trim_string(kv[1]);
    }
    return out;
}

}  // namespace

RunConfig RunConfig::from_kv(const KeyValue& kv) {
    RunConfig rc;
    rc.seed = static_cast<std::uint64_t>(kv.get_long("seed", 1));
    rc.baseline.regime = Regime::Baseline;
    rc.baseline.terms = parse_terms(kv.get("model.baseline", ""));
    rc.full.regime = Regime::Full;
    rc.full.terms = kv.has("model.full") ? parse_terms(kv.get("model.full"))
                                         : rc.baseline.terms;
    validate_nested_specs(rc.baseline, rc.full);

    // Blocks, declaration order; coarsening sub-keys may appear anywhere.
    for (const auto& key : kv.keys_with_prefix("block.")) {
        std::string tail = key.substr(6);
        if (tail.find('.') != std::string::npos) continue;
        VariableBlock blk;
        blk.name = tail;
        for (auto& c : kv.get_list(key)) blk.columns.push_back(c);
        for (const auto& sub : kv.keys_with_prefix("block." + tail + ".cuts.")) {
            std::string col = sub.substr(("block." + tail + ".cuts.").size());
            std::vector<double> cuts;
            for (auto& v : kv.get_list(sub)) cuts.push_back(std::stod(v));
            blk.coarsening.cuts[col] = cuts;
        }
        for (const auto& sub : kv.keys_with_prefix("block." + tail + ".map.")) {
            std::string col = sub.substr(("block." + tail + ".map.").size());
            blk.coarsening.level_map[col] = parse_level_map(kv.get(sub), sub);
        }
        rc.blocks.push_back(std::move(blk));
    }
    validate_blocks(rc.blocks);

    for (const auto& key : kv.keys_with_prefix("support.")) {
        std::string tail = key.substr(8);
        if (tail.find('.') != std::string::npos || is_reserved_support_key(tail)) continue;
        SupportDefinition def;
        def.id = tail;
        def.blocks = kv.get_list(key);
        if (def.blocks.empty())
            throw validation_error("support." + tail + ": needs at least one block");
        for (const auto& b : def.blocks) find_block(rc.blocks, b);
        rc.supports.push_back(std::move(def));
    }

    rc.grid_supports = kv.get_list("grid.supports");
    for (auto& e : kv.get_list("grid.estimators")) rc.grid_estimators.push_back(parse_estimator(e));
    for (auto& r : kv.get_list("grid.regimes")) rc.grid_regimes.push_back(parse_regime(r));

    if (kv.has("benchmark")) {
        auto parts = split_string(kv.get("benchmark"), ':');
        if (parts.size() != 3)
            throw validation_error("benchmark: expected 'estimator:regime:support'");
        rc.benchmark.estimator = parse_estimator(trim_string(parts[0]));
        rc.benchmark.regime = parse_regime(trim_string(parts[1]));
        rc.benchmark.support_id = trim_string(parts[2]);
        rc.has_benchmark = true;
    }

    rc.trim_quantile = kv.get_double("ipw.trim_quantile", 0.995);
    rc.radius_quantile = kv.get_double("psm.radius_quantile", 0.99);
    rc.aipw_folds = static_cast<int>(kv.get_long("aipw.folds", 2));
    rc.lasso.folds = static_cast<int>(kv.get_long("lasso.folds", 5));
    rc.lasso.n_lambda = static_cast<int>(kv.get_long("lasso.n_lambda", 100));
    rc.lasso.lambda_min_ratio = kv.get_double("lasso.lambda_min_ratio", 1e-4);
    rc.bootstrap_B = static_cast<int>(kv.get_long("bootstrap.B", 200));
    rc.bootstrap_fast_ml = kv.get_bool("bootstrap.fast_ml", false);

    std::string order = kv.get("support.order", "deltaR2");
    if (order == "deltaR2")
        rc.support_order = SupportOrder::DeltaR2;
    else if (order == "given")
        rc.support_order = SupportOrder::Given;
    else if (order == "increasing")
        rc.support_order = SupportOrder::Increasing;
    else if (order == "random")
        rc.support_order = SupportOrder::Random;
    else
        throw validation_error("support.order: expected deltaR2|given|increasing|random");
    rc.support_order_blocks = kv.get_list("support.order.blocks");
    rc.psm_exact_support = kv.get("psm.exact_support", "");
    return rc;
}

EstimationContext RunConfig::make_context() const {
    EstimationContext ctx;
    ctx.baseline = baseline;
    ctx.full = full;
    ctx.full.regime = Regime::Full;
    ctx.blocks = blocks;
    ctx.lasso = lasso;
    ctx.trim_quantile = trim_quantile;
    ctx.radius_quantile = radius_quantile;
    ctx.aipw_folds = aipw_folds;
    ctx.seed = seed;
    std::string psm_id = psm_exact_support;
    if (psm_id.empty() && !grid_supports.empty()) psm_id = grid_supports.front();
    if (!psm_id.empty()) ctx.psm_exact_blocks = find_support(psm_id).blocks;
    return ctx;
}

GridSpec RunConfig::make_grid() const {
    GridSpec grid;
    for (const auto& id : grid_supports) grid.supports.push_back(find_support(id));
    grid.estimators = grid_estimators;
    grid.regimes = grid_regimes;
    return grid;
}

const SupportDefinition& RunConfig::find_support(const std::string& id) const {
    for (const auto& s : supports)
        if (s.id == id) return s;
    throw validation_error("unknown support definition '" + id + "'");
}

}  // namespace paygap
