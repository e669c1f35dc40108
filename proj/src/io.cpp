#include "prml/io.hpp"
#include "prml/comparators.hpp"
#include "prml/errors.hpp"
#include "prml/simulate.hpp"
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
namespace prml {
namespace {
namespace pt = boost::property_tree;
std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}
// ---- config values ----
std::vector<std::string> tokens(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}
[[noreturn]] void bad_value(const std::string& where, const std::string& what, const std::string& v) {
    throw ArgumentError("config " + where + ": expected " + what + ", got '" + v + "'");
}
double to_double(const std::string& where, const std::string& v) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) bad_value(where, "a number", v);
    return x;
}
std::uint64_t to_uint(const std::string& where, const std::string& v) {
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(where, "a nonnegative integer", v);
    return x;
}
bool to_bool(const std::string& where, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(where, "true or false", v);
}
std::vector<double> to_doubles(const std::string& where, const std::string& v) {
    std::vector<double> out;
    for (const auto& t : tokens(v)) out.push_back(to_double(where, t));
    if (out.empty()) bad_value(where, "a list of numbers", v);
    return out;
}
std::vector<std::size_t> to_counts(const std::string& where, const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& t : tokens(v)) out.push_back(static_cast<std::size_t>(to_uint(where, t)));
    if (out.empty()) bad_value(where, "a list of counts", v);
    return out;
}
using Setter = void (*)(Config&, const std::string& where, const std::string& value);
const std::map<std::string, std::map<std::string, Setter>>& config_schema() {
    static const std::map<std::string, std::map<std::string, Setter>> schema = {
        {"kernel",
         {{"name", [](Config& c, const std::string&, const std::string& v) { c.kernel.name = v; }},
          {"d", [](Config& c, const std::string& w, const std::string& v) { c.kernel.d = to_uint(w, v); }},
          {"r", [](Config& c, const std::string& w, const std::string& v) { c.kernel.r = to_uint(w, v); }},
          {"T", [](Config& c, const std::string& w, const std::string& v) { c.kernel.T = to_uint(w, v); }}}},
        {"grid",
         {{"rule", [](Config& c, const std::string&, const std::string& v) { c.grid.rule = parse_grid_rule(v); }},
          {"lo",
           [](Config& c, const std::string& w, const std::string& v) {
               const auto lo = to_doubles(w, v);
               c.grid.bounds.resize(std::max(c.grid.bounds.size(), lo.size()), Interval{0.0, 0.0});
               for (std::size_t k = 0; k < lo.size(); ++k) c.grid.bounds[k].lo = lo[k];
           }},
          {"hi",
           [](Config& c, const std::string& w, const std::string& v) {
               const auto hi = to_doubles(w, v);
               c.grid.bounds.resize(std::max(c.grid.bounds.size(), hi.size()), Interval{0.0, 0.0});
               for (std::size_t k = 0; k < hi.size(); ++k) c.grid.bounds[k].hi = hi[k];
           }},
          {"points", [](Config& c, const std::string& w, const std::string& v) { c.grid.points = to_counts(w, v); }}}},
        {"weights",
         {{"rule", [](Config& c, const std::string&, const std::string& v) { c.weights.rule = v; }},
          {"gamma", [](Config& c, const std::string& w, const std::string& v) { c.weights.gamma = to_double(w, v); }},
          {"alpha0",
           [](Config& c, const std::string& w, const std::string& v) { c.weights.alpha0 = to_double(w, v); }}}},
        {"optimizer",
         {{"objective",
           [](Config& c, const std::string&, const std::string& v) { c.optimizer.objective = parse_objective(v); }},
          {"lo", [](Config& c, const std::string& w, const std::string& v) { c.optimizer.lo = to_doubles(w, v); }},
          {"hi", [](Config& c, const std::string& w, const std::string& v) { c.optimizer.hi = to_doubles(w, v); }},
          {"init", [](Config& c, const std::string& w, const std::string& v) { c.optimizer.init = to_doubles(w, v); }},
          {"permutations",
           [](Config& c, const std::string& w, const std::string& v) { c.optimizer.permutations = to_uint(w, v); }},
          {"seed", [](Config& c, const std::string& w, const std::string& v) { c.optimizer.seed = to_uint(w, v); }},
          {"order",
           [](Config& c, const std::string& w, const std::string& v) {
               if (v == "as_given") c.optimizer.order = DataOrder::as_given;
               else if (v == "permuted") c.optimizer.order = DataOrder::permuted;
               else bad_value(w, "as_given or permuted", v);
           }},
          {"starts", [](Config& c, const std::string& w, const std::string& v) { c.optimizer.starts = to_uint(w, v); }},
          {"max_iter",
           [](Config& c, const std::string& w, const std::string& v) { c.optimizer.max_iter = to_uint(w, v); }},
          {"alpha", [](Config& c, const std::string& w, const std::string& v) { c.optimizer.alpha = to_double(w, v); }},
          {"nelder_mead",
           [](Config& c, const std::string& w, const std::string& v) { c.optimizer.nelder_mead = to_bool(w, v); }}}},
        {"curve",
         {{"lo", [](Config& c, const std::string& w, const std::string& v) { c.curve.lo = to_doubles(w, v); }},
          {"hi", [](Config& c, const std::string& w, const std::string& v) { c.curve.hi = to_doubles(w, v); }},
          {"points", [](Config& c, const std::string& w, const std::string& v) { c.curve.points = to_counts(w, v); }}}},
        {"test", {{"cutoff", [](Config& c, const std::string& w, const std::string& v) { c.cutoff = to_double(w, v); }}}},
        {"study",
         {{"kind", [](Config& c, const std::string&, const std::string& v) { c.study.kind = parse_study_kind(v); }},
          {"n", [](Config& c, const std::string& w, const std::string& v) { c.study.n = to_uint(w, v); }},
          {"replications",
           [](Config& c, const std::string& w, const std::string& v) { c.study.replications = to_uint(w, v); }},
          {"seed", [](Config& c, const std::string& w, const std::string& v) { c.study.seed = to_uint(w, v); }},
          {"mix", [](Config& c, const std::string&, const std::string& v) { c.study.mix = v; }},
          {"sigma", [](Config& c, const std::string& w, const std::string& v) { c.study.sigma = to_double(w, v); }},
          {"r", [](Config& c, const std::string& w, const std::string& v) { c.study.r = to_uint(w, v); }},
          {"beta",
           [](Config& c, const std::string& w, const std::string& v) { c.study.regression.beta = to_doubles(w, v); }},
          {"reg_sigma",
           [](Config& c, const std::string& w, const std::string& v) { c.study.regression.sigma = to_double(w, v); }},
          {"T", [](Config& c, const std::string& w, const std::string& v) { c.study.T = to_uint(w, v); }},
          {"theta", [](Config& c, const std::string& w, const std::string& v) { c.study.theta = to_double(w, v); }},
          {"sigma_grid",
           [](Config& c, const std::string& w, const std::string& v) { c.study.sigma_grid = to_doubles(w, v); }},
          {"methods", [](Config& c, const std::string&, const std::string& v) { c.study.methods = tokens(v); }},
          {"permutations",
           [](Config& c, const std::string& w, const std::string& v) { c.study.permutations = to_uint(w, v); }},
          {"grid_points",
           [](Config& c, const std::string& w, const std::string& v) { c.study.grid_points = to_uint(w, v); }},
          {"starts", [](Config& c, const std::string& w, const std::string& v) { c.study.starts = to_uint(w, v); }},
          {"alpha", [](Config& c, const std::string& w, const std::string& v) { c.study.alpha = to_double(w, v); }},
          {"cutoff", [](Config& c, const std::string& w, const std::string& v) { c.study.cutoff = to_double(w, v); }},
          {"oracle_J", [](Config& c, const std::string& w, const std::string& v) { c.study.oracle_J = to_uint(w, v); }},
          {"oracle_R",
           [](Config& c, const std::string& w, const std::string& v) { c.study.oracle_R = to_uint(w, v); }}}},
    };
    return schema;
}
// ---- data files ----
[[noreturn]] void fail_line(std::size_t line, const std::string& msg) {
    throw ArgumentError("line " + std::to_string(line) + ": " + msg);
}
class CsvReader {
public:
    explicit CsvReader(std::istream& is) : is_(is) {}
    /// Next non-blank, non-comment row; false at end of input.
    bool next(std::vector<std::string>& fields) {
        std::string text;
        while (std::getline(is_, text)) {
            ++line_;
            const std::string t = trim(text);
            if (t.empty() || t[0] == '#') continue;
            fields.clear();
            std::size_t start = 0;
            for (;;) {
                const auto comma = t.find(',', start);
                fields.push_back(trim(std::string_view(t).substr(start, comma - start)));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            return true;
        }
        return false;
    }
    std::size_t line() const { return line_; }
    double number(const std::string& s, const std::string& column) const {
        double x = 0.0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
        if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(x))
            fail_line(line_, "column " + column + ": not a finite number: '" + s + "'");
        return x;
    }
    void expect_width(const std::vector<std::string>& fields, std::size_t width) const {
        if (fields.size() != width)
            fail_line(line_, "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
private:
    std::istream& is_;
    std::size_t line_ = 0;
};
std::vector<std::string> read_header(CsvReader& in) {
    std::vector<std::string> h;
    if (!in.next(h)) throw ArgumentError("line " + std::to_string(in.line()) + ": missing header");
    return h;
}
double mean_sd_replicated(const Dataset& data, double* sd) {
    double m = 0.0, q = 0.0;
    std::size_t count = 0;
    for (const auto& o : data)
        for (double y : std::get<Replicated>(o).y) {
            ++count;
            const double dlt = y - m;
            m += dlt / static_cast<double>(count);
            q += dlt * (y - m);
        }
    *sd = std::sqrt(q / static_cast<double>(std::max<std::size_t>(1, count - 1)));
    return m;
}
}  // namespace
// ---- config ----
std::size_t CurveSpec::size() const {
    std::size_t s = points.empty() ? 0 : 1;
    for (auto p : points) s *= p;
    return s;
}
std::vector<std::vector<double>> CurveSpec::thetas() const {
    const std::size_t k = points.size();
    if (lo.size() != k || hi.size() != k || k == 0)
        throw ArgumentError("curve: lo, hi and points need one entry per theta component");
    std::vector<std::vector<double>> axes(k);
    for (std::size_t c = 0; c < k; ++c) {
        if (points[c] == 0) throw ArgumentError("curve: points must be positive");
        if (points[c] > 1 && !(hi[c] > lo[c])) throw ArgumentError("curve: need lo < hi");
        for (std::size_t j = 0; j < points[c]; ++j)
            axes[c].push_back(points[c] == 1 ? lo[c]
                                             : lo[c] + (hi[c] - lo[c]) * static_cast<double>(j) /
                                                           static_cast<double>(points[c] - 1));
    }
    std::vector<std::vector<double>> out;
    std::vector<std::size_t> idx(k, 0);
    for (std::size_t n = 0; n < size(); ++n) {
        std::vector<double> th(k);
        for (std::size_t c = 0; c < k; ++c) th[c] = axes[c][idx[c]];
        out.push_back(std::move(th));
        for (std::size_t c = k; c-- > 0;) {
            if (++idx[c] < points[c]) break;
            idx[c] = 0;
        }
    }
    return out;
}
// "value ; note" or "value # note"; the marker must follow whitespace
static std::string strip_comment(const std::string& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if ((v[i] == ';' || v[i] == '#') && std::isspace(static_cast<unsigned char>(v[i - 1]))) return v.substr(0, i);
    return v;
}
Config parse_config(std::istream& is) {
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ArgumentError("config line " + std::to_string(e.line()) + ": " + e.message());
    }
    Config cfg;
    const auto& schema = config_schema();
    for (const auto& [section, body] : tree) {
        const auto s = schema.find(section);
        if (body.empty() && !body.data().empty()) throw ArgumentError("config: key '" + section + "' is outside any section");
        if (s == schema.end()) throw ArgumentError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : body) {
            const auto k = s->second.find(key);
            const std::string where = "[" + section + "] " + key;
            if (k == s->second.end()) throw ArgumentError("config: unknown key " + where);
            try {
                k->second(cfg, where, trim(strip_comment(value.data())));
            } catch (const ArgumentError& e) {
                const std::string msg = e.what();
                throw ArgumentError(msg.rfind("config", 0) == 0 ? msg : "config " + where + ": " + msg);
            }
        }
    }
    cfg.study.weights = cfg.weights;
    for (const auto& b : cfg.grid.bounds)
        if (!(b.hi > b.lo)) throw ArgumentError("config [grid]: every axis needs lo < hi");
    return cfg;
}
Config load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ArgumentError("cannot open config file '" + path + "'");
    return parse_config(f);
}
std::vector<std::string> parameter_names(const KernelSpec& spec) {
    if (spec.name == "density") return {"sigma"};
    if (spec.name == "ar1_mix") return {"theta"};
    if (spec.name == "linear_ri" || spec.name == "logistic_ri") {
        std::vector<std::string> out;
        for (std::size_t c = 0; c < spec.d; ++c) out.push_back("beta" + std::to_string(c + 1));
        if (spec.name == "linear_ri") out.push_back("sigma");
        return out;
    }
    throw ArgumentError("unknown kernel '" + spec.name + "'");
}
// ---- data ----
Dataset read_scalar_csv(std::istream& is) {
    CsvReader in(is);
    const auto header = read_header(in);
    const auto col = std::find(header.begin(), header.end(), "y");
    if (col == header.end()) fail_line(in.line(), "header has no 'y' column");
    const std::size_t at = static_cast<std::size_t>(col - header.begin());
    Dataset data;
    std::vector<std::string> f;
    while (in.next(f)) {
        in.expect_width(f, header.size());
        data.push_back(Scalar{in.number(f[at], "y")});
    }
    if (data.empty()) throw ArgumentError("line " + std::to_string(in.line()) + ": no data rows");
    return data;
}
Dataset read_replicated_csv(std::istream& is) {
    CsvReader in(is);
    const auto header = read_header(in);
    if (header.size() < 3 || header.front() != "subject" || header.back() != "y")
        fail_line(in.line(), "expected header subject,x1..xd,y");
    const std::size_t d = header.size() - 2;
    for (std::size_t c = 0; c < d; ++c)
        if (header[c + 1] != "x" + std::to_string(c + 1))
            fail_line(in.line(), "expected column x" + std::to_string(c + 1) + ", found '" + header[c + 1] + "'");
    Dataset data;
    std::set<std::string> seen;
    std::string current;
    std::vector<double> x, y;
    std::size_t r = 0, first_line = 0;
    auto flush = [&](std::size_t line) {
        if (y.empty()) return;
        if (r == 0) r = y.size();
        if (y.size() != r)
            fail_line(line, "subject '" + current + "' has " + std::to_string(y.size()) + " rows, expected " +
                                std::to_string(r));
        data.emplace_back(Replicated(r, d, std::move(x), std::move(y)));
        x.clear();
        y.clear();
    };
    std::vector<std::string> f;
    while (in.next(f)) {
        in.expect_width(f, header.size());
        if (f[0].empty()) fail_line(in.line(), "empty subject id");
        if (f[0] != current) {
            flush(first_line);
            if (!seen.insert(f[0]).second)
                fail_line(in.line(), "subject '" + f[0] + "' reappears; rows must be grouped by subject");
            current = f[0];
            first_line = in.line();
        }
        for (std::size_t c = 0; c < d; ++c) x.push_back(in.number(f[c + 1], header[c + 1]));
        y.push_back(in.number(f.back(), "y"));
    }
    flush(first_line);
    if (data.empty()) throw ArgumentError("line " + std::to_string(in.line()) + ": no data rows");
    return data;
}
Dataset read_series_csv(std::istream& is, std::vector<bool>* truth) {
    CsvReader in(is);
    const auto header = read_header(in);
    std::ptrdiff_t truth_col = -1;
    std::vector<std::size_t> ycols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "truth") {
            truth_col = static_cast<std::ptrdiff_t>(c);
        } else if (header[c] == "y" + std::to_string(ycols.size() + 1)) {
            ycols.push_back(c);
        } else {
            fail_line(in.line(), "unexpected column '" + header[c] + "'; expected y1..yT and optionally truth");
        }
    }
    if (ycols.size() < 2) fail_line(in.line(), "a series needs at least columns y1,y2");
    if (truth) truth->clear();
    Dataset data;
    std::vector<std::string> f;
    while (in.next(f)) {
        in.expect_width(f, header.size());
        std::vector<double> y;
        for (auto c : ycols) y.push_back(in.number(f[c], header[c]));
        data.emplace_back(Series(std::move(y)));
        if (truth_col >= 0) {
            const auto& t = f[static_cast<std::size_t>(truth_col)];
            if (t != "0" && t != "1") fail_line(in.line(), "column truth: expected 0 or 1, got '" + t + "'");
            if (truth) truth->push_back(t == "1");
        }
    }
    if (data.empty()) throw ArgumentError("line " + std::to_string(in.line()) + ": no data rows");
    return data;
}
Dataset read_dataset_csv(std::istream& is, const KernelSpec& spec, std::vector<bool>* truth) {
    if (truth) truth->clear();
    if (spec.name == "density") return read_scalar_csv(is);
    if (spec.name == "linear_ri" || spec.name == "logistic_ri") return read_replicated_csv(is);
    if (spec.name == "ar1_mix") return read_series_csv(is, truth);
    throw ArgumentError("unknown kernel '" + spec.name + "'");
}
Dataset load_dataset(const std::string& path, const KernelSpec& spec, std::vector<bool>* truth) {
    std::ifstream f(path);
    if (!f) throw ArgumentError("cannot open data file '" + path + "'");
    try {
        return read_dataset_csv(f, spec, truth);
    } catch (const ArgumentError& e) {
        throw ArgumentError(path + ": " + e.what());
    }
}
void write_dataset_csv(std::ostream& os, const Dataset& data, const std::vector<bool>& truth) {
    if (data.empty()) throw ArgumentError("write_dataset_csv: empty dataset");
    if (!truth.empty() && truth.size() != data.size()) throw ArgumentError("write_dataset_csv: truth length mismatch");
    if (std::holds_alternative<Scalar>(data[0])) {
        os << "y\n";
        for (const auto& o : data) os << format_double(std::get<Scalar>(o).y) << '\n';
    } else if (std::holds_alternative<Replicated>(data[0])) {
        const auto& first = std::get<Replicated>(data[0]);
        os << "subject";
        for (std::size_t c = 0; c < first.d; ++c) os << ",x" << c + 1;
        os << ",y\n";
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto& o = std::get<Replicated>(data[i]);
            for (std::size_t j = 0; j < o.r; ++j) {
                os << i + 1;
                for (double v : o.row(j)) os << ',' << format_double(v);
                os << ',' << format_double(o.y[j]) << '\n';
            }
        }
    } else {
        const std::size_t T = std::get<Series>(data[0]).y.size();
        for (std::size_t t = 0; t < T; ++t) os << (t ? "," : "") << 'y' << t + 1;
        os << (truth.empty() ? "\n" : ",truth\n");
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto& y = std::get<Series>(data[i]).y;
            if (y.size() != T) throw ArgumentError("write_dataset_csv: series lengths differ");
            for (std::size_t t = 0; t < T; ++t) os << (t ? "," : "") << format_double(y[t]);
            if (!truth.empty()) os << ',' << (truth[i] ? 1 : 0);
            os << '\n';
        }
    }
}
KernelSpec resolve_kernel(const KernelSpec& spec, const Dataset& data) {
    if (data.empty()) throw ArgumentError("empty dataset");
    KernelSpec k = spec;
    auto check = [](std::size_t& field, std::size_t found, const char* name) {
        if (field == 0) field = found;
        else if (field != found)
            throw ArgumentError(std::string("kernel ") + name + " = " + std::to_string(field) + " but the data have " +
                                std::to_string(found));
    };
    if (k.name == "density") {
        if (!std::holds_alternative<Scalar>(data[0])) throw ArgumentError("density kernel needs a y column");
    } else if (k.name == "linear_ri" || k.name == "logistic_ri") {
        const auto* o = std::get_if<Replicated>(&data[0]);
        if (!o) throw ArgumentError(k.name + " needs subject,x1..xd,y data");
        check(k.d, o->d, "d");
        check(k.r, o->r, "r");
    } else if (k.name == "ar1_mix") {
        const auto* o = std::get_if<Series>(&data[0]);
        if (!o) throw ArgumentError("ar1_mix needs y1..yT data");
        check(k.T, o->y.size(), "T");
        for (const auto& s : data)
            if (std::get<Series>(s).y.size() != k.T) throw ArgumentError("series lengths differ");
    } else {
        throw ArgumentError("unknown kernel '" + k.name + "'");
    }
    return k;
}
FitSetup resolve_setup(const Config& cfg, const Dataset& data) {
    FitSetup s;
    s.kernel = resolve_kernel(cfg.kernel, data);
    const std::string& name = s.kernel.name;
    GridSpec g;
    Box box;
    std::vector<double> init;
    if (name == "density") {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, m = 0.0, q = 0.0;
        std::size_t count = 0;
        for (const auto& o : data) {
            const double y = std::get<Scalar>(o).y;
            lo = std::min(lo, y);
            hi = std::max(hi, y);
            ++count;
            const double dlt = y - m;
            m += dlt / static_cast<double>(count);
            q += dlt * (y - m);
        }
        const double sd = std::sqrt(q / static_cast<double>(std::max<std::size_t>(1, count - 1)));
        if (!(sd > 0.0)) throw ArgumentError("density data have zero spread; set [grid] and [optimizer] bounds");
        g.bounds = {{lo, hi}};
        box = Box{{0.01 * sd}, {2.0 * sd}};
        init = {0.5 * sd};
    } else if (name == "linear_ri") {
        double sy = 0.0;
        const double ybar = mean_sd_replicated(data, &sy);
        g.bounds = {{ybar - 3.0 * sy, ybar + 3.0 * sy}};
        const auto ols = pooled_least_squares(data);
        for (std::size_t c = 0; c < s.kernel.d; ++c) {
            init.push_back(ols[c + 1]);
            box.lo.push_back(ols[c + 1] - 10.0);
            box.hi.push_back(ols[c + 1] + 10.0);
        }
        init.push_back(std::clamp(ols[s.kernel.d + 1], 0.1, 10.0));
        box.lo.push_back(0.05);
        box.hi.push_back(20.0);
    } else if (name == "logistic_ri") {
        g.bounds = {{-8.0, 8.0}};
        const auto pooled = pooled_logistic(data);
        for (std::size_t c = 0; c < s.kernel.d; ++c) {
            const double b = std::clamp(pooled[c + 1], -50.0, 50.0);
            init.push_back(b);
            box.lo.push_back(b - 10.0);
            box.hi.push_back(b + 10.0);
        }
    } else {
        const ArSupport sup;
        g.rule = GridRule::legendre;
        g.bounds = {sup.sigma2, sup.phi};
        g.points = {21, 21};
        box = Box{{0.001}, {0.999}};
        init = {0.5};
    }
    if (g.points.size() != g.bounds.size()) g.points.assign(g.bounds.size(), 201);
    if (cfg.grid.rule) g.rule = *cfg.grid.rule;
    if (!cfg.grid.bounds.empty()) g.bounds = cfg.grid.bounds;
    if (!cfg.grid.points.empty()) g.points = cfg.grid.points;
    if (g.points.size() == 1 && g.bounds.size() == 2) g.points.push_back(g.points[0]);
    s.grid = make_grid(g);
    const std::size_t k = parameter_names(s.kernel).size();
    if (s.grid->dim() != (name == "ar1_mix" ? 2u : 1u))
        throw ArgumentError("[grid] has " + std::to_string(s.grid->dim()) + " axes; " + name + " needs " +
                            (name == "ar1_mix" ? "2" : "1"));
    if (!cfg.optimizer.lo.empty()) box.lo = cfg.optimizer.lo;
    if (!cfg.optimizer.hi.empty()) box.hi = cfg.optimizer.hi;
    if (box.lo.size() != k || box.hi.size() != k)
        throw ArgumentError("[optimizer] lo and hi need " + std::to_string(k) + " entries");
    box.validate();
    if (!cfg.optimizer.init.empty()) {
        init = cfg.optimizer.init;
    } else {
        for (std::size_t c = 0; c < k; ++c) init[c] = std::clamp(init[c], box.lo[c], box.hi[c]);
    }
    if (init.size() != k) throw ArgumentError("[optimizer] init needs " + std::to_string(k) + " entries");
    if (!box.contains(init)) throw ArgumentError("[optimizer] init lies outside the box");
    s.box = std::move(box);
    s.init = std::move(init);
    return s;
}
PRModel make_model(const Config& cfg, const FitSetup& setup) {
    return PRModel{make_kernel(setup.kernel), GridDensity::uniform(setup.grid), make_weights(cfg.weights)};
}
LikelihoodConfig likelihood_config(const OptimizerSpec& opt) {
    if (opt.permutations == 0) throw ArgumentError("[optimizer] permutations must be at least 1");
    return LikelihoodConfig{opt.permutations, opt.seed, opt.order};
}
FitOptions fit_options(const OptimizerSpec& opt) {
    FitOptions o;
    o.starts = opt.starts;
    o.max_iter = opt.max_iter;
    o.alpha = opt.alpha;
    o.nelder_mead = opt.nelder_mead;
    return o;
}
// ---- outputs ----
std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}
std::vector<double> normalized_curve(std::span<const double> loglik, const CurveSpec& curve) {
    if (loglik.size() != curve.size()) throw ArgumentError("normalized_curve: length mismatch");
    const std::size_t k = curve.points.size();
    double top = -std::numeric_limits<double>::infinity();
    for (double l : loglik) top = std::max(top, l);
    if (!std::isfinite(top)) throw NumericalError("normalized_curve: no finite log-likelihood value");
    std::vector<double> out(loglik.size());
    std::vector<std::size_t> idx(k, 0);
    double total = 0.0;
    for (std::size_t n = 0; n < loglik.size(); ++n) {
        double w = 1.0;
        for (std::size_t c = 0; c < k; ++c) {
            const std::size_t p = curve.points[c];
            if (p == 1) continue;
            const double h = (curve.hi[c] - curve.lo[c]) / static_cast<double>(p - 1);
            w *= (idx[c] == 0 || idx[c] == p - 1) ? 0.5 * h : h;
        }
        out[n] = std::exp(loglik[n] - top);
        total += w * out[n];
        for (std::size_t c = k; c-- > 0;) {
            if (++idx[c] < curve.points[c]) break;
            idx[c] = 0;
        }
    }
    for (double& v : out) v /= total;
    return out;
}
void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& points, const CurveSpec& curve) {
    if (points.size() != curve.size()) throw ArgumentError("write_curve_csv: length mismatch");
    std::vector<double> lp, lq;
    for (const auto& p : points) {
        lp.push_back(p.prml);
        lq.push_back(p.profile);
    }
    const auto np = normalized_curve(lp, curve), nq = normalized_curve(lq, curve);
    const std::size_t k = curve.points.size();
    for (std::size_t c = 0; c < k; ++c) os << "theta_" << c + 1 << ',';
    os << "loglik_prml,loglik_profile,normalized_prml,normalized_profile\n";
    for (std::size_t n = 0; n < points.size(); ++n) {
        for (double t : points[n].theta) os << format_double(t) << ',';
        os << format_double(lp[n]) << ',' << format_double(lq[n]) << ',' << format_double(np[n]) << ','
           << format_double(nq[n]) << '\n';
    }
}
void write_fit_report(std::ostream& os, const FitResult& fit, const std::vector<std::string>& names) {
    if (names.size() != fit.theta_hat.size()) throw ArgumentError("write_fit_report: one name per parameter");
    auto b = [](bool v) { return v ? "true" : "false"; };
    os << "objective = " << fit.objective << '\n'
       << "method = " << fit.method << '\n'
       << "permutations = " << fit.permutations << '\n'
       << "converged = " << b(fit.converged) << '\n'
       << "boundary = " << b(fit.boundary) << '\n'
       << "hessian_pd = " << b(fit.hessian_pd) << '\n'
       << "loglik = " << format_double(fit.loglik_at_max) << '\n'
       << "iterations = " << fit.iterations << '\n'
       << "evaluations = " << fit.evaluations << '\n'
       << "alpha = " << format_double(fit.alpha) << '\n';
    for (std::size_t c = 0; c < names.size(); ++c) {
        const std::string& n = names[c];
        os << n << ".estimate = " << format_double(fit.theta_hat[c]) << '\n';
        if (c < fit.std_errors.size()) os << n << ".se = " << format_double(fit.std_errors[c]) << '\n';
        if (c < fit.intervals.size()) {
            const auto& ci = fit.intervals[c];
            os << n << ".ci_valid = " << b(ci.valid) << '\n';
            if (ci.valid) os << n << ".lo = " << format_double(ci.lo) << '\n' << n << ".hi = " << format_double(ci.hi) << '\n';
        }
    }
    for (Eigen::Index i = 0; i < fit.hessian.rows(); ++i)
        for (Eigen::Index j = 0; j < fit.hessian.cols(); ++j)
            os << "hessian." << names[static_cast<std::size_t>(i)] << '.' << names[static_cast<std::size_t>(j)]
               << " = " << format_double(fit.hessian(i, j)) << '\n';
}
void write_density_csv(std::ostream& os, const GridDensity& f) {
    const Grid& g = f.grid();
    if (g.dim() == 1) os << "u,f\n";
    else os << "u1,u2,f\n";
    for (std::size_t j = 0; j < g.size(); ++j) {
        for (double u : g.node(j)) os << format_double(u) << ',';
        os << format_double(f.values()[j]) << '\n';
    }
}
}  // namespace prml
