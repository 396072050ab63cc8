#include "sgmvar/series.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sgmvar/error.hpp"
#include "sgmvar/parallel.hpp"

namespace sgmvar {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = b + s.size();
    if (*b == '+') ++b;
    const auto res = std::from_chars(b, e, v);
    return res.ec == std::errc() && res.ptr == e && std::isfinite(v);
}

// Banded Cholesky of I + lambda D'D (bandwidth 2) followed by two triangular solves.
Eigen::VectorXd hp_trend(const Eigen::VectorXd& x, double lambda) {
    const Eigen::Index n = x.size();
    if (n < 3 || lambda == 0.0) return x;
    Eigen::VectorXd a0 = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd a1 = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd a2 = Eigen::VectorXd::Zero(n);
    const double c[3] = {1.0, -2.0, 1.0};
    for (Eigen::Index r = 0; r + 2 < n; ++r)
        for (int i = 0; i < 3; ++i) {
            a0[r + i] += lambda * c[i] * c[i];
            if (i < 2) a1[r + i] += lambda * c[i] * c[i + 1];
            if (i < 1) a2[r + i] += lambda * c[i] * c[i + 2];
        }
    Eigen::VectorXd l0(n), l1 = Eigen::VectorXd::Zero(n), l2 = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i >= 2) l2[i] = a2[i - 2] / l0[i - 2];
        if (i >= 1) l1[i] = (a1[i - 1] - (i >= 2 ? l2[i] * l1[i - 1] : 0.0)) / l0[i - 1];
        l0[i] = std::sqrt(a0[i] - l1[i] * l1[i] - l2[i] * l2[i]);
    }
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = x[i];
        if (i >= 1) s -= l1[i] * z[i - 1];
        if (i >= 2) s -= l2[i] * z[i - 2];
        z[i] = s / l0[i];
    }
    Eigen::VectorXd t(n);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        double s = z[i];
        if (i + 1 < n) s -= l1[i + 1] * t[i + 1];
        if (i + 2 < n) s -= l2[i + 2] * t[i + 2];
        t[i] = s / l0[i];
    }
    return t;
}

}  // namespace

int SeriesFrame::column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    throw DimensionError("no column named '" + name + "'");
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

SeriesFrame parse_csv(std::istream& in, const std::string& source) {
    SeriesFrame f;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (!header_seen) {
            if (cells.size() < 2) throw ParseError(source + ":" + std::to_string(lineno) + ": header needs an index column and at least one variable");
            f.index_name = cells[0].empty() ? "index" : cells[0];
            std::set<std::string> seen;
            for (std::size_t c = 1; c < cells.size(); ++c) {
                if (cells[c].empty())
                    throw ParseError(source + ":" + std::to_string(lineno) + ": empty header in column " + std::to_string(c + 1));
                if (!seen.insert(cells[c]).second)
                    throw ParseError(source + ":" + std::to_string(lineno) + ": duplicate header '" + cells[c] + "' in column " +
                                     std::to_string(c + 1));
                f.names.push_back(cells[c]);
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != f.names.size() + 1)
            throw ParseError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(f.names.size() + 1) +
                             " cells, found " + std::to_string(cells.size()));
        f.index.push_back(cells[0]);
        std::vector<double> row(f.names.size());
        for (std::size_t c = 0; c < f.names.size(); ++c) {
            const std::string& cell = cells[c + 1];
            const std::string where = source + ":" + std::to_string(lineno) + ", column '" + f.names[c] + "'";
            if (cell.empty()) throw ParseError(where + ": missing value");
            if (!parse_double(cell, row[c])) throw ParseError(where + ": non-numeric value '" + cell + "'");
        }
        rows.push_back(std::move(row));
    }
    if (!header_seen) throw ParseError(source + ": empty file");
    f.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(f.names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < f.names.size(); ++c) f.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return f;
}

SeriesFrame load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return parse_csv(in, path);
}

void write_csv(const SeriesFrame& frame, std::ostream& out) {
    if (static_cast<int>(frame.names.size()) != frame.d() || static_cast<int>(frame.index.size()) != frame.T())
        throw DimensionError("write_csv: names/index do not match the values");
    out << quote_if_needed(frame.index_name);
    for (const auto& n : frame.names) out << ',' << quote_if_needed(n);
    out << '\n';
    for (int t = 0; t < frame.T(); ++t) {
        out << quote_if_needed(frame.index[static_cast<std::size_t>(t)]);
        for (int c = 0; c < frame.d(); ++c) out << ',' << format_double(frame.values(t, c));
        out << '\n';
    }
}

void save_csv(const SeriesFrame& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    write_csv(frame, out);
    if (!out) throw ParseError("failed writing '" + path + "'");
}

Eigen::VectorXd log_diff_100(const Eigen::VectorXd& x) {
    if (x.size() < 2) throw DimensionError("log_diff_100: need at least two observations");
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x[i] > 0.0)) throw InvalidParameters("log_diff_100: non-positive value at position " + std::to_string(i + 1));
    Eigen::VectorXd out(x.size() - 1);
    for (Eigen::Index t = 1; t < x.size(); ++t) out[t - 1] = 100.0 * std::log(x[t] / x[t - 1]);
    return out;
}

HpResult hp_filter_two_sided(const Eigen::VectorXd& x, double lambda) {
    if (x.size() < 4) throw DimensionError("hp_filter: need at least 4 observations");
    if (!(lambda >= 0.0)) throw InvalidParameters("hp_filter: lambda must be non-negative");
    HpResult r;
    r.trend = hp_trend(x, lambda);
    r.cycle = x - r.trend;
    return r;
}

HpResult hp_filter_one_sided(const Eigen::VectorXd& x, double lambda, int threads) {
    if (x.size() < 4) throw DimensionError("hp_filter: need at least 4 observations");
    if (!(lambda >= 0.0)) throw InvalidParameters("hp_filter: lambda must be non-negative");
    const Eigen::Index n = x.size();
    HpResult r;
    r.trend = x;
    parallel_for(static_cast<std::size_t>(n - 3), static_cast<unsigned>(std::max(threads, 0)), [&](std::size_t k) {
        const Eigen::Index len = static_cast<Eigen::Index>(k) + 4;
        r.trend[len - 1] = hp_trend(x.head(len), lambda)[len - 1];
    });
    r.cycle = x - r.trend;
    return r;
}

TransformManifest TransformManifest::parse(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("transform manifest: ") + e.what());
    }
    if (!j.is_object() || !j.contains("transforms") || !j["transforms"].is_array())
        throw ParseError("transform manifest: expected an object with a \"transforms\" array");
    static const std::set<std::string> ops{"identity",           "log_diff_100",       "hp_cycle_two_sided",
                                           "hp_trend_two_sided", "hp_cycle_one_sided", "hp_trend_one_sided"};
    TransformManifest m;
    int i = 0;
    for (const auto& s : j["transforms"]) {
        ++i;
        const std::string where = "transform manifest entry " + std::to_string(i);
        if (!s.is_object() || !s.contains("column") || !s["column"].is_string())
            throw ParseError(where + ": missing \"column\"");
        TransformStep step;
        step.column = s["column"].get<std::string>();
        step.op = s.value("op", std::string("identity"));
        if (!ops.count(step.op)) throw ParseError(where + ": unknown op '" + step.op + "'");
        if (s.contains("lambda")) {
            if (!s["lambda"].is_number()) throw ParseError(where + ": \"lambda\" must be a number");
            step.lambda = s["lambda"].get<double>();
        }
        step.output = s.value("output", step.column);
        m.steps.push_back(std::move(step));
    }
    return m;
}

TransformManifest TransformManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

SeriesFrame apply_transforms(const SeriesFrame& frame, const TransformManifest& manifest) {
    if (manifest.steps.empty()) throw InvalidParameters("transform manifest has no steps");
    bool drop_first = false;
    for (const auto& s : manifest.steps) drop_first = drop_first || s.op == "log_diff_100";
    const int T = frame.T();
    const int offset = drop_first ? 1 : 0;
    if (T - offset < 1) throw DimensionError("transform: not enough observations");

    SeriesFrame out;
    out.index_name = frame.index_name;
    out.index.assign(frame.index.begin() + offset, frame.index.end());
    out.values.resize(T - offset, static_cast<Eigen::Index>(manifest.steps.size()));
    std::set<std::string> seen;
    for (std::size_t k = 0; k < manifest.steps.size(); ++k) {
        const auto& s = manifest.steps[k];
        if (!seen.insert(s.output).second) throw InvalidParameters("transform: duplicate output column '" + s.output + "'");
        const Eigen::VectorXd x = frame.values.col(frame.column(s.column));
        Eigen::VectorXd y;
        if (s.op == "identity") y = x;
        else if (s.op == "log_diff_100") y = log_diff_100(x);
        else if (s.op == "hp_cycle_two_sided") y = hp_filter_two_sided(x, s.lambda).cycle;
        else if (s.op == "hp_trend_two_sided") y = hp_filter_two_sided(x, s.lambda).trend;
        else if (s.op == "hp_cycle_one_sided") y = hp_filter_one_sided(x, s.lambda).cycle;
        else y = hp_filter_one_sided(x, s.lambda).trend;
        out.values.col(static_cast<Eigen::Index>(k)) = y.tail(T - offset);
        out.names.push_back(s.output);
    }
    return out;
}

}  // namespace sgmvar
