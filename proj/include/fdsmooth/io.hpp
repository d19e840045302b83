#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fdsmooth/dataset.hpp"
#include "fdsmooth/errors.hpp"
#include "fdsmooth/evaluation.hpp"
#include "fdsmooth/smoothing.hpp"

namespace fdsmooth {

// Shortest decimal form of a double that parses back to the same bits.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
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

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s) {
    const std::string t = trim(s);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0') throw ParseError("bad number: '" + t + "'");
    return v;
}

inline long long parse_int(const std::string& s) {
    const std::string t = trim(s);
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (end == t.c_str() || *end != '\0') throw ParseError("bad integer: '" + t + "'");
    return v;
}

}  // namespace detail

enum class IndexBase { Zero, One };

// Long-format dataset: '#' comment lines, then a "subject,var,u,y" header,
// then one observation per row.
inline void write_long_format(std::ostream& os, const FunctionalDataset& data, IndexBase base,
                              const std::vector<std::string>& comments = {}) {
    const std::size_t off = base == IndexBase::One ? 1 : 0;
    for (const auto& c : comments) os << "# " << c << "\n";
    os << "subject,var,u,y\n";
    for (std::size_t i = 0; i < data.n_subjects(); ++i)
        for (std::size_t j = 0; j < data.n_vars(); ++j) {
            const Series& s = data.series(i, j);
            for (std::size_t t = 0; t < s.size(); ++t)
                os << (i + off) << ',' << (j + off) << ',' << format_double(s.u[t]) << ','
                   << format_double(s.y[t]) << "\n";
        }
}

inline FunctionalDataset read_long_format(std::istream& is, IndexBase base) {
    const long long off = base == IndexBase::One ? 1 : 0;
    std::string line;
    bool saw_header = false;
    struct Row {
        std::size_t i, j;
        double u, y;
    };
    std::vector<Row> rows;
    long long max_i = -1, max_j = -1;
    while (std::getline(is, line)) {
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!saw_header) {
            if (t != "subject,var,u,y")
                throw ParseError("long format: expected header 'subject,var,u,y', got '" + t +
                                 "'");
            saw_header = true;
            continue;
        }
        const auto f = detail::split(t, ',');
        if (f.size() != 4) throw ParseError("long format: expected 4 fields: '" + t + "'");
        const long long i = detail::parse_int(f[0]) - off;
        const long long j = detail::parse_int(f[1]) - off;
        if (i < 0 || j < 0)
            throw ParseError("long format: index below base in row '" + t + "'");
        const double u = detail::parse_double(f[2]);
        const double y = detail::parse_double(f[3]);
        if (!(u >= 0.0 && u <= 1.0))
            throw ParseError("long format: time outside [0,1] in row '" + t + "'");
        rows.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), u, y});
        max_i = std::max(max_i, i);
        max_j = std::max(max_j, j);
    }
    if (!saw_header) throw ParseError("long format: missing header");
    if (rows.empty()) throw ParseError("long format: no data rows");
    DatasetBuilder b(static_cast<std::size_t>(max_i + 1), static_cast<std::size_t>(max_j + 1));
    for (const Row& r : rows) b.add(r.i, r.j, r.u, r.y);
    return std::move(b).build();
}

// Curve file: comments, a row of grid points, a row of values ("nan" where
// the local fit failed).
inline void write_curve(std::ostream& os, const CurveEstimate& est,
                        const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) os << "# " << c << "\n";
    for (std::size_t r = 0; r < est.grid.size(); ++r)
        os << (r ? "," : "") << format_double(est.grid[r]);
    os << "\n";
    for (std::size_t r = 0; r < est.values.size(); ++r)
        os << (r ? "," : "") << format_double(est.values[r]);
    os << "\n";
}

inline CurveEstimate read_curve(std::istream& is) {
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line) && rows.size() < 2) {
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::vector<double> vals;
        for (const auto& f : detail::split(t, ',')) vals.push_back(detail::parse_double(f));
        rows.push_back(std::move(vals));
    }
    if (rows.size() != 2 || rows[0].size() != rows[1].size())
        throw ParseError("curve file: expected matching grid and value rows");
    CurveEstimate est;
    est.grid = std::move(rows[0]);
    est.values = std::move(rows[1]);
    for (std::size_t r = 0; r < est.values.size(); ++r)
        if (std::isnan(est.values[r])) est.failures.push_back(r);
    return est;
}

// Surface file: comments, grid header lines, then one row per grid_u point.
inline void write_surface(std::ostream& os, const SurfaceEstimate& est,
                          const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) os << "# " << c << "\n";
    os << "# grid_u:";
    for (std::size_t r = 0; r < est.grid_u.size(); ++r)
        os << (r ? "," : " ") << format_double(est.grid_u[r]);
    os << "\n# grid_v:";
    for (std::size_t c = 0; c < est.grid_v.size(); ++c)
        os << (c ? "," : " ") << format_double(est.grid_v[c]);
    os << "\n";
    for (std::size_t r = 0; r < est.grid_u.size(); ++r) {
        for (std::size_t c = 0; c < est.grid_v.size(); ++c)
            os << (c ? "," : "") << format_double(est.at(r, c));
        os << "\n";
    }
}

inline SurfaceEstimate read_surface(std::istream& is) {
    SurfaceEstimate est;
    std::string line;
    std::vector<std::vector<double>> rows;
    auto parse_list = [](const std::string& s) {
        std::vector<double> v;
        for (const auto& f : detail::split(s, ',')) v.push_back(detail::parse_double(f));
        return v;
    };
    while (std::getline(is, line)) {
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t.rfind("# grid_u:", 0) == 0) {
            est.grid_u = parse_list(detail::trim(t.substr(9)));
        } else if (t.rfind("# grid_v:", 0) == 0) {
            est.grid_v = parse_list(detail::trim(t.substr(9)));
        } else if (t[0] == '#') {
            continue;
        } else {
            rows.push_back(parse_list(t));
        }
    }
    if (est.grid_u.empty() || est.grid_v.empty() || rows.size() != est.grid_u.size())
        throw ParseError("surface file: grid headers and row count do not match");
    est.values.reserve(est.grid_u.size() * est.grid_v.size());
    for (const auto& r : rows) {
        if (r.size() != est.grid_v.size())
            throw ParseError("surface file: row width does not match grid_v");
        est.values.insert(est.values.end(), r.begin(), r.end());
    }
    for (std::size_t r = 0; r < est.grid_u.size(); ++r)
        for (std::size_t c = 0; c < est.grid_v.size(); ++c)
            if (std::isnan(est.at(r, c))) est.failures.emplace_back(r, c);
    return est;
}

// MISE table: one row per sweep cell, "failed" status for flagged cells.
inline void write_mise_report(std::ostream& os, const MiseReport& rep,
                              const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) os << "# " << c << "\n";
    os << "j,k,h,mise,status\n";
    auto cell_row = [&os](std::size_t j, const std::string& k, double h, double v) {
        os << j << ',' << k << ',' << format_double(h) << ',';
        if (std::isnan(v))
            os << "nan,failed\n";
        else
            os << format_double(v) << ",ok\n";
    };
    if (rep.has_mean)
        for (std::size_t j = 0; j < rep.p; ++j)
            for (std::size_t hi = 0; hi < rep.h_mean.size(); ++hi)
                cell_row(j, "", rep.h_mean[hi], rep.mean_cell(j, hi));
    if (rep.has_cov)
        for (std::size_t j = 0; j < rep.p; ++j)
            for (std::size_t k = 0; k < rep.p; ++k)
                for (std::size_t hi = 0; hi < rep.h_cov.size(); ++hi)
                    cell_row(j, std::to_string(k), rep.h_cov[hi], rep.cov_cell(j, k, hi));
}

inline void write_aggregates(std::ostream& os, const Aggregates& agg,
                             const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) os << "# " << c << "\n";
    os << "ave_mise_mean = " << format_double(agg.ave_mise_mean) << "\n";
    os << "max_mise_mean = " << format_double(agg.max_mise_mean) << "\n";
    os << "ave_mise_cov = " << format_double(agg.ave_mise_cov) << "\n";
    os << "max_mise_cov = " << format_double(agg.max_mise_cov) << "\n";
}

// Flat "key = value" configuration text. '#' starts a comment line; values
// may be comma-separated lists. Unknown keys are rejected by the consumer.
class KeyValueConfig {
  public:
    static KeyValueConfig parse(std::istream& is) {
        KeyValueConfig cfg;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const std::string t = detail::trim(line);
            if (t.empty() || t[0] == '#') continue;
            const std::size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
            const std::string key = detail::trim(t.substr(0, eq));
            const std::string val = detail::trim(t.substr(eq + 1));
            if (key.empty())
                throw ParseError("config line " + std::to_string(lineno) + ": empty key");
            if (cfg.values_.count(key))
                throw ParseError("config: duplicate key '" + key + "'");
            cfg.values_[key] = val;
        }
        return cfg;
    }

    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ParseError("config: cannot open '" + path + "'");
        return parse(f);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : detail::parse_double(it->second);
    }
    long long get_int(const std::string& key, long long fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : detail::parse_int(it->second);
    }
    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const std::string v = it->second;
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ParseError("config: key '" + key + "' is not a boolean: '" + v + "'");
    }
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        for (const auto& f : detail::split(it->second, ',')) out.push_back(detail::parse_double(f));
        return out;
    }
    std::vector<long long> get_int_list(const std::string& key,
                                        const std::vector<long long>& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<long long> out;
        for (const auto& f : detail::split(it->second, ',')) out.push_back(detail::parse_int(f));
        return out;
    }

    // Misspelled knobs must fail loudly, never silently default.
    void reject_unknown(const std::set<std::string>& allowed) const {
        for (const auto& [k, v] : values_)
            if (!allowed.count(k)) throw ParseError("config: unknown key '" + k + "'");
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

// FNV-1a over a canonical text rendering; stamped into every output file.
inline std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot write '" + path + "'");
    f << content;
}

}  // namespace fdsmooth
