#pragma once

/**
 * @file
 *
 * @brief Text serialization of SymFn tables and CSV helpers.
 *
 * SymFn file layout:
 *
 *     # symfn num_sites=<M> max_order=<N>
 *     order,sites,value
 *     0,,1
 *     1,3,0.29999999999999999
 *     2,3 5,0.085...
 *
 * Sites are space-separated and increasing; values use 17 significant digits,
 * so write/read is bit-exact.
 */

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "symfn.hpp"

namespace glauber {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_symfn(std::ostream& os, const SymFn& f) {
    os << "# symfn num_sites=" << f.num_sites() << " max_order=" << f.max_order() << "\n";
    os << "order,sites,value\n";
    f.for_each([&](FiniteConfig eta, double v) {
        os << eta.size() << ',';
        bool first = true;
        for (Site x : eta.sites()) {
            if (!first) os << ' ';
            os << x;
            first = false;
        }
        os << ',' << format_double(v) << '\n';
    });
}

inline SymFn read_symfn(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("symfn: empty input");
    int M = 0, N = 0;
    if (std::sscanf(line.c_str(), "# symfn num_sites=%d max_order=%d", &M, &N) != 2)
        throw FormatError("symfn: bad header line: " + line);
    if (!std::getline(is, line) || line != "order,sites,value") throw FormatError("symfn: missing column header");
    SymFn f(M, N);
    std::unordered_set<Mask> seen;
    long lineno = 2;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw FormatError("symfn: malformed row at line " + std::to_string(lineno));
        const int order = std::stoi(line.substr(0, c1));
        std::vector<Site> sites;
        std::istringstream ss(line.substr(c1 + 1, c2 - c1 - 1));
        for (Site x; ss >> x;) sites.push_back(x);
        if (static_cast<int>(sites.size()) != order)
            throw FormatError("symfn: order does not match tuple at line " + std::to_string(lineno));
        const std::string vtext = line.substr(c2 + 1);
        char* end = nullptr;
        const double v = std::strtod(vtext.c_str(), &end);
        if (end == vtext.c_str()) throw FormatError("symfn: bad value at line " + std::to_string(lineno));
        const FiniteConfig eta(sites);
        if (!seen.insert(eta.mask()).second)
            throw FormatError("symfn: duplicate tuple at line " + std::to_string(lineno));
        f.set(eta, v);
    }
    return f;
}

inline void save_symfn(const std::string& path, const SymFn& f) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write " + path);
    write_symfn(os, f);
}

inline SymFn load_symfn(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot read " + path);
    return read_symfn(is);
}

/// Minimal CSV table: header plus rows of already-formatted cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write(std::ostream& os) const {
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
            os << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
    }

    void save(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw FormatError("cannot write " + path);
        write(os);
    }

    static CsvTable load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw FormatError("cannot read " + path);
        CsvTable t;
        std::string line;
        auto split = [](const std::string& s) {
            std::vector<std::string> out;
            std::string cell;
            std::istringstream ss(s);
            while (std::getline(ss, cell, ',')) out.push_back(cell);
            if (!s.empty() && s.back() == ',') out.emplace_back();
            return out;
        };
        if (!std::getline(is, line)) throw FormatError("empty CSV " + path);
        t.header = split(line);
        while (std::getline(is, line))
            if (!line.empty()) t.rows.push_back(split(line));
        return t;
    }

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

}  // namespace glauber
