#pragma once

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "oee/errors.hpp"
#include "oee/types.hpp"

namespace oee {

namespace detail {

// Shortest decimal that round-trips the double (17 significant digits).
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
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
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw IoError("trailing characters in number: '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw IoError("not a number: '" + s + "'");
    } catch (const std::out_of_range&) {
        throw IoError("number out of range: '" + s + "'");
    }
}

}  // namespace detail

// Line-delimited text format:
//   oee-dataset v1 ds=<d_s> da=<d<count>|c<dim>> source=<train|test> [policy=..] [seed=..]
//   t, s..., a..., s_next..., r
// Discrete actions serialize as one index; continuous actions as dim values.
inline void write_dataset(const TransitionDataset& ds, std::ostream& os) {
    os << "oee-dataset v1 ds=" << ds.d_s << " da=" << ds.action_spec.token()
       << " source=" << to_string(ds.source);
    if (!ds.policy_desc.empty()) os << " policy=" << ds.policy_desc;
    os << " seed=" << ds.seed << "\n";
    for (const auto& tr : ds.records) {
        os << tr.t;
        for (double x : tr.s) os << ", " << detail::format_double(x);
        if (tr.a.is_discrete()) {
            os << ", " << tr.a.index();
        } else {
            for (double x : tr.a.values()) os << ", " << detail::format_double(x);
        }
        for (double x : tr.s_next) os << ", " << detail::format_double(x);
        os << ", " << detail::format_double(tr.r) << "\n";
    }
}

inline void write_dataset_file(const TransitionDataset& ds, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_dataset(ds, os);
    if (!os) throw IoError("write failed: " + path);
}

inline TransitionDataset read_dataset(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw IoError("dataset: empty input");
    std::istringstream hs(header);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != "oee-dataset" || version != "v1")
        throw IoError("dataset: bad header '" + header + "'");
    TransitionDataset ds;
    bool have_ds = false, have_da = false, have_source = false;
    std::string tok;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw IoError("dataset: bad header token '" + tok + "'");
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "ds") {
            ds.d_s = std::stoi(val);
            have_ds = true;
        } else if (key == "da") {
            if (val.size() < 2 || (val[0] != 'd' && val[0] != 'c'))
                throw IoError("dataset: bad action spec '" + val + "'");
            const int n = std::stoi(val.substr(1));
            if (val[0] == 'd') {
                ds.action_spec = ActionSpec::discrete(n);
            } else {
                // Ranges are not serialized; readers get an unbounded box.
                std::vector<std::pair<double, double>> ranges(
                    n, {-std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()});
                ds.action_spec = ActionSpec::continuous(ranges);
            }
            have_da = true;
        } else if (key == "source") {
            if (val != "train" && val != "test")
                throw IoError("dataset: bad source '" + val + "'");
            ds.source = val == "train" ? DatasetSource::Train : DatasetSource::Test;
            have_source = true;
        } else if (key == "policy") {
            ds.policy_desc = val;
        } else if (key == "seed") {
            ds.seed = std::stoull(val);
        }
        // Unknown keys are ignored for forward compatibility.
    }
    if (!have_ds || !have_da || !have_source)
        throw IoError("dataset: header missing ds/da/source");
    const int da = ds.action_spec.kind == ActionSpec::Kind::Discrete ? 1 : ds.action_spec.dim();
    const std::size_t expected = 1 + 2 * static_cast<std::size_t>(ds.d_s) + da + 1;
    std::string line;
    while (std::getline(is, line)) {
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split(line, ',');
        if (cells.size() != expected)
            throw IoError("dataset: expected " + std::to_string(expected) + " fields, got " +
                          std::to_string(cells.size()));
        for (auto& c : cells) c = detail::trim(c);
        Transition tr;
        std::size_t k = 0;
        tr.t = std::stoi(cells[k++]);
        if (tr.t < 0) throw IoError("dataset: negative time index");
        tr.s.resize(ds.d_s);
        for (int i = 0; i < ds.d_s; ++i) tr.s[i] = detail::parse_double(cells[k++]);
        if (ds.action_spec.kind == ActionSpec::Kind::Discrete) {
            tr.a = ActionId::discrete(std::stoi(cells[k++]));
        } else {
            std::vector<double> v(da);
            for (int i = 0; i < da; ++i) v[i] = detail::parse_double(cells[k++]);
            tr.a = ActionId::continuous(std::move(v));
        }
        tr.s_next.resize(ds.d_s);
        for (int i = 0; i < ds.d_s; ++i) tr.s_next[i] = detail::parse_double(cells[k++]);
        tr.r = detail::parse_double(cells[k++]);
        ds.records.push_back(std::move(tr));
    }
    return ds;
}

inline TransitionDataset read_dataset_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path);
    return read_dataset(is);
}

}  // namespace oee
