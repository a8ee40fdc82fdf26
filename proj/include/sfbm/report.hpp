#pragma once
// Experiment report output. CSV dialect is a bit-exact contract: comma
// separators, '.' decimal point, one header row, LF line endings, doubles
// printed with %.17g so values round-trip. Wall-clock time never enters a
// CSV; it lives in the JSON summary, which also echoes the configuration.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfbm {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_size(std::size_t v) { return std::to_string(v); }

// In-memory CSV table written in one shot; cells are preformatted strings.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != columns.size())
            throw std::invalid_argument("CsvTable: row width does not match the header");
        rows.push_back(std::move(cells));
    }
    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);  // binary keeps LF on every platform
        if (!out) throw std::runtime_error("CsvTable: cannot open " + path);
        for (std::size_t j = 0; j < columns.size(); ++j)
            out << (j ? "," : "") << columns[j];
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
            out << '\n';
        }
        if (!out) throw std::runtime_error("CsvTable: write failed for " + path);
    }
};

namespace detail {

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

} // namespace detail

// Minimal JSON document builder: values are stored preformatted, so callers
// pass through json_str / json_num / json_bool / json_raw.
struct JsonObject {
    std::vector<std::pair<std::string, std::string>> fields;

    void set(const std::string& key, std::string preformatted) {
        fields.emplace_back(key, std::move(preformatted));
    }
    std::string str() const {
        std::string out = "{";
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ",";
            out += "\"" + detail::json_escape(fields[i].first) + "\":" + fields[i].second;
        }
        out += "}";
        return out;
    }
};

inline std::string json_str(const std::string& v) {
    return "\"" + detail::json_escape(v) + "\"";
}
inline std::string json_num(double v) {
    if (std::isnan(v)) return "\"nan\"";
    if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
    return format_double(v);
}
inline std::string json_num(std::size_t v) { return std::to_string(v); }
inline std::string json_bool(bool v) { return v ? "true" : "false"; }

// One tolerance-gated scalar check; pass/fail exists only where a tolerance
// is defined, which is exactly what this type records.
struct GateResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

inline std::string json_gates(const std::vector<GateResult>& gates) {
    std::string out = "[";
    for (std::size_t i = 0; i < gates.size(); ++i) {
        if (i) out += ",";
        JsonObject g;
        g.set("name", json_str(gates[i].name));
        g.set("value", json_num(gates[i].value));
        g.set("tolerance", json_num(gates[i].tolerance));
        g.set("pass", json_bool(gates[i].pass));
        out += g.str();
    }
    return out + "]";
}

inline std::string json_config(const std::map<std::string, std::string>& cfg) {
    JsonObject obj;
    for (const auto& [k, v] : cfg) obj.set(k, json_str(v));
    return obj.str();
}

inline void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_text: cannot open " + path);
    out << body << '\n';
    if (!out) throw std::runtime_error("write_text: write failed for " + path);
}

} // namespace sfbm
