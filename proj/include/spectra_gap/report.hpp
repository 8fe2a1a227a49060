#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectra_gap/bounds.hpp"
#include "spectra_gap/identities.hpp"
#include "spectra_gap/oracle.hpp"

namespace spectra_gap {

/// 17 significant digits; inf and nan spelled so that strtod reads them back.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double parse_double(const std::string& s) {
    require(!s.empty(), ErrorCode::ConfigError, "empty numeric field");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    require(end == s.c_str() + s.size(), ErrorCode::ConfigError, "bad numeric field '" + s + "'");
    return v;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

/// Rows of a comma-separated file, honoring double-quoted fields.
inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get(c);
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace detail {

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_quote(fields[i]);
    out << '\n';
}

inline std::vector<std::vector<std::string>> body(std::istream& in, const std::string& header) {
    auto rows = read_csv(in);
    require(!rows.empty(), ErrorCode::ConfigError, "missing header row");
    std::string got;
    for (std::size_t i = 0; i < rows[0].size(); ++i) got += (i ? "," : "") + rows[0][i];
    require(got == header, ErrorCode::ConfigError, "unexpected header '" + got + "'");
    rows.erase(rows.begin());
    return rows;
}

inline nlohmann::json number_json(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

inline double json_number(const nlohmann::json& v) {
    if (v.is_string()) return parse_double(v.get<std::string>());
    return v.get<double>();
}

} // namespace detail

inline const char* kSpectrumHeader = "index,eigenvalue";
inline const char* kComplexSpectrumHeader = "index,re,im";
inline const char* kIdentityHeader = "identity,j,lhs,rhs,abs_residual,rel_residual,skipped_terms,pass,lhs_imag,rhs_imag";
inline const char* kBoundHeader = "name,m,j,bound,observed,margin,satisfied,metadata";
inline const char* kRichardsonHeader = "index,v_h,v_h2,v_h4,extrapolated,order,converged,reference";

/// Indices are written 1-based.
inline void write_spectrum_csv(std::ostream& out, std::span<const double> values) {
    out << kSpectrumHeader << '\n';
    for (std::size_t k = 0; k < values.size(); ++k) detail::write_row(out, {std::to_string(k + 1), format_double(values[k])});
}

inline RealVector read_spectrum_csv(std::istream& in) {
    RealVector out;
    for (const auto& r : detail::body(in, kSpectrumHeader)) {
        require(r.size() == 2, ErrorCode::ConfigError, "spectrum rows have two fields");
        out.push_back(parse_double(r[1]));
    }
    return out;
}

inline void write_complex_spectrum_csv(std::ostream& out, std::span<const complex> values) {
    out << kComplexSpectrumHeader << '\n';
    for (std::size_t k = 0; k < values.size(); ++k)
        detail::write_row(out, {std::to_string(k + 1), format_double(values[k].real()), format_double(values[k].imag())});
}

inline void write_identity_csv(std::ostream& out, const std::vector<IdentityReport>& reports) {
    out << kIdentityHeader << '\n';
    for (const auto& r : reports)
        detail::write_row(out, {r.name, std::to_string(r.j + 1), format_double(r.lhs.real()), format_double(r.rhs.real()),
                                format_double(r.abs_residual), format_double(r.rel_residual),
                                std::to_string(r.skipped_terms), r.pass ? "true" : "false",
                                format_double(r.lhs.imag()), format_double(r.rhs.imag())});
}

inline std::vector<IdentityReport> read_identity_csv(std::istream& in) {
    std::vector<IdentityReport> out;
    for (const auto& f : detail::body(in, kIdentityHeader)) {
        require(f.size() == 10, ErrorCode::ConfigError, "identity rows have ten fields");
        IdentityReport r;
        r.name = f[0];
        r.j = static_cast<std::size_t>(std::stoull(f[1])) - 1;
        r.lhs = complex(parse_double(f[2]), parse_double(f[8]));
        r.rhs = complex(parse_double(f[3]), parse_double(f[9]));
        r.abs_residual = parse_double(f[4]);
        r.rel_residual = parse_double(f[5]);
        r.skipped_terms = static_cast<std::size_t>(std::stoull(f[6]));
        r.pass = f[7] == "true";
        out.push_back(std::move(r));
    }
    return out;
}

/// Metadata, sense and diagnostic travel together in the JSON column.
inline void write_bound_csv(std::ostream& out, const std::vector<BoundReport>& reports) {
    out << kBoundHeader << '\n';
    for (const auto& r : reports) {
        nlohmann::json meta = nlohmann::json::object();
        for (const auto& [k, v] : r.metadata) meta[k] = detail::number_json(v);
        nlohmann::json extra{{"sense", r.sense == BoundSense::upper ? "upper" : "lower"}, {"metadata", meta}};
        if (!r.diagnostic.empty()) extra["diagnostic"] = r.diagnostic;
        detail::write_row(out, {r.name, std::to_string(r.m), r.j ? std::to_string(*r.j + 1) : "",
                                format_double(r.bound), format_double(r.observed), format_double(r.margin),
                                r.satisfied ? "true" : "false", extra.dump()});
    }
}

inline std::vector<BoundReport> read_bound_csv(std::istream& in) {
    std::vector<BoundReport> out;
    for (const auto& f : detail::body(in, kBoundHeader)) {
        require(f.size() == 8, ErrorCode::ConfigError, "bound rows have eight fields");
        BoundReport r;
        r.name = f[0];
        r.m = static_cast<std::size_t>(std::stoull(f[1]));
        if (!f[2].empty()) r.j = static_cast<std::size_t>(std::stoull(f[2])) - 1;
        r.bound = parse_double(f[3]);
        r.observed = parse_double(f[4]);
        r.margin = parse_double(f[5]);
        r.satisfied = f[6] == "true";
        const auto extra = nlohmann::json::parse(f[7]);
        r.sense = extra.at("sense") == "upper" ? BoundSense::upper : BoundSense::lower;
        if (extra.contains("diagnostic")) r.diagnostic = extra["diagnostic"].get<std::string>();
        for (const auto& [k, v] : extra.at("metadata").items()) r.metadata[k] = detail::json_number(v);
        out.push_back(std::move(r));
    }
    return out;
}

struct RichardsonRow {
    std::size_t index = 0; // 1-based eigenvalue index
    double v_h = 0.0, v_h2 = 0.0, v_h4 = 0.0;
    oracle::RichardsonResult result;
    double reference = std::numeric_limits<double>::quiet_NaN();
};

inline void write_richardson_csv(std::ostream& out, const std::vector<RichardsonRow>& rows) {
    out << kRichardsonHeader << '\n';
    for (const auto& r : rows)
        detail::write_row(out, {std::to_string(r.index), format_double(r.v_h), format_double(r.v_h2),
                                format_double(r.v_h4), format_double(r.result.extrapolated),
                                format_double(r.result.order), r.result.converged ? "true" : "false",
                                format_double(r.reference)});
}

inline std::vector<RichardsonRow> read_richardson_csv(std::istream& in) {
    std::vector<RichardsonRow> out;
    for (const auto& f : detail::body(in, kRichardsonHeader)) {
        require(f.size() == 8, ErrorCode::ConfigError, "richardson rows have eight fields");
        RichardsonRow r;
        r.index = static_cast<std::size_t>(std::stoull(f[0]));
        r.v_h = parse_double(f[1]);
        r.v_h2 = parse_double(f[2]);
        r.v_h4 = parse_double(f[3]);
        r.result.extrapolated = parse_double(f[4]);
        r.result.order = parse_double(f[5]);
        r.result.converged = f[6] == "true";
        r.reference = parse_double(f[7]);
        out.push_back(r);
    }
    return out;
}

} // namespace spectra_gap
