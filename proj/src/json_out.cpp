#include "ivkit/json_out.hpp"

#include <cmath>
#include <cstdio>

namespace ivkit {

nlohmann::json json_number(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

namespace {

void write_float(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "null";
        return;
    }
    if (std::isinf(v)) {
        out += v > 0 ? "\"inf\"" : "\"-inf\"";
        return;
    }
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf, static_cast<std::size_t>(len));
    // Keep it a float token so that readers do not narrow to integers.
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    out += s;
}

void write(std::string& out, const nlohmann::json& j, int indent, int depth) {
    const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
    const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += '{';
            out += nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) {
                    out += ',';
                    out += nl;
                }
                first = false;
                out += pad;
                out += nlohmann::json(it.key()).dump();
                out += indent > 0 ? ": " : ":";
                write(out, it.value(), indent, depth + 1);
            }
            out += nl;
            out += close_pad;
            out += '}';
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += '[';
            out += nl;
            bool first = true;
            for (const auto& v : j) {
                if (!first) {
                    out += ',';
                    out += nl;
                }
                first = false;
                out += pad;
                write(out, v, indent, depth + 1);
            }
            out += nl;
            out += close_pad;
            out += ']';
            return;
        }
        case nlohmann::json::value_t::number_float:
            write_float(out, j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

}  // namespace

std::string dump_json(const nlohmann::json& j, int indent) {
    std::string out;
    write(out, j, indent, 0);
    return out;
}

}  // namespace ivkit
