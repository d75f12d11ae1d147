#include "bilex/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace bilex {
namespace report {

std::string g17(double v) {
    if (std::isnan(v)) return "null";
    if (std::isinf(v)) return v > 0 ? "1e9999" : "-1e9999";
    char buf[40];
    if (v == std::floor(v) && std::fabs(v) < 1e15) {
        // Integral doubles keep a trailing .0 so the type survives parsing.
        std::snprintf(buf, sizeof buf, "%.1f", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.17g", v);
    }
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 8);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
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

Json& Json::put_raw(const std::string& key, std::string rendered) {
    items_.emplace_back(key, std::move(rendered));
    return *this;
}

Json& Json::put(const std::string& key, double v) {
    return put_raw(key, g17(v));
}
Json& Json::put(const std::string& key, int v) {
    return put_raw(key, std::to_string(v));
}
Json& Json::put(const std::string& key, long long v) {
    return put_raw(key, std::to_string(v));
}
Json& Json::put(const std::string& key, size_t v) {
    return put_raw(key, std::to_string(v));
}
Json& Json::put(const std::string& key, bool v) {
    return put_raw(key, v ? "true" : "false");
}
Json& Json::put(const std::string& key, const char* v) {
    return put_raw(key, "\"" + escape(v) + "\"");
}
Json& Json::put(const std::string& key, const std::string& v) {
    return put_raw(key, "\"" + escape(v) + "\"");
}
Json& Json::put(const std::string& key, const Json& obj) {
    return put_raw(key, obj.str());
}
Json& Json::put(const std::string& key, const std::vector<double>& arr) {
    std::string out = "[";
    for (size_t i = 0; i < arr.size(); ++i) {
        if (i) out += ",";
        out += g17(arr[i]);
    }
    out += "]";
    return put_raw(key, std::move(out));
}
Json& Json::put(const std::string& key, const std::vector<std::string>& arr) {
    std::string out = "[";
    for (size_t i = 0; i < arr.size(); ++i) {
        if (i) out += ",";
        out += "\"" + escape(arr[i]) + "\"";
    }
    out += "]";
    return put_raw(key, std::move(out));
}

std::string Json::str(int indent) const {
    std::string out = "{";
    const std::string pad(indent ? indent : 0, ' ');
    for (size_t i = 0; i < items_.size(); ++i) {
        if (i) out += ",";
        if (indent) out += "\n" + pad;
        out += "\"" + escape(items_[i].first) + "\":";
        if (indent) out += " ";
        out += items_[i].second;
    }
    if (indent && !items_.empty()) out += "\n";
    out += "}";
    return out;
}

namespace {

void append_pt(std::string& d, Vec2 p, bool first) {
    char buf[64];
    // SVG y grows downward; flip so the unit square renders upright.
    std::snprintf(buf, sizeof buf, "%s%.6f %.6f", first ? "M" : " L",
                  40.0 + 720.0 * p.x, 760.0 - 720.0 * p.y);
    d += buf;
}

std::string svg_open() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
           "height=\"800\" viewBox=\"0 0 800 800\">\n"
           "<style>path{fill:none;stroke-width:1.2}"
           ".grid{stroke:#456}.gridv{stroke:#a53}"
           ".line{stroke:#333}.alt{stroke:#b22;stroke-dasharray:4 3}"
           ".frame{stroke:#000;stroke-width:2}</style>\n";
}

std::string svg_close(const std::string& caption) {
    std::string out;
    out +=
        "<path class=\"frame\" d=\"M40 40 L760 40 L760 760 L40 760 Z\"/>\n";
    if (!caption.empty()) {
        out += "<text x=\"40\" y=\"28\" font-size=\"16\" "
               "font-family=\"monospace\">" +
               caption + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace

std::string svg_warped_grid(const std::function<Vec2(Vec2)>& f, int nlines,
                            int samples, const std::string& caption) {
    std::string out = svg_open();
    for (int axis = 0; axis < 2; ++axis) {
        for (int k = 0; k <= nlines; ++k) {
            const double c = static_cast<double>(k) / nlines;
            std::string d;
            for (int s = 0; s <= samples; ++s) {
                const double t = static_cast<double>(s) / samples;
                const Vec2 p =
                    axis == 0 ? f({t, c}) : f({c, t});
                append_pt(d, p, s == 0);
            }
            out += "<path class=\"";
            out += axis == 0 ? "grid" : "gridv";
            out += "\" d=\"" + d + "\"/>\n";
        }
    }
    out += svg_close(caption);
    return out;
}

std::string svg_paths(const std::vector<SvgPath>& paths,
                      const std::string& caption) {
    std::string out = svg_open();
    for (const SvgPath& p : paths) {
        if (p.pts.empty()) continue;
        std::string d;
        for (size_t i = 0; i < p.pts.size(); ++i)
            append_pt(d, p.pts[i], i == 0);
        out += "<path class=\"" + p.cls + "\" d=\"" + d + "\"/>\n";
    }
    out += svg_close(caption);
    return out;
}

}  // namespace report
}  // namespace bilex
