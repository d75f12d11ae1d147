#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bilex/geometry.hpp"

namespace bilex {
namespace report {

// Shortest-faithful decimal for metrics files: 17 significant digits keep
// the double bit pattern; integers and specials print without noise.
std::string g17(double v);

// Ordered JSON object builder.  Keys render in insertion order so a fixed
// (config, seed) pair yields byte-identical files.
class Json {
  public:
    Json& put(const std::string& key, double v);
    Json& put(const std::string& key, int v);
    Json& put(const std::string& key, long long v);
    Json& put(const std::string& key, size_t v);
    Json& put(const std::string& key, bool v);
    Json& put(const std::string& key, const char* v);
    Json& put(const std::string& key, const std::string& v);
    Json& put(const std::string& key, const Json& obj);
    Json& put(const std::string& key, const std::vector<double>& arr);
    Json& put(const std::string& key, const std::vector<std::string>& arr);

    std::string str(int indent = 0) const;

  private:
    Json& put_raw(const std::string& key, std::string rendered);
    std::vector<std::pair<std::string, std::string>> items_;
};

std::string escape(const std::string& s);

// Warped lattice figure: nlines gridlines per direction, each sampled at
// `samples` points and mapped through f, drawn into a unit viewbox.
std::string svg_warped_grid(const std::function<Vec2(Vec2)>& f, int nlines,
                            int samples, const std::string& caption = "");

// Generic polyline figure on the unit square (used for level lines and
// fiber plots); each path carries its own class attribute.
struct SvgPath {
    std::vector<Vec2> pts;
    std::string cls;
};
std::string svg_paths(const std::vector<SvgPath>& paths,
                      const std::string& caption = "");

}  // namespace report
}  // namespace bilex
