#include "conewalk/types.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace conewalk {

void PathGrid::validate() const {
    if (times.size() != values.size()) {
        throw Error("path grid: times and values have different lengths");
    }
    if (times.empty()) {
        throw Error("path grid: empty");
    }
    const auto k = values.front().size();
    for (std::size_t m = 0; m < times.size(); ++m) {
        if (!std::isfinite(times[m])) throw Error("path grid: nonfinite time");
        if (m > 0 && !(times[m] > times[m - 1])) {
            throw Error("path grid: times not strictly increasing");
        }
        if (values[m].size() != k) throw Error("path grid: inconsistent value dimension");
        if (!values[m].allFinite()) throw Error("path grid: nonfinite value");
    }
}

std::string format_double(double v) {
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

Vec parse_vector(const std::string& text) {
    std::vector<double> parts;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
            if (used != item.size()) throw Error("trailing characters");
        } catch (const std::exception&) {
            throw Error("could not parse vector component '" + item + "'");
        }
    }
    if (parts.empty()) throw Error("empty vector literal");
    Vec v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = parts[i];
    return v;
}

}  // namespace conewalk
