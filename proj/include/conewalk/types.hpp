#ifndef CONEWALK_TYPES_HPP
#define CONEWALK_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace conewalk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid cone data, dimension mismatches, infeasible geometry queries.
struct GeometryError : Error {
    using Error::Error;
};

/// No complementary solution found for a projection query.
struct ProjectionError : Error {
    using Error::Error;
};

/// Nonfinite state, step-index-tagged integration failures.
struct SimulationError : Error {
    using Error::Error;
};

/// A time grid with one vector value per node.
struct PathGrid {
    std::vector<double> times;
    std::vector<Vec> values;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    int dimension() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }

    /// Throws Error unless times are strictly increasing, lengths match and all
    /// values are finite vectors of one common dimension.
    void validate() const;
};

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

/// Parses "a,b,c" into a vector; throws Error on malformed input.
Vec parse_vector(const std::string& text);

}  // namespace conewalk

#endif
