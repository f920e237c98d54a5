/// ridge/format.hpp
///
/// Shortest round-trip decimal formatting for CSV output.

#ifndef RIDGE_FORMAT_HPP_
#define RIDGE_FORMAT_HPP_

#include <charconv>
#include <cmath>
#include <string>

namespace ridge
{
    /// Shortest decimal string that parses back to the same double.
    inline std::string format_double(double value)
    {
        if(std::isinf(value))
            return value > 0 ? "inf" : "-inf";
        if(std::isnan(value))
            return "nan";
        char buffer[32];
        const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
        return std::string(buffer, result.ptr);
    }
}

#endif
