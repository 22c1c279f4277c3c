#pragma once

#include <stdexcept>
#include <string>

namespace clab {

// Common base so callers can catch everything from this library at once.
// The CLI maps ParseError/ValidationError to exit code 2 and the numerical
// failures to exit code 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimMismatch : Error { using Error::Error; };
struct ZeroNorm : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct NotHermitian : Error { using Error::Error; };
struct NotDensity : Error { using Error::Error; };          // trace / PSD violation
struct BadWeights : Error { using Error::Error; };
struct NonOrthonormalBasis : Error { using Error::Error; };
struct NonUnitary : Error { using Error::Error; };
struct BadParameter : Error { using Error::Error; };
struct BadSigma : Error { using Error::Error; };
struct FactorizationFailure : Error { using Error::Error; };
struct StepTooLarge : Error { using Error::Error; };
struct ConvergenceFailure : Error { using Error::Error; };
struct DegenerateExpected : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

struct ParseError : Error {
    int line;
    ParseError(int line_no, const std::string& what)
        : Error("parse error at line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

struct ValidationError : Error {
    std::string key;
    explicit ValidationError(const std::string& offending_key, const std::string& what)
        : Error("invalid configuration: key '" + offending_key + "': " + what), key(offending_key) {}
};

}  // namespace clab
