// CVSS v3.1 base score calculator.
#ifndef TAPSIM_CVSS_HPP
#define TAPSIM_CVSS_HPP

#include <stdexcept>
#include <string>

namespace tapsim::cvss {

enum class Av { N, A, L, P };
enum class Ac { L, H };
enum class Pr { N, L, H };
enum class Ui { N, R };
enum class Scope { U, C };
enum class Impact { N, L, H };

struct Vector {
    Av av = Av::N;
    Ac ac = Ac::L;
    Pr pr = Pr::N;
    Ui ui = Ui::N;
    Scope s = Scope::U;
    Impact c = Impact::N;
    Impact i = Impact::N;
    Impact a = Impact::N;

    std::string to_string() const;  // canonical "CVSS:3.1/AV:../.." form
};

struct ParseError : std::runtime_error {
    enum class Kind { Malformed, MissingMetric, DuplicateMetric };
    Kind kind;
    ParseError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Order-insensitive; the "CVSS:3.1/" prefix is optional. All eight base
// metrics must appear exactly once.
Vector parse_vector(const std::string& text);

enum class Severity { None, Low, Medium, High, Critical };
const char* to_string(Severity s);

struct Score {
    double value = 0.0;  // one decimal, 0.0 .. 10.0
    Severity severity = Severity::None;

    int tenths() const { return static_cast<int>(value * 10.0 + 0.5); }
};

// Smallest one-decimal value >= input, with the v3.1 standard's
// floating-point guard (never a naive ceil of doubles).
double roundup(double x);

Severity severity_for(double value);

Score base_score(const Vector& v);

}  // namespace tapsim::cvss

#endif
