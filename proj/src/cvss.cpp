#include "tapsim/cvss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

namespace tapsim::cvss {

namespace {

double av_weight(Av v) {
    switch (v) {
        case Av::N: return 0.85;
        case Av::A: return 0.62;
        case Av::L: return 0.55;
        case Av::P: return 0.2;
    }
    return 0;
}

double ac_weight(Ac v) { return v == Ac::L ? 0.77 : 0.44; }

double pr_weight(Pr v, Scope s) {
    switch (v) {
        case Pr::N: return 0.85;
        case Pr::L: return s == Scope::C ? 0.68 : 0.62;
        case Pr::H: return s == Scope::C ? 0.5 : 0.27;
    }
    return 0;
}

double ui_weight(Ui v) { return v == Ui::N ? 0.85 : 0.62; }

double impact_weight(Impact v) {
    switch (v) {
        case Impact::N: return 0.0;
        case Impact::L: return 0.22;
        case Impact::H: return 0.56;
    }
    return 0;
}

template <typename T>
T pick(const std::string& metric, const std::string& value,
       const std::vector<std::pair<std::string, T>>& options) {
    for (const auto& [name, v] : options)
        if (value == name) return v;
    throw ParseError(ParseError::Kind::Malformed, "bad value for " + metric + ": " + value);
}

const char* impact_letter(Impact v) {
    switch (v) {
        case Impact::N: return "N";
        case Impact::L: return "L";
        case Impact::H: return "H";
    }
    return "?";
}

}  // namespace

std::string Vector::to_string() const {
    std::ostringstream out;
    out << "CVSS:3.1/AV:";
    switch (av) {
        case Av::N: out << 'N'; break;
        case Av::A: out << 'A'; break;
        case Av::L: out << 'L'; break;
        case Av::P: out << 'P'; break;
    }
    out << "/AC:" << (ac == Ac::L ? 'L' : 'H');
    out << "/PR:" << (pr == Pr::N ? 'N' : pr == Pr::L ? 'L' : 'H');
    out << "/UI:" << (ui == Ui::N ? 'N' : 'R');
    out << "/S:" << (s == Scope::U ? 'U' : 'C');
    out << "/C:" << impact_letter(c) << "/I:" << impact_letter(i) << "/A:" << impact_letter(a);
    return out.str();
}

Vector parse_vector(const std::string& text) {
    std::vector<std::string> parts;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, '/')) parts.push_back(token);
    if (parts.empty()) throw ParseError(ParseError::Kind::Malformed, "empty vector");

    std::size_t start = 0;
    if (parts[0].rfind("CVSS:", 0) == 0) {
        if (parts[0] != "CVSS:3.1" && parts[0] != "CVSS:3.0")
            throw ParseError(ParseError::Kind::Malformed, "unsupported version: " + parts[0]);
        start = 1;
    }

    Vector v;
    std::map<std::string, bool> seen;
    for (std::size_t k = start; k < parts.size(); ++k) {
        const auto& part = parts[k];
        const auto colon = part.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 >= part.size())
            throw ParseError(ParseError::Kind::Malformed, "bad metric: " + part);
        const std::string metric = part.substr(0, colon);
        const std::string value = part.substr(colon + 1);
        if (seen[metric])
            throw ParseError(ParseError::Kind::DuplicateMetric, "duplicate metric: " + metric);
        seen[metric] = true;

        if (metric == "AV")
            v.av = pick<Av>(metric, value, {{"N", Av::N}, {"A", Av::A}, {"L", Av::L}, {"P", Av::P}});
        else if (metric == "AC")
            v.ac = pick<Ac>(metric, value, {{"L", Ac::L}, {"H", Ac::H}});
        else if (metric == "PR")
            v.pr = pick<Pr>(metric, value, {{"N", Pr::N}, {"L", Pr::L}, {"H", Pr::H}});
        else if (metric == "UI")
            v.ui = pick<Ui>(metric, value, {{"N", Ui::N}, {"R", Ui::R}});
        else if (metric == "S")
            v.s = pick<Scope>(metric, value, {{"U", Scope::U}, {"C", Scope::C}});
        else if (metric == "C")
            v.c = pick<Impact>(metric, value, {{"N", Impact::N}, {"L", Impact::L}, {"H", Impact::H}});
        else if (metric == "I")
            v.i = pick<Impact>(metric, value, {{"N", Impact::N}, {"L", Impact::L}, {"H", Impact::H}});
        else if (metric == "A")
            v.a = pick<Impact>(metric, value, {{"N", Impact::N}, {"L", Impact::L}, {"H", Impact::H}});
        else
            throw ParseError(ParseError::Kind::Malformed, "unknown metric: " + metric);
    }

    for (const char* m : {"AV", "AC", "PR", "UI", "S", "C", "I", "A"})
        if (!seen[m]) throw ParseError(ParseError::Kind::MissingMetric,
                                       std::string("missing metric: ") + m);
    return v;
}

double roundup(double x) {
    const long long scaled = std::llround(x * 100000.0);
    if (scaled % 10000 == 0) return static_cast<double>(scaled) / 100000.0;
    return (std::floor(static_cast<double>(scaled) / 10000.0) + 1.0) / 10.0;
}

Severity severity_for(double value) {
    // compare at one-decimal resolution to dodge representation noise
    const int tenths = static_cast<int>(std::llround(value * 10.0));
    if (tenths <= 0) return Severity::None;
    if (tenths <= 39) return Severity::Low;
    if (tenths <= 69) return Severity::Medium;
    if (tenths <= 89) return Severity::High;
    return Severity::Critical;
}

const char* to_string(Severity s) {
    switch (s) {
        case Severity::None: return "None";
        case Severity::Low: return "Low";
        case Severity::Medium: return "Medium";
        case Severity::High: return "High";
        case Severity::Critical: return "Critical";
    }
    return "?";
}

Score base_score(const Vector& v) {
    const double iss = 1.0 - (1.0 - impact_weight(v.c)) * (1.0 - impact_weight(v.i)) *
                                 (1.0 - impact_weight(v.a));
    const double impact = v.s == Scope::U
                              ? 6.42 * iss
                              : 7.52 * (iss - 0.029) - 3.25 * std::pow(iss - 0.02, 15.0);
    const double exploitability =
        8.22 * av_weight(v.av) * ac_weight(v.ac) * pr_weight(v.pr, v.s) * ui_weight(v.ui);

    double value = 0.0;
    if (impact > 0.0) {
        value = v.s == Scope::U
                    ? roundup(std::min(impact + exploitability, 10.0))
                    : roundup(std::min(1.08 * (impact + exploitability), 10.0));
    }
    return Score{value, severity_for(value)};
}

}  // namespace tapsim::cvss
