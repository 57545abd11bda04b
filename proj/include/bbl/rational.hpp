#pragma once

// Exact rational time. Latency bounds in this library involve quantities like
// half and one-and-a-half times a delay bound, and the tests assert exact
// equality on commit times, so simulation time never touches floating point.

#include <boost/rational.hpp>

#include <stdexcept>
#include <string>

namespace bbl {

using Rat = boost::rational<long long>;

// Serialized form is "num/den" in lowest terms; whole numbers drop the
// denominator. parse_rat accepts both, so the format round-trips.
inline std::string format_rat(const Rat& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

namespace detail {
inline bool parse_ll(const std::string& s, long long& out) {
    // stoll tolerates leading whitespace; a config value should not.
    if (s.empty() || !(s[0] == '-' || s[0] == '+' || (s[0] >= '0' && s[0] <= '9'))) return false;
    std::size_t used = 0;
    try {
        out = std::stoll(s, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == s.size();
}
}  // namespace detail

// Accepts "n" or "n/d" with an optional sign on the numerator; d must be
// positive.
inline Rat parse_rat(const std::string& s) {
    long long num = 0;
    long long den = 1;
    auto slash = s.find('/');
    bool ok = slash == std::string::npos
                  ? detail::parse_ll(s, num)
                  : detail::parse_ll(s.substr(0, slash), num) &&
                        detail::parse_ll(s.substr(slash + 1), den);
    if (!ok || den <= 0) throw std::invalid_argument("not a rational: '" + s + "'");
    return Rat(num, den);
}

// A stand-in for "no cutoff" when slicing histories by local time. Far beyond
// any horizon this library simulates.
inline const Rat kNoCutoff = Rat(1000000000);

}  // namespace bbl
