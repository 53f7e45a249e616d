#include "charl/proposition.hpp"

#include <charconv>

namespace charl {

std::string Proposition::name() const {
    return "z_{" + std::to_string(variable) + "," + std::to_string(category) + "}";
}

namespace {

bool parse_index(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && out >= 0;
}

}  // namespace

Proposition parse_proposition(std::string_view text) {
    const auto fail = [&]() -> Proposition {
        throw DataError("invalid proposition name '" + std::string(text) + "'");
    };
    if (text.size() < 4 || text.substr(0, 2) != "z_") return fail();
    std::string_view body = text.substr(2);
    Proposition p;
    if (body.front() == '{') {
        if (body.back() != '}') return fail();
        body = body.substr(1, body.size() - 2);
        const auto comma = body.find(',');
        if (comma == std::string_view::npos) return fail();
        if (!parse_index(body.substr(0, comma), p.variable) ||
            !parse_index(body.substr(comma + 1), p.category))
            return fail();
        return p;
    }
    const auto sep = body.find('_');
    if (sep == std::string_view::npos) return fail();
    if (!parse_index(body.substr(0, sep), p.variable) || !parse_index(body.substr(sep + 1), p.category))
        return fail();
    return p;
}

std::string_view to_string(Polarity p) { return p == Polarity::positive ? "positive" : "negative"; }

Polarity parse_polarity(std::string_view text) {
    if (text == "positive") return Polarity::positive;
    if (text == "negative") return Polarity::negative;
    throw DataError("invalid polarity '" + std::string(text) + "'");
}

}  // namespace charl
