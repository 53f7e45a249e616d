#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace charl {

/// Error raised for malformed input files or data that violates a type invariant.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Error raised for invalid configuration values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The binary proposition z_{variable,category}: latent variable `variable` takes `category`.
struct Proposition {
    int variable = 0;
    int category = 0;

    auto operator<=>(const Proposition&) const = default;

    /// Column of this proposition in a flattened one-hot row.
    std::size_t column(int num_categories) const {
        return static_cast<std::size_t>(variable) * static_cast<std::size_t>(num_categories) +
               static_cast<std::size_t>(category);
    }

    static Proposition from_column(std::size_t column, int num_categories) {
        return {static_cast<int>(column / static_cast<std::size_t>(num_categories)),
                static_cast<int>(column % static_cast<std::size_t>(num_categories))};
    }

    /// Canonical name, e.g. "z_{0,3}".
    std::string name() const;
};

/// Parses "z_{d,c}" or "z_d_c". Throws DataError on anything else.
Proposition parse_proposition(std::string_view text);

enum class Polarity { positive, negative };

std::string_view to_string(Polarity p);
Polarity parse_polarity(std::string_view text);

}  // namespace charl
