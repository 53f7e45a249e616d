#pragma once

// Helpers and independent oracles shared by the test binaries.

#include "charl/ltl.hpp"
#include "charl/synth.hpp"
#include "charl/trace.hpp"

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace charl::testing {

inline CategoricalTrace make_trace(const std::vector<std::vector<int>>& rows, int K, const std::string& label = "a",
                                   const std::string& source = "") {
    std::vector<int> values;
    for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
    return CategoricalTrace(std::move(values), static_cast<int>(rows.front().size()), K, label,
                            source.empty() ? label : source);
}

inline CategoricalTrace random_trace(Rng& rng, std::size_t T, int d, int K, const std::string& label = "a") {
    std::vector<int> values(T * static_cast<std::size_t>(d));
    for (auto& v : values) v = static_cast<int>(rng.next() % static_cast<std::uint64_t>(K));
    return CategoricalTrace(std::move(values), d, K, label, label);
}

/// A segment covering the whole trace; the segment keeps the one-hot data alive.
inline Segment whole(const CategoricalTrace& trace) {
    auto bin = std::make_shared<const BinaryTrace>(to_one_hot(trace));
    return Segment(bin, 0, trace.length(), activity_of(trace));
}

/// Finite-trace semantics written directly from the definitions, one position at a time.
inline bool naive_holds(const ltl::Formula& f, const SegmentView& w, std::size_t t) {
    using ltl::Op;
    const std::size_t L = w.length;
    switch (f.op()) {
        case Op::top: return true;
        case Op::bottom: return false;
        case Op::atom: return w.holds(f.proposition(), t);
        case Op::negation: return !naive_holds(f.left(), w, t);
        case Op::conjunction: return naive_holds(f.left(), w, t) && naive_holds(f.right(), w, t);
        case Op::disjunction: return naive_holds(f.left(), w, t) || naive_holds(f.right(), w, t);
        case Op::implication: return !naive_holds(f.left(), w, t) || naive_holds(f.right(), w, t);
        case Op::next: return t + 1 < L && naive_holds(f.left(), w, t + 1);
        case Op::eventually:
            for (std::size_t j = t; j < L; ++j)
                if (naive_holds(f.left(), w, j)) return true;
            return false;
        case Op::globally:
            for (std::size_t j = t; j < L; ++j)
                if (!naive_holds(f.left(), w, j)) return false;
            return true;
        case Op::until:
            for (std::size_t j = t; j < L; ++j) {
                if (naive_holds(f.right(), w, j)) {
                    bool ok = true;
                    for (std::size_t i = t; i < j && ok; ++i) ok = naive_holds(f.left(), w, i);
                    if (ok) return true;
                }
            }
            return false;
    }
    return false;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

/// Residual of v after least squares on [1, Z], via the normal equations solved by Gaussian
/// elimination with partial pivoting in long double.
inline std::vector<double> ols_residual(std::span<const double> v, const std::vector<std::vector<double>>& Z) {
    const std::size_t n = v.size();
    const std::size_t p = Z.size() + 1;
    const auto design = [&](std::size_t i, std::size_t c) -> long double { return c == 0 ? 1.0L : Z[c - 1][i]; };
    std::vector<std::vector<long double>> A(p, std::vector<long double>(p + 1, 0.0L));
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b)
            for (std::size_t i = 0; i < n; ++i) A[a][b] += design(i, a) * design(i, b);
        for (std::size_t i = 0; i < n; ++i) A[a][p] += design(i, a) * v[i];
    }
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const long double f = A[r][c] / A[c][c];
            for (std::size_t k = c; k <= p; ++k) A[r][k] -= f * A[c][k];
        }
    }
    std::vector<double> res(n);
    for (std::size_t i = 0; i < n; ++i) {
        long double fit = 0;
        for (std::size_t c = 0; c < p; ++c) fit += design(i, c) * (A[c][p] / A[c][c]);
        res[i] = static_cast<double>(v[i] - fit);
    }
    return res;
}

inline double brute_parcorr(std::span<const double> x, std::span<const double> y,
                            const std::vector<std::vector<double>>& Z) {
    const auto rx = ols_residual(x, Z);
    const auto ry = ols_residual(y, Z);
    return pearson(rx, ry);
}

/// Every formula over `leaves` with operator depth <= depth.
inline std::vector<ltl::Formula> all_formulas(const std::vector<ltl::Formula>& leaves, int depth) {
    using ltl::Formula;
    std::vector<Formula> all = leaves;
    for (int level = 1; level <= depth; ++level) {
        std::vector<Formula> next = leaves;
        for (const auto& f : all) {
            next.push_back(Formula::negation(f));
            next.push_back(Formula::next(f));
            next.push_back(Formula::eventually(f));
            next.push_back(Formula::globally(f));
        }
        for (const auto& a : all)
            for (const auto& b : all) {
                next.push_back(Formula::conjunction(a, b));
                next.push_back(Formula::disjunction(a, b));
                next.push_back(Formula::implication(a, b));
                next.push_back(Formula::until(a, b));
            }
        all = std::move(next);
    }
    return all;
}

inline ltl::Formula random_formula(Rng& rng, const std::vector<ltl::Formula>& leaves, int depth) {
    using ltl::Formula;
    if (depth == 0 || rng.uniform() < 0.2) return leaves[rng.next() % leaves.size()];
    const auto sub = [&] { return random_formula(rng, leaves, depth - 1); };
    switch (rng.next() % 9) {
        case 0: return Formula::negation(sub());
        case 1: return Formula::next(sub(), 1 + static_cast<int>(rng.next() % 3));
        case 2: return Formula::eventually(sub());
        case 3: return Formula::globally(sub());
        case 4: return Formula::conjunction(sub(), sub());
        case 5: return Formula::disjunction(sub(), sub());
        case 6: return Formula::implication(sub(), sub());
        case 7: return Formula::until(sub(), sub());
        default: return leaves[rng.next() % leaves.size()];
    }
}

/// Every trace of length 1..max_length over d binary variables (K = 2).
inline std::vector<CategoricalTrace> all_binary_traces(int d, std::size_t max_length) {
    std::vector<CategoricalTrace> out;
    const std::size_t per_step = std::size_t{1} << d;
    for (std::size_t L = 1; L <= max_length; ++L) {
        std::size_t total = 1;
        for (std::size_t i = 0; i < L; ++i) total *= per_step;
        for (std::size_t code = 0; code < total; ++code) {
            std::vector<int> values;
            std::size_t c = code;
            for (std::size_t t = 0; t < L; ++t, c /= per_step)
                for (int v = 0; v < d; ++v) values.push_back(static_cast<int>((c % per_step) >> v & 1U));
            out.emplace_back(std::move(values), d, 2, "x", "x");
        }
    }
    return out;
}

}  // namespace charl::testing
