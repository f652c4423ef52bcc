// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "meo/oracles.hpp"
#include "meo/precoder.hpp"
#include "meo/scenario.hpp"

namespace meo::test {

inline oracle::Matrix to_oracle(const CMatrix& m)
{
    oracle::Matrix out{static_cast<int>(m.rows()), static_cast<int>(m.cols()), {}};
    out.data.resize(static_cast<std::size_t>(m.size()));
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) out(r, c) = m(r, c);
    return out;
}

inline CMatrix random_matrix(int rows, int cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = cplx(g(rng), g(rng));
    return m;
}

/// Default scenario trimmed to a shorter window (same pass centre).
inline Scenario short_scenario(double duration_s)
{
    Scenario s = default_scenario();
    s.grid.duration_s = duration_s;
    return s;
}

/// Number of sign changes (ignoring exact zeros) in a sequence.
inline int sign_changes(const std::vector<double>& x)
{
    int count = 0;
    double last = 0.0;
    for (double v : x) {
        if (v == 0.0) continue;
        if (last != 0.0 && (v > 0.0) != (last > 0.0)) ++count;
        last = v;
    }
    return count;
}

} // namespace meo::test
