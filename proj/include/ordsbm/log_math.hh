#pragma once

// Base-2 combinatorics used by every description-length term.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ordsbm {

inline constexpr double kLn2 = 0.693147180559945309417232121458176568;

namespace detail {

inline const std::vector<double>& lfact_table()
{
    static const std::vector<double> table = [] {
        constexpr std::size_t size = 1 << 18;
        std::vector<double> t(size);
        for (std::size_t n = 0; n < size; ++n)
            t[n] = std::lgamma(double(n) + 1.0) / kLn2;
        return t;
    }();
    return table;
}

} // namespace detail

/// log2(n!)
inline double lfact(std::int64_t n)
{
    const auto& t = detail::lfact_table();
    if (n < 0)
        throw std::domain_error("lfact: negative argument");
    if (std::size_t(n) < t.size())
        return t[std::size_t(n)];
    return std::lgamma(double(n) + 1.0) / kLn2;
}

/// log2 C(n, k); -inf outside 0 <= k <= n.
inline double lbinom(std::int64_t n, std::int64_t k)
{
    if (k < 0 || k > n || n < 0)
        return -std::numeric_limits<double>::infinity();
    if (k == 0 || k == n)
        return 0.0;
    return lfact(n) - lfact(k) - lfact(n - k);
}

/// log2 of the multiset coefficient ((n, m)) = C(n + m - 1, m).
inline double lmultiset(std::int64_t n, std::int64_t m)
{
    if (m == 0)
        return 0.0;
    if (n <= 0)
        return -std::numeric_limits<double>::infinity();
    return lbinom(n + m - 1, m);
}

/// log2(2^a + 2^b), tolerant of -inf operands.
inline double log2_add(double a, double b)
{
    if (a < b)
        std::swap(a, b);
    if (b == -std::numeric_limits<double>::infinity())
        return a;
    return a + std::log2(1.0 + std::exp2(b - a));
}

/// Neumaier-compensated running sum.
class CompensatedSum
{
public:
    void add(double x)
    {
        double t = _sum + x;
        if (std::abs(_sum) >= std::abs(x))
            _c += (_sum - t) + x;
        else
            _c += (x - t) + _sum;
        _sum = t;
    }
    CompensatedSum& operator+=(double x)
    {
        add(x);
        return *this;
    }
    double value() const { return _sum + _c; }

private:
    double _sum = 0;
    double _c = 0;
};

class QCapExceeded : public std::runtime_error
{
public:
    QCapExceeded(std::int64_t m, std::int64_t cap)
        : std::runtime_error("restricted-partition table needs m = " +
                             std::to_string(m) + " which exceeds --q-cap " +
                             std::to_string(cap)),
          m(m), cap(cap)
    {
    }
    std::int64_t m;
    std::int64_t cap;
};

/// Exact log2 q(m, n): the number of partitions of m into at most n parts.
///
/// Built once for m <= max_m and n <= max_n via q(m,n) = q(m,n-1) + q(m-n,n),
/// with q(0,n) = 1, q(m,0) = 0 for m > 0 and q(m,n) = q(m,m) for n > m. Only
/// the triangle n <= min(m, max_n) is stored. Immutable after construction.
class RestrictedPartitionTable
{
public:
    static constexpr std::int64_t kDefaultCap = 20000;

    RestrictedPartitionTable(std::int64_t max_m, std::int64_t max_n,
                             std::int64_t cap = kDefaultCap)
        : _max_m(std::max<std::int64_t>(max_m, 0)),
          _max_n(std::max<std::int64_t>(std::min(max_n, max_m), 0)), _cap(cap)
    {
        if (_max_m > _cap)
            throw QCapExceeded(_max_m, _cap);
        _offset.resize(std::size_t(_max_m) + 2);
        std::size_t total = 0;
        for (std::int64_t m = 0; m <= _max_m; ++m)
        {
            _offset[std::size_t(m)] = total;
            total += std::size_t(row_width(m));
        }
        _offset[std::size_t(_max_m) + 1] = total;
        _table.resize(total);

        constexpr double ninf = -std::numeric_limits<double>::infinity();
        for (std::int64_t m = 0; m <= _max_m; ++m)
        {
            double* row = _table.data() + _offset[std::size_t(m)];
            row[0] = (m == 0) ? 0.0 : ninf;
            for (std::int64_t n = 1; n < row_width(m); ++n)
                row[n] = log2_add(row[n - 1], lookup(m - n, n));
        }
    }

    std::int64_t max_m() const { return _max_m; }
    std::int64_t max_n() const { return _max_n; }
    std::int64_t cap() const { return _cap; }

    /// log2 q(m, n); throws QCapExceeded beyond the table.
    double log_q(std::int64_t m, std::int64_t n) const
    {
        if (m < 0)
            return -std::numeric_limits<double>::infinity();
        if (m > _max_m)
            throw QCapExceeded(m, std::min(_cap, _max_m));
        if (n < 0)
            n = 0;
        if (n > m)
            n = m;
        if (n > _max_n)
            throw QCapExceeded(m, std::min(_cap, _max_m));
        return lookup(m, n);
    }

private:
    std::int64_t row_width(std::int64_t m) const
    {
        return std::min(m, _max_n) + 1;
    }

    // Requires the rows up to m to be filled for every index used.
    double lookup(std::int64_t m, std::int64_t n) const
    {
        n = std::min(n, m);
        return _table[_offset[std::size_t(m)] + std::size_t(n)];
    }

    std::int64_t _max_m;
    std::int64_t _max_n;
    std::int64_t _cap;
    std::vector<std::size_t> _offset;
    std::vector<double> _table;
};

} // namespace ordsbm
