#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string_view>

#include <Eigen/Dense>

namespace picard {

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RealVec = Vec<double>;
using ComplexVec = Vec<std::complex<double>>;

/// Norm on the state space. Euclidean is the default for real problems,
/// max-of-moduli for complex ones.
enum class NormKind { euclidean, max };

template <class Scalar>
double norm(const Vec<Scalar>& v, NormKind kind)
{
    if (v.size() == 0)
        return 0.0;
    switch (kind) {
    case NormKind::euclidean:
        return v.norm();
    case NormKind::max:
        return v.cwiseAbs().maxCoeff();
    }
    return v.norm();
}

inline std::string_view to_string(NormKind kind)
{
    return kind == NormKind::euclidean ? "euclidean" : "max";
}

inline NormKind norm_kind_from_string(std::string_view s)
{
    if (s == "euclidean")
        return NormKind::euclidean;
    if (s == "max")
        return NormKind::max;
    throw std::invalid_argument("unknown norm kind '" + std::string(s) + "'");
}

/// Relative widening applied to certified upper bounds to absorb rounding
/// in a chain of `ops` floating-point operations.
inline double round_up(double value, int ops = 1)
{
    if (!std::isfinite(value) || value <= 0.0)
        return value;
    constexpr double u = std::numeric_limits<double>::epsilon() / 2;
    return std::nextafter(value * (1.0 + (ops + 1) * u), std::numeric_limits<double>::infinity());
}

} // namespace picard
