#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace unfold {

using cx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cx I{0.0, 1.0};

enum class Side { plus, minus };

inline const char* side_name(Side s) { return s == Side::plus ? "plus" : "minus"; }

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { config, domain, convergence, acceptance, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline bool finite(cx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Principal argument shifted by multiples of 2π to land closest to `ref`.
inline double arg_near(cx z, double ref) {
    double a = std::arg(z);
    while (a - ref > pi) a -= 2 * pi;
    while (ref - a > pi) a += 2 * pi;
    return a;
}

inline double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

}  // namespace unfold
