#include "spe/fourier.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "spe/rng.hpp"

namespace spe {

namespace {

constexpr double kPi = 3.14159265358979323846;

// -------------------------------------------------------------------------
// Lambert W, principal branch
// -------------------------------------------------------------------------

double lambert_w_initial(double x) {
    if (x > std::exp(1.0)) {
        const double l1 = std::log(x);
        const double l2 = std::log(l1);
        return l1 - l2 + l2 / l1;
    }
    if (x >= 0.0) return std::log1p(x);
    // Near the branch point -1/e use the square-root expansion.
    const double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
    return -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0;
}

// -------------------------------------------------------------------------
// Scaled modified Bessel functions e^{-beta} I_j(beta)
// -------------------------------------------------------------------------

// Power series of I_j, summed as ratios against the m = 0 term so that the
// result can be assembled in log space without overflow.
double scaled_bessel_series(double beta, int j) {
    const double q = 0.25 * beta * beta;
    const double log_t0 = j * std::log(0.5 * beta) - std::lgamma(j + 1.0);
    double term = 1.0;
    double sum = 1.0;
    for (int m = 0; m < 40000; ++m) {
        term *= q / ((m + 1.0) * (m + 1.0 + j));
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return std::exp(log_t0 - beta + std::log(sum));
}

// Uniform asymptotic value of e^{-beta} I_0(beta); relative error below
// 1e-14 for beta > 700.
double scaled_bessel_i0_asymptotic(double beta) {
    const double r = 1.0 / beta;
    const double series =
        1.0 + r * (1.0 / 8.0 + r * (9.0 / 128.0 + r * (75.0 / 1024.0 + r * 11025.0 / 98304.0)));
    return series / std::sqrt(2.0 * kPi * beta);
}

std::vector<double> scaled_bessel_miller(double beta, int j_max) {
    const double start = std::sqrt((j_max + 1.0) * (j_max + 1.0) + 36.0 * beta) + 8.0;
    const int m_top = std::max(j_max + 50, static_cast<int>(std::ceil(start)));
    std::vector<double> f(static_cast<std::size_t>(m_top) + 2, 0.0);
    f[static_cast<std::size_t>(m_top) + 1] = 0.0;
    f[static_cast<std::size_t>(m_top)] = 1.0;
    for (int j = m_top - 1; j >= 0; --j) {
        f[j] = f[j + 2] + (2.0 * (j + 1) / beta) * f[j + 1];
        if (f[j] > 1e250) {
            // Rescale the tail computed so far; entries that fall below the
            // double range become honest zeros.
            for (int i = j; i <= m_top + 1; ++i) f[i] *= 1e-250;
        }
    }
    const double scale = scaled_bessel_i0_asymptotic(beta) / f[0];
    std::vector<double> out(static_cast<std::size_t>(j_max) + 1);
    for (int j = 0; j <= j_max; ++j) out[static_cast<std::size_t>(j)] = f[j] * scale;
    return out;
}

// -------------------------------------------------------------------------
// Radix-2 FFT (forward, e^{-2pi i tm/T} convention)
// -------------------------------------------------------------------------

void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, rev = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; rev & bit; bit >>= 1) rev ^= bit;
        rev ^= bit;
        if (i < rev) std::swap(a[i], a[rev]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> root(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= root;
            }
        }
    }
}

double bump_raw(double x) {
    const double s = 1.0 - x * x;
    if (s <= 0.0) return 0.0;
    return std::exp(-1.0 / s);
}

// Adaptive Simpson quadrature, used for the interpolation residual check.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

bool is_power_of_two(long v) { return v > 0 && (v & (v - 1)) == 0; }

void append_csv_value(std::string& line, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

} // namespace

double lambert_w(double x) {
    const double branch_point = -std::exp(-1.0);
    if (x < branch_point - 1e-15)
        throw std::invalid_argument("lambert_w: argument below -1/e");
    if (x < branch_point) x = branch_point;
    if (x == 0.0) return 0.0;
    double w = lambert_w_initial(x);
    for (int it = 0; it < 60; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        const double step = f / denom;
        w -= step;
        if (std::abs(step) <= 1e-14 * (1.0 + std::abs(w))) break;
    }
    return w;
}

double select_beta(double delta, double epsilon) {
    if (!(delta > 0.0) || !(delta < kPi / 2))
        throw std::invalid_argument("select_beta: delta must lie in (0, pi/2)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("select_beta: epsilon must be positive");
    const double s = std::sin(delta);
    const double w = lambert_w(3.0 / (kPi * epsilon * epsilon));
    return std::max(w / (4.0 * s * s), 1.0);
}

std::vector<double> scaled_bessel_i(double beta, int j_max) {
    if (!(beta > 0.0)) throw std::invalid_argument("scaled_bessel_i: beta must be positive");
    if (j_max < 0) throw std::invalid_argument("scaled_bessel_i: j_max must be nonnegative");
    if (beta <= 700.0) {
        std::vector<double> out(static_cast<std::size_t>(j_max) + 1);
        for (int j = 0; j <= j_max; ++j)
            out[static_cast<std::size_t>(j)] = scaled_bessel_series(beta, j);
        return out;
    }
    return scaled_bessel_miller(beta, j_max);
}

double CdfFourierSpec::magnitude(int k) const {
    if (k < 1 || k > N) throw std::invalid_argument("magnitude: k out of range");
    if (k % 2 == 0) return 0.0;
    return magnitudes[(k - 1) / 2];
}

std::vector<int> CdfFourierSpec::odd_ks() const {
    std::vector<int> ks(static_cast<std::size_t>(d) + 1);
    for (int j = 0; j <= d; ++j) ks[static_cast<std::size_t>(j)] = 2 * j + 1;
    return ks;
}

CdfFourierSpec wan_coefficients(double beta, int d) {
    if (!(beta >= 1.0)) throw std::invalid_argument("wan_coefficients: beta must be >= 1");
    if (d < 1) throw std::invalid_argument("wan_coefficients: d must be >= 1");
    const std::vector<double> si = scaled_bessel_i(beta, d + 1);
    const double pref = std::sqrt(beta / (2.0 * kPi));
    CdfFourierSpec spec;
    spec.beta = beta;
    spec.d = d;
    spec.N = 2 * d + 1;
    spec.magnitudes.resize(d + 1);
    for (int j = 0; j < d; ++j)
        spec.magnitudes[j] = pref * (si[j] + si[j + 1]) / (2.0 * j + 1.0);
    spec.magnitudes[d] = pref * si[d] / (2.0 * d + 1.0);
    double sum = 0.0;
    for (int j = d; j >= 0; --j) {
        const double m = spec.magnitudes[j];
        if (!(m > 0.0) || !std::isfinite(m))
            throw std::invalid_argument(
                "wan_coefficients: coefficient at k = " + std::to_string(2 * j + 1) +
                " left the double range; reduce d for beta = " + std::to_string(beta));
        sum += m;
    }
    spec.normalization = sum;
    return spec;
}

double heaviside_reconstruction(const CdfFourierSpec& spec, double x) {
    double acc = 0.0;
    for (int j = spec.d; j >= 0; --j) acc += spec.magnitudes[j] * std::sin((2 * j + 1) * x);
    return 0.5 + 2.0 * acc;
}

double heaviside_band_error(const CdfFourierSpec& spec, double delta, int grid_points) {
    if (!(delta > 0.0) || !(delta < kPi / 2))
        throw std::invalid_argument("heaviside_band_error: delta must lie in (0, pi/2)");
    double worst = 0.0;
    const int n = std::max(grid_points, 2);
    for (int i = 0; i < n; ++i) {
        const double x = delta + (kPi - 2.0 * delta) * i / (n - 1);
        // Rotation recurrence over odd k; F(-x) = 1 - F(x) makes the mirror
        // band error identical, but both are accumulated explicitly.
        const std::complex<double> z(std::cos(x), std::sin(x));
        const std::complex<double> z2 = z * z;
        std::complex<double> w = z;
        double acc = 0.0;
        for (int j = 0; j <= spec.d; ++j) {
            acc += spec.magnitudes[j] * w.imag();
            w *= z2;
        }
        const double fx = 0.5 + 2.0 * acc;
        worst = std::max(worst, std::abs(1.0 - fx));       // Theta = 1 on [delta, pi-delta]
        worst = std::max(worst, std::abs(1.0 - fx - 0.0)); // Theta = 0 at -x, F(-x) = 1 - fx
    }
    return worst;
}

int select_d(double beta, double epsilon, double delta, int d_start, int d_max) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("select_d: epsilon must be positive");
    for (int d = std::max(d_start, 1); d <= d_max; d *= 2) {
        CdfFourierSpec spec;
        try {
            spec = wan_coefficients(beta, d);
        } catch (const std::invalid_argument&) {
            // Coefficients underflowed before the band converged: no larger d
            // can help at this beta.
            break;
        }
        if (heaviside_band_error(spec, delta) <= epsilon) return d;
    }
    throw std::runtime_error("select_d: no usable d up to " + std::to_string(d_max) +
                             " meets the requested band accuracy at beta = " +
                             std::to_string(beta));
}

double QeeaFourierSpec::coefficient(int k) const {
    if (k < 1 || k >= N) throw std::invalid_argument("coefficient: k out of range");
    return coefficients[k - 1];
}

QeeaFourierSpec qeea_coefficients(double epsilon, int N, int grid_size, double alpha) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("qeea_coefficients: epsilon must be positive");
    if (N < 2) throw std::invalid_argument("qeea_coefficients: N must be >= 2");
    if (!is_power_of_two(grid_size) || grid_size < (1 << 14))
        throw std::invalid_argument("qeea_coefficients: grid_size must be a power of two >= 2^14");
    if (!(alpha > 0.0)) throw std::invalid_argument("qeea_coefficients: alpha must be positive");

    const double dx = 2.0 / grid_size;
    std::vector<double> h(static_cast<std::size_t>(grid_size));
    double riemann = 0.0;
    for (int i = 0; i < grid_size; ++i) {
        const double x = -1.0 + i * dx;
        h[static_cast<std::size_t>(i)] = bump_raw(x);
        riemann += h[static_cast<std::size_t>(i)];
    }
    const double norm_a = 1.0 / (riemann * dx);

    // Zero-padded grid; the pad factor sets the frequency spacing for the
    // cubic interpolation of hhat and keeps its residual well under 1e-8.
    const int pad_factor = 256;
    const std::size_t total = static_cast<std::size_t>(grid_size) * pad_factor;
    std::vector<std::complex<double>> signal(total, 0.0);
    for (int i = 0; i < grid_size; ++i) {
        const double x = -1.0 + i * dx;
        const double value = norm_a * h[static_cast<std::size_t>(i)];
        if (x >= 0.0)
            signal[static_cast<std::size_t>(std::llround(x / dx))] = value;
        else
            signal[total - static_cast<std::size_t>(std::llround(-x / dx))] = value;
    }
    fft_inplace(signal);

    const double domega = 2.0 * kPi / (static_cast<double>(total) * dx);
    const double omega_nyquist = kPi / dx;
    const double omega_max = (N - 1) * epsilon / 2.0;
    if (omega_max > 0.9 * omega_nyquist)
        throw std::runtime_error("qeea_coefficients: grid too coarse for the requested N");

    const std::size_t half = total / 2;
    std::vector<double> hhat(half);
    for (std::size_t m = 0; m < half; ++m) hhat[m] = dx * signal[m].real();

    // hhat is even in omega; cubic Lagrange through the four surrounding
    // frequency-grid nodes.
    auto hhat_at = [&](double omega) {
        const double t = std::abs(omega) / domega;
        const std::size_t m = static_cast<std::size_t>(t);
        if (m + 2 >= half) throw std::runtime_error("qeea_coefficients: frequency out of range");
        const double u = t - m;
        const double ym1 = m == 0 ? hhat[1] : hhat[m - 1];
        const double y0 = hhat[m];
        const double y1 = hhat[m + 1];
        const double y2 = hhat[m + 2];
        const double c0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
        const double c1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
        const double c2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
        const double c3 = (u + 1.0) * u * (u - 1.0) / 6.0;
        return c0 * ym1 + c1 * y0 + c2 * y1 + c3 * y2;
    };

    // Spot-check the interpolated transform against direct quadrature.
    Rng check_rng(0x5eed5eedULL);
    for (int t = 0; t < 16; ++t) {
        const double omega = check_rng.uniform() * omega_max;
        const double direct =
            2.0 * norm_a *
            integrate([&](double x) { return bump_raw(x) * std::cos(omega * x); }, 0.0, 1.0, 1e-13);
        if (std::abs(hhat_at(omega) - direct) > 1e-8)
            throw std::runtime_error("qeea_coefficients: grid too coarse, interpolation residual "
                                     "exceeds 1e-8");
    }

    QeeaFourierSpec spec;
    spec.epsilon = epsilon;
    spec.N = N;
    spec.alpha = alpha;
    spec.M = static_cast<int>(std::llround(2.0 * alpha / epsilon));
    spec.coefficients.resize(N - 1);
    const double pref = std::sqrt(2.0 / kPi);
    for (int k = 1; k < N; ++k) {
        const double w = k * epsilon / 2.0;
        spec.coefficients[k - 1] = pref * hhat_at(w) * std::sin(w) / k;
    }
    return spec;
}

ImportanceDistribution importance_distribution(const CdfFourierSpec& spec) {
    ImportanceDistribution dist;
    dist.ks = spec.odd_ks();
    dist.probabilities = spec.magnitudes / spec.normalization;
    dist.signs = Eigen::VectorXd::Ones(spec.d + 1);
    dist.normalization = spec.normalization;
    return dist;
}

ImportanceDistribution importance_distribution(const QeeaFourierSpec& spec) {
    ImportanceDistribution dist;
    dist.ks.resize(static_cast<std::size_t>(spec.N) - 1);
    for (int k = 1; k < spec.N; ++k) dist.ks[static_cast<std::size_t>(k - 1)] = k;
    Eigen::VectorXd mags = spec.coefficients.cwiseAbs();
    dist.normalization = mags.sum();
    if (!(dist.normalization > 0.0))
        throw std::invalid_argument("importance_distribution: all coefficients vanish");
    dist.probabilities = mags / dist.normalization;
    dist.signs = spec.coefficients.unaryExpr([](double v) { return v < 0.0 ? -1.0 : 1.0; });
    return dist;
}

void write_coefficients_csv(std::ostream& os, const ImportanceDistribution& dist) {
    os << "k,magnitude,probability\n";
    for (std::size_t i = 0; i < dist.ks.size(); ++i) {
        std::string line = std::to_string(dist.ks[i]);
        line += ',';
        append_csv_value(line, dist.probabilities[static_cast<Eigen::Index>(i)] *
                                   dist.normalization);
        line += ',';
        append_csv_value(line, dist.probabilities[static_cast<Eigen::Index>(i)]);
        line += '\n';
        os << line;
    }
}

} // namespace spe
