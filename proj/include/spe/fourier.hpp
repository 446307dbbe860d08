#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

namespace spe {

// Principal branch of the Lambert-W function, valid for x >= -1/e.
double lambert_w(double x);

// beta = max{ W(3/(pi eps^2)) / (4 sin^2 delta), 1 }: the smallest beta that
// pins the step approximation to |Theta - F| <= eps outside +-delta bands.
double select_beta(double delta, double epsilon);

// e^{-beta} I_j(beta) for j = 0..j_max. Direct series for beta <= 700,
// Miller backward recurrence normalized by the uniform asymptotics of
// e^{-beta} I_0(beta) above that, where the unscaled I_j overflow.
std::vector<double> scaled_bessel_i(double beta, int j_max);

// Fourier data of the approximate periodic step: |F_k| for odd k <= N = 2d+1,
// plus the k = 0 coefficient 1/2 held implicitly as the CDF offset.
struct CdfFourierSpec {
    double beta = 0.0;
    int d = 0;
    int N = 0;                   // 2d + 1
    Eigen::VectorXd magnitudes;  // entry j is |F_{2j+1}|, j = 0..d
    double normalization = 0.0;  // S = sum over stored magnitudes

    double magnitude(int k) const; // 0 for even k, error for k out of range
    std::vector<int> odd_ks() const;
};

CdfFourierSpec wan_coefficients(double beta, int d);

// F(x) = 1/2 + 2 sum_{odd k <= N} |F_k| sin(kx).
double heaviside_reconstruction(const CdfFourierSpec& spec, double x);

// Sup of |Theta(x) - F(x)| over a grid on [delta, pi - delta] and its mirror
// band, with Theta the 2pi-periodic unit step.
double heaviside_band_error(const CdfFourierSpec& spec, double delta,
                            int grid_points = 10000);

// Doubles d geometrically until the reconstruction meets the band error eps.
int select_d(double beta, double epsilon, double delta, int d_start = 16,
             int d_max = 1 << 16);

// Window-filter Fourier data for the bin-based estimator. Signed F_k for
// k = 1..N-1; the k = 0 term is the constant offset epsilon/2pi.
struct QeeaFourierSpec {
    double epsilon = 0.0; // half-bin width; bin centers are epsilon apart
    int N = 0;
    double alpha = 0.5; // spectrum assumed inside [-alpha, alpha]
    int M = 0;          // bins are centered at -alpha + j*epsilon, j = 0..M
    Eigen::VectorXd coefficients; // entry k-1 is F_k

    double coefficient(int k) const;
    double bin_center(int j) const { return -alpha + j * epsilon; }
};

// Bump-window coefficients F_k = H(k eps/2) sin(k eps/2) / k, with H the
// transform of the normalized bump evaluated by FFT on a padded grid and
// cross-checked against direct quadrature.
QeeaFourierSpec qeea_coefficients(double epsilon, int N, int grid_size,
                                  double alpha = 0.5);

// P_k proportional to |F_k|; QEEA signs are carried separately so the
// sampled sums can reinstate them.
struct ImportanceDistribution {
    std::vector<int> ks;
    Eigen::VectorXd probabilities;
    Eigen::VectorXd signs;       // +1 everywhere for the CDF spec
    double normalization = 0.0;  // S
};

ImportanceDistribution importance_distribution(const CdfFourierSpec& spec);
ImportanceDistribution importance_distribution(const QeeaFourierSpec& spec);

// Audit CSV with columns (k, magnitude, probability).
void write_coefficients_csv(std::ostream& os, const ImportanceDistribution& dist);

} // namespace spe
