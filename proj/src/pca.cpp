#include "gvf/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gvf {

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major d*d).
// Returns eigenvalues and fills eigenvectors as columns of V.
void jacobi_eigen(std::vector<double>& a, std::size_t d, std::vector<double>& eigvals,
                  std::vector<double>& v) {
    v.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) {
                double apq = a[p * d + q];
                if (std::fabs(apq) < 1e-300) continue;
                double app = a[p * d + p], aqq = a[q * d + q];
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t i = 0; i < d; ++i) {
                    double aip = a[i * d + p], aiq = a[i * d + q];
                    a[i * d + p] = c * aip - s * aiq;
                    a[i * d + q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    double api = a[p * d + i], aqi = a[q * d + i];
                    a[p * d + i] = c * api - s * aqi;
                    a[q * d + i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    double vip = v[i * d + p], viq = v[i * d + q];
                    v[i * d + p] = c * vip - s * viq;
                    v[i * d + q] = s * vip + c * viq;
                }
            }
    }
    eigvals.resize(d);
    for (std::size_t i = 0; i < d; ++i) eigvals[i] = a[i * d + i];
}

}  // namespace

PcaBasis pca_fit(const std::vector<std::vector<double>>& points, std::size_t k) {
    if (points.size() < 2) throw std::invalid_argument("pca_fit: need at least 2 points");
    const std::size_t d = points[0].size();
    if (k > d) throw std::invalid_argument("pca_fit: k exceeds dimension");
    for (const auto& p : points)
        if (p.size() != d) throw std::invalid_argument("pca_fit: ragged points");

    PcaBasis basis;
    basis.mean.assign(d, 0.0);
    for (const auto& p : points)
        for (std::size_t i = 0; i < d; ++i) basis.mean[i] += p[i];
    for (double& m : basis.mean) m /= static_cast<double>(points.size());

    std::vector<double> cov(d * d, 0.0);
    for (const auto& p : points)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                cov[i * d + j] += (p[i] - basis.mean[i]) * (p[j] - basis.mean[j]);
    double denom = static_cast<double>(points.size() - 1);
    for (double& c : cov) c /= denom;

    std::vector<double> eigvals, v;
    jacobi_eigen(cov, d, eigvals, v);

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return eigvals[a] > eigvals[b]; });

    for (std::size_t j = 0; j < k; ++j) {
        std::size_t col = order[j];
        std::vector<double> axis(d);
        for (std::size_t i = 0; i < d; ++i) axis[i] = v[i * d + col];
        // sign convention: largest-magnitude component positive
        std::size_t imax = 0;
        for (std::size_t i = 1; i < d; ++i)
            if (std::fabs(axis[i]) > std::fabs(axis[imax])) imax = i;
        if (axis[imax] < 0)
            for (double& x : axis) x = -x;
        basis.axes.push_back(std::move(axis));
        basis.eigenvalues.push_back(eigvals[col]);
    }
    return basis;
}

std::vector<double> pca_project(const PcaBasis& basis, const std::vector<double>& point) {
    const std::size_t d = basis.mean.size();
    if (point.size() != d) throw std::invalid_argument("pca_project: dimension mismatch");
    std::vector<double> out(basis.axes.size(), 0.0);
    for (std::size_t j = 0; j < basis.axes.size(); ++j)
        for (std::size_t i = 0; i < d; ++i)
            out[j] += basis.axes[j][i] * (point[i] - basis.mean[i]);
    return out;
}

}  // namespace gvf
