#include "eora/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace eora {

namespace {

constexpr int kMaxSweeps = 60;

double off_diagonal_norm(const Matrix &a) {
    double sum = 0.0;
    for (std::size_t p = 0; p < a.rows(); ++p) {
        for (std::size_t q = p + 1; q < a.cols(); ++q) {
            sum += a(p, q) * a(p, q);
        }
    }
    return std::sqrt(2.0 * sum);
}

// Jacobi rotation parameters zeroing a_pq: returns (c, s).
std::pair<double, double> rotation(double app, double aqq, double apq) {
    double theta = (aqq - app) / (2.0 * apq);
    double t;
    if (std::isfinite(theta)) {
        t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
    } else {
        t = 0.0;
    }
    double c = 1.0 / std::sqrt(t * t + 1.0);
    return {c, t * c};
}

// Flip factor columns so the largest-magnitude entry of each u column is
// non-negative; paired v columns flip with them. Ties go to the lowest row.
void fix_column_signs(Matrix &u, Matrix *v) {
    for (std::size_t j = 0; j < u.cols(); ++j) {
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t i = 0; i < u.rows(); ++i) {
            double mag = std::fabs(u(i, j));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < u.rows(); ++i) u(i, j) = -u(i, j);
            if (v != nullptr) {
                for (std::size_t i = 0; i < v->rows(); ++i) (*v)(i, j) = -(*v)(i, j);
            }
        }
    }
}

// Deterministic orthonormal completion: fill column slot j of u with a unit
// vector orthogonal to all columns listed in `done`. Candidates come from
// the standard basis; the one leaving the largest residual after projection
// wins (ties to the lowest index), re-orthogonalized twice.
void complete_column(Matrix &u, std::size_t j, const std::vector<std::size_t> &done) {
    const std::size_t m = u.rows();
    std::vector<double> v(m), best_v;
    double best_norm = 0.0;

    auto project_out = [&](std::vector<double> &x) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t col : done) {
                double dot = 0.0;
                for (std::size_t i = 0; i < m; ++i) dot += x[i] * u(i, col);
                for (std::size_t i = 0; i < m; ++i) x[i] -= dot * u(i, col);
            }
        }
        double norm = 0.0;
        for (double t : x) norm += t * t;
        return std::sqrt(norm);
    };

    for (std::size_t e = 0; e < m; ++e) {
        std::fill(v.begin(), v.end(), 0.0);
        v[e] = 1.0;
        double norm = project_out(v);
        if (norm > best_norm) {
            best_norm = norm;
            best_v = v;
            if (norm >= 0.9) break;
        }
    }
    if (best_norm < 1e-6) {
        throw NumericError("orthonormal completion failed");
    }
    for (std::size_t i = 0; i < m; ++i) u(i, j) = best_v[i] / best_norm;
}

} // namespace

EigenDecomposition sym_eig(const Matrix &g) {
    if (g.rows() != g.cols()) {
        throw DimensionError("sym_eig: matrix is not square (" +
                             std::to_string(g.rows()) + "x" +
                             std::to_string(g.cols()) + ")");
    }
    require_finite(g, "sym_eig");
    const std::size_t n = g.rows();

    double asym = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double d = g(i, j) - g(j, i);
            asym += d * d;
            scale += g(i, j) * g(i, j);
        }
    }
    if (std::sqrt(asym) > 1e-10 * std::sqrt(scale)) {
        throw ValidationError("sym_eig: input is not symmetric");
    }

    // Exact symmetrization kills the residual asymmetry up front.
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a(i, j) = 0.5 * (g(i, j) + g(j, i));
        }
    }
    Matrix q = Matrix::identity(n);

    const double norm = frobenius_norm(a);
    if (norm > 0.0) {
        for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
            if (off_diagonal_norm(a) <= 1e-15 * norm) break;
            bool rotated = false;
            for (std::size_t p = 0; p + 1 < n; ++p) {
                for (std::size_t qq = p + 1; qq < n; ++qq) {
                    double apq = a(p, qq);
                    if (std::fabs(apq) <= 1e-300) continue;
                    auto [c, s] = rotation(a(p, p), a(qq, qq), apq);
                    if (s == 0.0) continue;
                    rotated = true;
                    // Two-sided rotation on rows/cols p and qq.
                    for (std::size_t i = 0; i < n; ++i) {
                        double aip = a(i, p), aiq = a(i, qq);
                        a(i, p) = c * aip - s * aiq;
                        a(i, qq) = s * aip + c * aiq;
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        double api = a(p, i), aqi = a(qq, i);
                        a(p, i) = c * api - s * aqi;
                        a(qq, i) = s * api + c * aqi;
                    }
                    a(p, qq) = 0.0;
                    a(qq, p) = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        double qip = q(i, p), qiq = q(i, qq);
                        q(i, p) = c * qip - s * qiq;
                        q(i, qq) = s * qip + c * qiq;
                    }
                }
            }
            if (!rotated) break;
        }
        if (off_diagonal_norm(a) > 1e-10 * norm) {
            throw NumericError("sym_eig: Jacobi iteration did not converge");
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return a(l, l) > a(r, r);
    });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) {
            out.eigenvectors(i, j) = q(i, order[j]);
        }
    }
    fix_column_signs(out.eigenvectors, nullptr);
    return out;
}

namespace {

// One-sided Jacobi on a tall matrix (rows >= cols): orthogonalizes the
// columns of w, accumulating the right rotations into v. Returns full
// factors (n columns) with zero-padded tail for rank-deficient input.
struct FullSvd {
    Matrix u;
    std::vector<double> sigma;
    Matrix v; // columns are right singular vectors
};

FullSvd svd_tall(const Matrix &m) {
    const std::size_t rows = m.rows(), cols = m.cols();
    Matrix w = m;
    Matrix v = Matrix::identity(cols);

    const double ref = frobenius_norm(m);
    if (ref > 0.0) {
        for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
            bool rotated = false;
            for (std::size_t p = 0; p + 1 < cols; ++p) {
                for (std::size_t q = p + 1; q < cols; ++q) {
                    double app = 0.0, aqq = 0.0, apq = 0.0;
                    for (std::size_t i = 0; i < rows; ++i) {
                        double wp = w(i, p), wq = w(i, q);
                        app += wp * wp;
                        aqq += wq * wq;
                        apq += wp * wq;
                    }
                    if (std::fabs(apq) <= 1e-15 * std::sqrt(app * aqq)) continue;
                    rotated = true;
                    auto [c, s] = rotation(app, aqq, apq);
                    for (std::size_t i = 0; i < rows; ++i) {
                        double wp = w(i, p), wq = w(i, q);
                        w(i, p) = c * wp - s * wq;
                        w(i, q) = s * wp + c * wq;
                    }
                    for (std::size_t i = 0; i < cols; ++i) {
                        double vp = v(i, p), vq = v(i, q);
                        v(i, p) = c * vp - s * vq;
                        v(i, q) = s * vp + c * vq;
                    }
                }
            }
            if (!rotated) break;
        }
    }

    std::vector<double> sigma(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < rows; ++i) sum += w(i, j) * w(i, j);
        sigma[j] = std::sqrt(sum);
    }

    std::vector<std::size_t> order(cols);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return sigma[l] > sigma[r];
    });

    FullSvd out;
    out.sigma.resize(cols);
    out.u = Matrix(rows, cols);
    out.v = Matrix(cols, cols);
    const double sigma_max = sigma[order[0]];
    const double cutoff = sigma_max * 1e-12;

    std::vector<std::size_t> normalized;
    std::vector<std::size_t> deficient;
    for (std::size_t j = 0; j < cols; ++j) {
        std::size_t src = order[j];
        for (std::size_t i = 0; i < cols; ++i) out.v(i, j) = v(i, src);
        if (sigma[src] > cutoff && sigma[src] > 0.0) {
            out.sigma[j] = sigma[src];
            for (std::size_t i = 0; i < rows; ++i) out.u(i, j) = w(i, src) / sigma[src];
            normalized.push_back(j);
        } else {
            out.sigma[j] = 0.0;
            deficient.push_back(j);
        }
    }
    for (std::size_t j : deficient) {
        complete_column(out.u, j, normalized);
        normalized.push_back(j);
    }
    return out;
}

} // namespace

SvdFactors truncated_svd(const Matrix &m, int r) {
    if (m.rows() == 0 || m.cols() == 0) {
        throw DimensionError("truncated_svd: empty matrix");
    }
    require_finite(m, "truncated_svd");
    const std::size_t min_dim = std::min(m.rows(), m.cols());
    if (r < 1 || static_cast<std::size_t>(r) > min_dim) {
        throw RankError("truncated_svd: rank " + std::to_string(r) +
                        " outside [1, " + std::to_string(min_dim) + "]");
    }

    FullSvd f;
    if (m.rows() >= m.cols()) {
        f = svd_tall(m);
    } else {
        FullSvd t = svd_tall(transpose(m));
        f.u = std::move(t.v);
        f.v = std::move(t.u);
        f.sigma = std::move(t.sigma);
    }
    fix_column_signs(f.u, &f.v);

    const std::size_t rr = static_cast<std::size_t>(r);
    SvdFactors out;
    out.u = Matrix(m.rows(), rr);
    out.vt = Matrix(rr, m.cols());
    out.singular_values.assign(f.sigma.begin(), f.sigma.begin() + rr);
    for (std::size_t j = 0; j < rr; ++j) {
        for (std::size_t i = 0; i < m.rows(); ++i) out.u(i, j) = f.u(i, j);
        for (std::size_t i = 0; i < m.cols(); ++i) out.vt(j, i) = f.v(i, j);
    }
    return out;
}

} // namespace eora
