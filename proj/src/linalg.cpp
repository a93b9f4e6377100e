#include "glw/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glw/kernels.hpp"
#include "glw/rng.hpp"

namespace glw {

Tensor mat_mul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("mat_mul: " + a.shape_str() + " * " + b.shape_str());
    }
    Tensor c = Tensor::zeros({a.rows(), b.cols()});
    kern::active().mm_acc(c.data.data(), a.data.data(), b.data.data(),
                          a.rows(), a.cols(), b.cols());
    return c;
}

Tensor mat_transpose(const Tensor& a) {
    Tensor t = Tensor::zeros({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
    }
    return t;
}

Tensor random_orthonormal(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    if (cols > rows) throw ShapeError("random_orthonormal needs rows >= cols");
    Rng rng(seed);
    Tensor q = Tensor::zeros({rows, cols});
    for (auto& v : q.data) v = rng.normal();
    // Modified Gram-Schmidt, two passes for orthogonality to ~1e-15.
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < cols; ++j) {
            for (std::size_t p = 0; p < j; ++p) {
                double dot = 0.0;
                for (std::size_t i = 0; i < rows; ++i) dot += q.at(i, p) * q.at(i, j);
                for (std::size_t i = 0; i < rows; ++i) q.at(i, j) -= dot * q.at(i, p);
            }
            double nrm = 0.0;
            for (std::size_t i = 0; i < rows; ++i) nrm += q.at(i, j) * q.at(i, j);
            nrm = std::sqrt(nrm);
            if (nrm < 1e-12) throw NumericsError("degenerate column in random_orthonormal");
            for (std::size_t i = 0; i < rows; ++i) q.at(i, j) /= nrm;
        }
    }
    return q;
}

EigenSym eigen_symmetric(const Tensor& a) {
    if (a.rank() != 2 || a.rows() != a.cols()) {
        throw ShapeError("eigen_symmetric needs a square matrix, got " + a.shape_str());
    }
    const std::size_t n = a.rows();
    Tensor m = a;
    Tensor v = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += m.at(p, q) * m.at(p, q);
        }
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (m.at(q, q) - m.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double mip = m.at(i, p), miq = m.at(i, q);
                    m.at(i, p) = c * mip - s * miq;
                    m.at(i, q) = s * mip + c * miq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double mpi = m.at(p, i), mqi = m.at(q, i);
                    m.at(p, i) = c * mpi - s * mqi;
                    m.at(q, i) = s * mpi + c * mqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v.at(i, p), viq = v.at(i, q);
                    v.at(i, p) = c * vip - s * viq;
                    v.at(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return m.at(i, i) < m.at(j, j); });
    EigenSym out;
    out.values.resize(n);
    out.vectors = Tensor::zeros({n, n});
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = m.at(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors.at(i, j) = v.at(i, order[j]);
    }
    return out;
}

Svd svd_square(const Tensor& a) {
    if (a.rank() != 2 || a.rows() != a.cols()) {
        throw ShapeError("svd_square needs a square matrix, got " + a.shape_str());
    }
    const std::size_t n = a.rows();
    Tensor u = a;  // columns get rotated into U * diag(s)
    Tensor v = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    // One-sided Jacobi: orthogonalize column pairs of u.
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    alpha += u.at(i, p) * u.at(i, p);
                    beta += u.at(i, q) * u.at(i, q);
                    gamma += u.at(i, p) * u.at(i, q);
                }
                off = std::max(off, std::abs(gamma) / std::max(std::sqrt(alpha * beta), 1e-300));
                if (std::abs(gamma) < 1e-300) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double up = u.at(i, p), uq = u.at(i, q);
                    u.at(i, p) = c * up - s * uq;
                    u.at(i, q) = s * up + c * uq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v.at(i, p), vq = v.at(i, q);
                    v.at(i, p) = c * vp - s * vq;
                    v.at(i, q) = s * vp + c * vq;
                }
            }
        }
        if (off < 1e-14) break;
    }

    Svd out;
    out.s.resize(n);
    out.u = Tensor::zeros({n, n});
    out.v = Tensor::zeros({n, n});
    std::vector<double> norms(n);
    double smax = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) nrm += u.at(i, j) * u.at(i, j);
        norms[j] = std::sqrt(nrm);
        smax = std::max(smax, norms[j]);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });

    const double tol = std::max(smax, 1.0) * 1e-13;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.s[j] = norms[src];
        for (std::size_t i = 0; i < n; ++i) out.v.at(i, j) = v.at(i, src);
        if (norms[src] > tol) {
            for (std::size_t i = 0; i < n; ++i) out.u.at(i, j) = u.at(i, src) / norms[src];
        } else {
            out.rank_deficient = true;
        }
    }
    // Complete U columns for (near-)zero singular values to an orthonormal
    // basis. Columns j are filled in ascending order, orthogonalizing trial
    // canonical vectors against every column already placed (p < j plus the
    // valid ones after j).
    if (out.rank_deficient) {
        for (std::size_t j = 0; j < n; ++j) {
            if (out.s[j] > tol) continue;
            for (std::size_t cand = 0; cand < n; ++cand) {
                std::vector<double> col(n, 0.0);
                col[cand] = 1.0;
                for (int pass = 0; pass < 2; ++pass) {
                    for (std::size_t p = 0; p < n; ++p) {
                        if (p == j) continue;
                        if (p > j && out.s[p] <= tol) continue;  // not yet placed
                        double dot = 0.0;
                        for (std::size_t i = 0; i < n; ++i) dot += out.u.at(i, p) * col[i];
                        for (std::size_t i = 0; i < n; ++i) col[i] -= dot * out.u.at(i, p);
                    }
                }
                double nrm = 0.0;
                for (double x : col) nrm += x * x;
                nrm = std::sqrt(nrm);
                if (nrm > 1e-6) {
                    for (std::size_t i = 0; i < n; ++i) out.u.at(i, j) = col[i] / nrm;
                    break;
                }
            }
        }
    }
    return out;
}

ProcrustesResult procrustes(const Tensor& x, const Tensor& y) {
    if (x.rank() != 2 || y.rank() != 2 || x.shape != y.shape) {
        throw ShapeError("procrustes: " + x.shape_str() + " vs " + y.shape_str());
    }
    if (x.rows() < x.cols()) {
        throw ShapeError("procrustes needs n >= k, got " + x.shape_str());
    }
    Tensor m = Tensor::zeros({x.cols(), x.cols()});
    kern::active().mm_ta_acc(m.data.data(), x.data.data(), y.data.data(),
                             x.rows(), x.cols(), y.cols());
    const Svd d = svd_square(m);
    ProcrustesResult out;
    out.rank_deficient = d.rank_deficient;
    out.w = mat_mul(d.u, mat_transpose(d.v));
    return out;
}

Tensor pinv_tall(const Tensor& g) {
    if (g.rows() < g.cols()) throw ShapeError("pinv_tall needs rows >= cols");
    const std::size_t k = g.cols();
    Tensor gtg = Tensor::zeros({k, k});
    kern::active().mm_ta_acc(gtg.data.data(), g.data.data(), g.data.data(),
                             g.rows(), k, k);
    const EigenSym eig = eigen_symmetric(gtg);
    if (eig.values.front() < 1e-10 * std::max(eig.values.back(), 1.0)) {
        throw NumericsError("pinv_tall: matrix is (near) rank-deficient");
    }
    // (G^T G)^-1 = V diag(1/lambda) V^T
    Tensor inv = Tensor::zeros({k, k});
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += eig.vectors.at(i, p) * eig.vectors.at(j, p) / eig.values[p];
            }
            inv.at(i, j) = acc;
        }
    }
    return mat_mul(inv, mat_transpose(g));
}

}  // namespace glw
