#include "glw/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "glw/kernels.hpp"
#include "glw/linalg.hpp"
#include "glw/rng.hpp"

namespace glw {

Whitening fit_whitening(const Tensor& x) {
    if (x.rank() != 2 || x.rows() < 2) {
        throw ShapeError("fit_whitening needs >= 2 rows, got " + x.shape_str());
    }
    const std::size_t n = x.rows(), d = x.cols();
    Whitening w;
    w.mean = Tensor::zeros({d});
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) w.mean.data[j] += row[j];
    }
    for (auto& v : w.mean.data) v /= static_cast<double>(n);

    Tensor cov = Tensor::zeros({d, d});
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x.row_ptr(i);
        for (std::size_t a = 0; a < d; ++a) {
            const double ca = row[a] - w.mean.data[a];
            for (std::size_t b = 0; b < d; ++b) {
                cov.at(a, b) += ca * (row[b] - w.mean.data[b]);
            }
        }
    }
    for (auto& v : cov.data) v /= static_cast<double>(n - 1);

    const EigenSym eig = eigen_symmetric(cov);
    const double floor_val = std::max(eig.values.back(), 1.0) * 1e-12;
    w.forward = Tensor::zeros({d, d});
    w.inverse = Tensor::zeros({d, d});
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
            double f = 0.0, inv = 0.0;
            for (std::size_t p = 0; p < d; ++p) {
                const double lam = std::max(eig.values[p], floor_val);
                f += eig.vectors.at(a, p) * eig.vectors.at(b, p) / std::sqrt(lam);
                inv += eig.vectors.at(a, p) * eig.vectors.at(b, p) * std::sqrt(lam);
            }
            w.forward.at(a, b) = f;
            w.inverse.at(a, b) = inv;
        }
    }
    return w;
}

Tensor apply_whitening(const Whitening& w, const Tensor& x) {
    Tensor centered = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        kern::active().sub(centered.row_ptr(i), x.row_ptr(i), w.mean.data.data(), x.cols());
    }
    return mat_mul(centered, w.forward);
}

namespace {

KMeansResult kmeans_once(const Tensor& x, std::size_t c, std::uint64_t seed,
                         std::size_t iters) {
    const std::size_t n = x.rows(), d = x.cols();
    if (c == 0 || n < c) throw ConfigError("kmeans: need n >= c >= 1");
    Rng rng(Rng::derive(seed, 0x4B));

    KMeansResult r;
    r.centroids = Tensor::zeros({c, d});
    r.assignment.assign(n, 0);

    // k-means++ seeding.
    std::vector<double> d2(n, std::numeric_limits<double>::max());
    std::size_t first = rng.index(n);
    std::copy(x.row_ptr(first), x.row_ptr(first) + d, r.centroids.row_ptr(0));
    for (std::size_t ci = 1; ci < c; ++ci) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double dist = 0.0;
            const double* xi = x.row_ptr(i);
            const double* cc = r.centroids.row_ptr(ci - 1);
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = xi[j] - cc[j];
                dist += diff * diff;
            }
            d2[i] = std::min(d2[i], dist);
            total += d2[i];
        }
        double pick = rng.uniform() * total;
        std::size_t chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            pick -= d2[i];
            if (pick <= 0.0) {
                chosen = i;
                break;
            }
        }
        std::copy(x.row_ptr(chosen), x.row_ptr(chosen) + d, r.centroids.row_ptr(ci));
    }

    std::vector<std::size_t> counts(c);
    for (std::size_t it = 0; it < iters; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = x.row_ptr(i);
            double best = std::numeric_limits<double>::max();
            int arg = 0;
            for (std::size_t ci = 0; ci < c; ++ci) {
                const double* cc = r.centroids.row_ptr(ci);
                double dist = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = xi[j] - cc[j];
                    dist += diff * diff;
                }
                if (dist < best) {
                    best = dist;
                    arg = static_cast<int>(ci);
                }
            }
            if (arg != r.assignment[i]) changed = true;
            r.assignment[i] = arg;
        }
        std::fill(r.centroids.data.begin(), r.centroids.data.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t ci = static_cast<std::size_t>(r.assignment[i]);
            kern::active().add(r.centroids.row_ptr(ci), r.centroids.row_ptr(ci), x.row_ptr(i), d);
            ++counts[ci];
        }
        for (std::size_t ci = 0; ci < c; ++ci) {
            if (counts[ci] == 0) {
                // Re-seed an empty cluster deterministically.
                const std::size_t pick2 = rng.index(n);
                std::copy(x.row_ptr(pick2), x.row_ptr(pick2) + d, r.centroids.row_ptr(ci));
                continue;
            }
            const double inv = 1.0 / static_cast<double>(counts[ci]);
            kern::active().scale(r.centroids.row_ptr(ci), r.centroids.row_ptr(ci), inv, d);
        }
        if (!changed && it > 0) break;
    }
    r.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row_ptr(i);
        const double* cc = r.centroids.row_ptr(static_cast<std::size_t>(r.assignment[i]));
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = xi[j] - cc[j];
            r.inertia += diff * diff;
        }
    }
    return r;
}

}  // namespace

KMeansResult kmeans(const Tensor& x, std::size_t c, std::uint64_t seed, std::size_t iters,
                    std::size_t restarts) {
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::max();
    for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
        KMeansResult cur = kmeans_once(x, c, Rng::derive(seed, 0x4B00 + r), iters);
        if (cur.inertia < best.inertia) best = std::move(cur);
    }
    return best;
}

std::vector<std::pair<std::size_t, std::size_t>> mutual_nn(const Tensor& a, const Tensor& b,
                                                           std::size_t cap) {
    const std::size_t na = std::min(a.rows(), cap), nb = std::min(b.rows(), cap);
    const std::size_t d = a.cols();
    std::vector<std::size_t> a2b(na), b2a(nb);
    auto nn_scan = [&](const Tensor& x, std::size_t nx, const Tensor& y, std::size_t ny,
                       std::vector<std::size_t>& out) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double* xi = x.row_ptr(i);
            double best = std::numeric_limits<double>::max();
            std::size_t arg = 0;
            for (std::size_t j = 0; j < ny; ++j) {
                const double dist = kern::sq_diff_sum_seq(xi, y.row_ptr(j), d);
                if (dist < best) {
                    best = dist;
                    arg = j;
                }
            }
            out[i] = arg;
        }
    };
    nn_scan(a, na, b, nb, a2b);
    nn_scan(b, nb, a, na, b2a);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < na; ++i) {
        if (b2a[a2b[i]] == i) pairs.push_back({i, a2b[i]});
    }
    return pairs;
}

std::vector<std::size_t> hungarian(const Tensor& cost) {
    // Shortest augmenting path, O(n^3); potentials u/v, 1-based arrays.
    const std::size_t n = cost.rows();
    if (cost.cols() != n) throw ShapeError("hungarian needs a square cost matrix");
    const double inf = std::numeric_limits<double>::max();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> match(n);
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] > 0) match[p[j] - 1] = j - 1;
    }
    return match;
}

Tensor moment_axes(const Tensor& y) {
    const std::size_t n = y.rows(), d = y.cols();
    Tensor k = Tensor::zeros({d, d});
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = y.row_ptr(i);
        double r2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) r2 += row[j] * row[j];
        for (std::size_t a = 0; a < d; ++a) {
            const double ra = r2 * row[a];
            for (std::size_t b = 0; b < d; ++b) k.at(a, b) += ra * row[b];
        }
    }
    for (auto& v : k.data) v /= static_cast<double>(n);
    EigenSym eig = eigen_symmetric(k);

    // Fix signs by third moments along each axis.
    Tensor axes = eig.vectors;
    for (std::size_t j = 0; j < d; ++j) {
        double skew = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = y.row_ptr(i);
            double proj = 0.0;
            for (std::size_t a = 0; a < d; ++a) proj += row[a] * axes.at(a, j);
            skew += proj * proj * proj;
        }
        if (skew < 0.0) {
            for (std::size_t a = 0; a < d; ++a) axes.at(a, j) = -axes.at(a, j);
        }
    }
    return axes;
}

namespace {

std::vector<std::size_t> strided_subsample(std::size_t n, std::size_t max_points) {
    std::vector<std::size_t> idx;
    const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(1, max_points));
    for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
    return idx;
}

}  // namespace

IcpResult icp_refine(const Tensor& y_src, const Tensor& y_dst, const Tensor& init,
                     std::size_t iters, std::size_t max_points) {
    const std::size_t d = y_src.cols();
    const auto src_idx = strided_subsample(y_src.rows(), max_points);
    const auto dst_idx = strided_subsample(y_dst.rows(), max_points);

    Tensor src = Tensor::zeros({src_idx.size(), d});
    for (std::size_t i = 0; i < src_idx.size(); ++i) {
        std::copy(y_src.row_ptr(src_idx[i]), y_src.row_ptr(src_idx[i]) + d, src.row_ptr(i));
    }
    Tensor dst = Tensor::zeros({dst_idx.size(), d});
    for (std::size_t i = 0; i < dst_idx.size(); ++i) {
        std::copy(y_dst.row_ptr(dst_idx[i]), y_dst.row_ptr(dst_idx[i]) + d, dst.row_ptr(i));
    }

    IcpResult out;
    out.rotation = init;
    for (std::size_t it = 0; it <= iters; ++it) {
        const Tensor moved = mat_mul(src, out.rotation);
        // Nearest neighbor in dst for every moved src point.
        Tensor targets = Tensor::zeros({moved.rows(), d});
        double residual = 0.0;
        for (std::size_t i = 0; i < moved.rows(); ++i) {
            const double* mi = moved.row_ptr(i);
            double best = std::numeric_limits<double>::max();
            std::size_t arg = 0;
            for (std::size_t jj = 0; jj < dst.rows(); ++jj) {
                const double* dj = dst.row_ptr(jj);
                double dist = 0.0;
                for (std::size_t a = 0; a < d; ++a) {
                    const double diff = mi[a] - dj[a];
                    dist += diff * diff;
                }
                if (dist < best) {
                    best = dist;
                    arg = jj;
                }
            }
            residual += best;
            std::copy(dst.row_ptr(arg), dst.row_ptr(arg) + d, targets.row_ptr(i));
        }
        out.residual = residual / static_cast<double>(moved.rows());
        if (it == iters) break;
        out.rotation = procrustes(src, targets).w;
    }
    return out;
}

Tensor align_whitened_clouds(const Tensor& y_src, const Tensor& y_dst,
                             std::size_t n_clusters, std::uint64_t seed) {
    const std::size_t d = y_src.cols();
    std::vector<Tensor> hypotheses;

    // (a) moment-axes canonicalization: src axes -> dst axes.
    hypotheses.push_back(mat_mul(moment_axes(y_src), mat_transpose(moment_axes(y_dst))));

    // (b) identity.
    Tensor eye = Tensor::zeros({d, d});
    for (std::size_t i = 0; i < d; ++i) eye.at(i, i) = 1.0;
    hypotheses.push_back(eye);

    // (c) cluster-constellation matching when enough clusters are requested.
    if (n_clusters >= 2 && y_src.rows() >= n_clusters && y_dst.rows() >= n_clusters) {
        const KMeansResult ks = kmeans(y_src, n_clusters, Rng::derive(seed, 0x11));
        const KMeansResult kd = kmeans(y_dst, n_clusters, Rng::derive(seed, 0x22));
        // Distance-profile signatures are invariant to orthogonal maps and to
        // cluster order, so they survive the unknown rotation.
        auto profile = [&](const Tensor& cents, std::size_t row) {
            std::vector<double> p;
            for (std::size_t q = 0; q < n_clusters; ++q) {
                if (q == row) continue;
                double dist = 0.0;
                for (std::size_t a = 0; a < d; ++a) {
                    const double diff = cents.at(row, a) - cents.at(q, a);
                    dist += diff * diff;
                }
                p.push_back(std::sqrt(dist));
            }
            std::sort(p.begin(), p.end());
            return p;
        };
        Tensor cost = Tensor::zeros({n_clusters, n_clusters});
        for (std::size_t p = 0; p < n_clusters; ++p) {
            const auto ps = profile(ks.centroids, p);
            for (std::size_t q = 0; q < n_clusters; ++q) {
                const auto qs = profile(kd.centroids, q);
                double c = 0.0;
                for (std::size_t a = 0; a < ps.size(); ++a) {
                    const double diff = ps[a] - qs[a];
                    c += diff * diff;
                }
                cost.at(p, q) = c;
            }
        }
        const auto match = hungarian(cost);
        Tensor src_cents = ks.centroids;
        Tensor dst_cents = Tensor::zeros({n_clusters, d});
        for (std::size_t p = 0; p < n_clusters; ++p) {
            std::copy(kd.centroids.row_ptr(match[p]), kd.centroids.row_ptr(match[p]) + d,
                      dst_cents.row_ptr(p));
        }
        // Fewer centroids than dimensions leaves the map underdetermined;
        // take the orthogonal completion from the SVD, ICP refines it.
        Tensor cross = Tensor::zeros({d, d});
        kern::active().mm_ta_acc(cross.data.data(), src_cents.data.data(),
                                 dst_cents.data.data(), n_clusters, d, d);
        const Svd sv = svd_square(cross);
        hypotheses.push_back(mat_mul(sv.u, mat_transpose(sv.v)));
    }

    IcpResult best;
    best.residual = std::numeric_limits<double>::max();
    for (const Tensor& h : hypotheses) {
        const IcpResult r = icp_refine(y_src, y_dst, h);
        if (r.residual < best.residual) best = r;
    }
    return best.rotation;
}

}  // namespace glw
