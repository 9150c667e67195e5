#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

#include "miae/core/errors.hpp"
#include "miae/geometry/vec3.hpp"

namespace miae::geom {

namespace detail {

struct Superposition {
    Eigen::Matrix3d rot;
    Eigen::Vector3d src_centroid;
    Eigen::Vector3d dst_centroid;
};

// Optimal rigid map from a onto b: centroid removal, then the SVD rotation
// with reflection correction.
inline Superposition solve_superposition(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.size() != b.size()) throw ShapeError("kabsch: point count mismatch");
    if (a.empty()) throw ShapeError("kabsch: empty point sets");
    const std::size_t n = a.size();

    Eigen::Matrix3Xd p(3, n), q(3, n);
    for (std::size_t i = 0; i < n; ++i) {
        p.col(i) << a[i].x, a[i].y, a[i].z;
        q.col(i) << b[i].x, b[i].y, b[i].z;
    }
    Superposition s;
    s.src_centroid = p.rowwise().mean();
    s.dst_centroid = q.rowwise().mean();
    p.colwise() -= s.src_centroid;
    q.colwise() -= s.dst_centroid;

    const Eigen::Matrix3d h = p * q.transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double d = (svd.matrixV() * svd.matrixU().transpose()).determinant();
    Eigen::Matrix3d corr = Eigen::Matrix3d::Identity();
    corr(2, 2) = d < 0.0 ? -1.0 : 1.0;
    s.rot = svd.matrixV() * corr * svd.matrixU().transpose();
    return s;
}

} // namespace detail

// RMSD after optimal rigid superposition of a onto b.
inline double kabsch_rmsd(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    const auto s = detail::solve_superposition(a, b);
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Eigen::Vector3d pa(a[i].x, a[i].y, a[i].z);
        const Eigen::Vector3d pb(b[i].x, b[i].y, b[i].z);
        ss += (s.rot * (pa - s.src_centroid) + s.dst_centroid - pb).squaredNorm();
    }
    return std::sqrt(ss / static_cast<double>(a.size()));
}

// Copy of a rigidly mapped onto b by the optimal superposition.
inline std::vector<Vec3> kabsch_superpose(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    const auto s = detail::solve_superposition(a, b);
    std::vector<Vec3> out;
    out.reserve(a.size());
    for (const auto& v : a) {
        const Eigen::Vector3d p(v.x, v.y, v.z);
        const Eigen::Vector3d m = s.rot * (p - s.src_centroid) + s.dst_centroid;
        out.push_back({m.x(), m.y(), m.z()});
    }
    return out;
}

} // namespace miae::geom
