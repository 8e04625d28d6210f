#include "stable_degen/linalg.hpp"

#include "stable_degen/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stable_degen {

Nullspace numerical_nullspace(const CMatrix& a, double relative_gap) {
    const Eigen::Index n = a.cols();
    Nullspace out;
    out.singular_values = RVector::Zero(n);
    if (a.rows() == 0) {
        out.basis = CMatrix::Identity(n, n);
        out.rank = 0;
        out.gap = std::numeric_limits<double>::infinity();
        return out;
    }
    Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullV);
    const RVector& s = svd.singularValues();
    out.singular_values.head(s.size()) = s;
    const RVector& sv = out.singular_values;
    int rank = static_cast<int>(n);
    out.gap = 0.0;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        if (sv[k] > 0.0 && sv[k + 1] <= sv[k] / relative_gap) {
            rank = static_cast<int>(k + 1);
            break;
        }
    }
    if (sv.size() > 0 && sv[0] == 0.0) rank = 0;
    out.rank = rank;
    if (rank > 0 && rank < n) {
        // Structural zeros (wide matrices) are measured at the machine-precision floor.
        const double floor = sv[0] * std::numeric_limits<double>::epsilon();
        out.gap = sv[rank - 1] / std::max(sv[rank], floor);
    } else {
        out.gap = rank == 0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    out.basis = svd.matrixV().rightCols(n - rank);
    return out;
}

void normalize_rows(CMatrix& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double nrm = a.row(i).norm();
        if (nrm > 0.0) a.row(i) /= nrm;
    }
}

CMatrix cholesky_whitening(const CMatrix& gram) {
    const Eigen::Index n = gram.rows();
    const CMatrix herm = 0.5 * (gram + gram.adjoint());
    Eigen::LLT<CMatrix> llt(herm);
    if (llt.info() != Eigen::Success) throw NumericalError("cholesky_whitening: Gram matrix is not positive definite");
    const CMatrix l = llt.matrixL();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(l(i, i).real() > 0.0)) throw NumericalError("cholesky_whitening: Gram matrix is not positive definite");
    // T = (L^*)^{-1}, upper triangular
    return l.adjoint().triangularView<Eigen::Upper>().solve(CMatrix::Identity(n, n));
}

double condition_number(const CMatrix& a) {
    Eigen::JacobiSVD<CMatrix> svd(a);
    const RVector& s = svd.singularValues();
    if (s.size() == 0) return 1.0;
    const double lo = s[s.size() - 1];
    return lo > 0.0 ? s[0] / lo : std::numeric_limits<double>::infinity();
}

double fs_distance(const CVector& a, const CVector& b) {
    // |b - <a,b> a| equals sqrt(1 - |<a,b>|^2) without cancellation near 0
    const CVector r = b - a * a.dot(b);
    return std::min(1.0, r.norm());
}

namespace {

CMatrix procrustes(const CMatrix& a, const CMatrix& b_phased) {
    // argmax_U Re tr(U^* B A^*) for unitary U: U = W V^* from B A^* = W S V^*
    const CMatrix m = b_phased * a.adjoint();
    Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

double rms_fs(const CMatrix& ua, const CMatrix& b) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < ua.cols(); ++i) {
        const double d = fs_distance(ua.col(i), b.col(i));
        acc += d * d;
    }
    return ua.cols() > 0 ? std::sqrt(acc / static_cast<double>(ua.cols())) : 0.0;
}

}  // namespace

Alignment unitary_align(const CMatrix& a, const CMatrix& b, int max_iterations, double stagnation) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ConfigError("unitary_align: clouds must have matching shapes");
    const Eigen::Index dim = a.rows();
    const Eigen::Index count = a.cols();
    Alignment out;
    {
        Eigen::JacobiSVD<CMatrix> svd(a);
        const RVector& s = svd.singularValues();
        Eigen::Index r = 0;
        for (Eigen::Index k = 0; k < s.size(); ++k)
            if (s[k] > 1e-10 * s[0]) ++r;
        out.degenerate = r < dim;
    }
    if (a == b) {
        out.unitary = CMatrix::Identity(dim, dim);
        return out;
    }

    // Initial phases from an anchor sample: in the exact case b_i = e^{i phi_i} U a_i,
    // so <b_k, b_i> / <a_k, a_i> recovers e^{i (phi_i - phi_k)}.
    Eigen::Index anchor = 0;
    double best = -1.0;
    for (Eigen::Index k = 0; k < count; ++k) {
        double worst = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < count; ++i) worst = std::min(worst, std::abs(a.col(k).dot(a.col(i))));
        if (worst > best) {
            best = worst;
            anchor = k;
        }
    }
    CMatrix b_phased = b;
    for (Eigen::Index i = 0; i < count; ++i) {
        const complex ga = a.col(anchor).dot(a.col(i));
        const complex gb = b.col(anchor).dot(b.col(i));
        if (std::abs(ga) > 1e-8 && std::abs(gb) > 1e-8) {
            const complex ph = (gb / std::abs(gb)) / (ga / std::abs(ga));
            b_phased.col(i) = b.col(i) * std::conj(ph);
        }
    }

    CMatrix u = procrustes(a, b_phased);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iterations; ++it) {
        out.iterations = it + 1;
        const CMatrix ua = u * a;
        for (Eigen::Index i = 0; i < count; ++i) {
            const complex c = b.col(i).dot(ua.col(i));  // <b_i, U a_i>
            const double ac = std::abs(c);
            b_phased.col(i) = ac > 0.0 ? CVector(b.col(i) * (c / ac)) : CVector(b.col(i));
        }
        u = procrustes(a, b_phased);
        double obj = 0.0;
        const CMatrix diff = u * a - b_phased;
        obj = diff.squaredNorm();
        if (std::abs(prev - obj) <= stagnation * std::max(1.0, obj)) break;
        prev = obj;
    }
    out.unitary = u;
    out.residual = rms_fs(u * a, b);
    return out;
}

RVector principal_cosines(const CMatrix& a, const CMatrix& b) {
    const Eigen::HouseholderQR<CMatrix> qa(a);
    const Eigen::HouseholderQR<CMatrix> qb(b);
    const CMatrix ua = qa.householderQ() * CMatrix::Identity(a.rows(), a.cols());
    const CMatrix ub = qb.householderQ() * CMatrix::Identity(b.rows(), b.cols());
    Eigen::JacobiSVD<CMatrix> svd(ua.adjoint() * ub);
    return svd.singularValues();
}

}  // namespace stable_degen
