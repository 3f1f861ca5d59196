#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "trendlab/common.hpp"

namespace trendlab {

/// Streaming least squares via blocked Householder QR: rows arrive in blocks,
/// the compact R factor and Q'y are updated by refactoring [R ; X_block].
/// Numerically this is the orthogonal route (no X'X squaring of the condition
/// number) at O(p^2) memory regardless of row count.
class StreamingQr {
public:
    explicit StreamingQr(std::size_t p, std::size_t block_rows = 8192)
        : p_(p), block_(block_rows), r_(Eigen::MatrixXd::Zero(p, p)),
          qty_(Eigen::VectorXd::Zero(p)) {
        x_buf_.resize(block_ + p_, p_);
        y_buf_.resize(block_ + p_);
    }

    void add_row(const double* x, double y) {
        for (std::size_t j = 0; j < p_; ++j) x_buf_(static_cast<Eigen::Index>(filled_), j) = x[j];
        y_buf_(static_cast<Eigen::Index>(filled_)) = y;
        ++filled_;
        yty_ += y * y;
        sum_y_ += y;
        ++n_;
        if (filled_ == block_) flush();
    }

    std::size_t rows() const { return n_; }
    double yty() const { return yty_; }
    double mean_y() const { return n_ ? sum_y_ / static_cast<double>(n_) : 0.0; }

    /// Total sum of squares around the mean of y.
    double sst() const { return yty_ - static_cast<double>(n_) * mean_y() * mean_y(); }

    /// Solves for the coefficients; throws SingularFitError naming the first
    /// rank-deficient column. `names` supplies the feature labels.
    Eigen::VectorXd solve(const std::vector<std::string>& names) {
        flush();
        double max_diag = 0.0;
        for (std::size_t j = 0; j < p_; ++j)
            max_diag = std::max(max_diag, std::abs(r_(j, j)));
        for (std::size_t j = 0; j < p_; ++j) {
            if (std::abs(r_(j, j)) <= 1e-10 * std::max(max_diag, 1e-300))
                throw SingularFitError(j < names.size() ? names[j] : std::to_string(j));
        }
        return r_.triangularView<Eigen::Upper>().solve(qty_);
    }

    /// Residual sum of squares: y'y - (Q'y)'(Q'y), clamped at 0.
    double sse() {
        flush();
        return std::max(0.0, yty_ - qty_.squaredNorm());
    }

private:
    void flush() {
        if (filled_ == 0) return;
        Eigen::Index m = static_cast<Eigen::Index>(p_ + filled_);
        Eigen::MatrixXd stacked(m, p_);
        stacked.topRows(static_cast<Eigen::Index>(p_)) = r_;
        stacked.bottomRows(static_cast<Eigen::Index>(filled_)) =
            x_buf_.topRows(static_cast<Eigen::Index>(filled_));
        Eigen::VectorXd rhs(m);
        rhs.head(static_cast<Eigen::Index>(p_)) = qty_;
        rhs.tail(static_cast<Eigen::Index>(filled_)) =
            y_buf_.head(static_cast<Eigen::Index>(filled_));
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
        Eigen::VectorXd qtb = qr.householderQ().adjoint() * rhs;
        r_ = qr.matrixQR().topRows(static_cast<Eigen::Index>(p_)).triangularView<Eigen::Upper>();
        qty_ = qtb.head(static_cast<Eigen::Index>(p_));
        filled_ = 0;
    }

    std::size_t p_;
    std::size_t block_;
    std::size_t filled_ = 0;
    std::size_t n_ = 0;
    double yty_ = 0.0;
    double sum_y_ = 0.0;
    Eigen::MatrixXd r_;
    Eigen::VectorXd qty_;
    Eigen::MatrixXd x_buf_;
    Eigen::VectorXd y_buf_;
};

/// Symmetric-packed normal-equation accumulator (X'X, X'y, y'y, n). This is
/// the per-day sufficient statistic the day bootstrap resamples; replicates
/// then cost O(days * p^2) instead of a full refit.
struct NormalEq {
    std::size_t p = 0;
    std::vector<double> xtx;  // upper triangle, row-major packed
    std::vector<double> xty;
    double yty = 0.0;
    double n = 0.0;

    NormalEq() = default;
    explicit NormalEq(std::size_t p_) : p(p_), xtx(p_ * (p_ + 1) / 2, 0.0), xty(p_, 0.0) {}

    void add_row(const double* x, double y, double w = 1.0) {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < p; ++i) {
            double wxi = w * x[i];
            for (std::size_t j = i; j < p; ++j) xtx[idx++] += wxi * x[j];
            xty[i] += wxi * y;
        }
        yty += w * y * y;
        n += w;
    }

    void add(const NormalEq& other, double mult = 1.0) {
        for (std::size_t i = 0; i < xtx.size(); ++i) xtx[i] += mult * other.xtx[i];
        for (std::size_t i = 0; i < p; ++i) xty[i] += mult * other.xty[i];
        yty += mult * other.yty;
        n += mult * other.n;
    }

    void clear() {
        std::fill(xtx.begin(), xtx.end(), 0.0);
        std::fill(xty.begin(), xty.end(), 0.0);
        yty = 0.0;
        n = 0.0;
    }

    /// LDLT solve of the normal equations; returns false if not solvable.
    bool solve(Eigen::VectorXd& beta) const {
        Eigen::MatrixXd a(p, p);
        std::size_t idx = 0;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i; j < p; ++j) {
                a(i, j) = xtx[idx];
                a(j, i) = xtx[idx];
                ++idx;
            }
        Eigen::VectorXd b(p);
        for (std::size_t i = 0; i < p; ++i) b(i) = xty[i];
        Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
        if (ldlt.info() != Eigen::Success) return false;
        beta = ldlt.solve(b);
        return beta.allFinite();
    }
};

}  // namespace trendlab
