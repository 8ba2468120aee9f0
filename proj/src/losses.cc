#include "giglite/losses.h"

#include <cmath>

#include "giglite/error.h"

namespace giglite {

namespace {

// Mean row-wise softmax cross-entropy; `d_logits` receives (softmax - onehot) / rows.
template <typename T>
T softmax_xent(const Mat<T>& logits, const std::vector<Eigen::Index>& targets, Mat<T>* d_logits) {
    const Eigen::Index rows = logits.rows();
    T total = 0;
    if (d_logits) d_logits->resize(rows, logits.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
        const T peak = logits.row(i).maxCoeff();
        const auto shifted = (logits.row(i).array() - peak).matrix();
        const T log_z = std::log(shifted.array().exp().sum());
        total += log_z - shifted(targets[i]);
        if (d_logits) {
            d_logits->row(i) = (shifted.array() - log_z).exp().matrix() / static_cast<T>(rows);
            (*d_logits)(i, targets[i]) -= T(1) / static_cast<T>(rows);
        }
    }
    return rows ? total / static_cast<T>(rows) : T(0);
}

}  // namespace

template <typename T>
T margin_loss(const Mat<T>& a, const Mat<T>& p, const Mat<T>& n, T gamma, Mat<T>* da, Mat<T>* dp, Mat<T>* dn) {
    if (a.rows() != p.rows() || a.rows() != n.rows()) {
        throw ConfigError("margin_loss: anchor/positive/negative row counts differ");
    }
    const Eigen::Index rows = a.rows();
    if (da) da->setZero(a.rows(), a.cols());
    if (dp) dp->setZero(p.rows(), p.cols());
    if (dn) dn->setZero(n.rows(), n.cols());
    T total = 0;
    const T scale = rows ? T(1) / static_cast<T>(rows) : T(0);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const T h = gamma - a.row(i).dot(p.row(i)) + a.row(i).dot(n.row(i));
        if (h <= T(0)) continue;
        total += h;
        if (da) da->row(i) = scale * (n.row(i) - p.row(i));
        if (dp) dp->row(i) = -scale * a.row(i);
        if (dn) dn->row(i) = scale * a.row(i);
    }
    return total * scale;
}

template <typename T>
T retrieval_loss(const Mat<T>& a, const Mat<T>& c, T tau, Mat<T>* da, Mat<T>* dc) {
    if (c.rows() < a.rows()) throw ConfigError("retrieval_loss: fewer candidates than anchors");
    const Mat<T> logits = (a * c.transpose()) / tau;
    std::vector<Eigen::Index> targets(static_cast<size_t>(a.rows()));
    for (size_t i = 0; i < targets.size(); ++i) targets[i] = static_cast<Eigen::Index>(i);
    Mat<T> dl;
    const T loss = softmax_xent(logits, targets, (da || dc) ? &dl : nullptr);
    if (da) *da = dl * c / tau;
    if (dc) *dc = dl.transpose() * a / tau;
    return loss;
}

template <typename T>
T feature_reconstruction_loss(const Mat<T>& e, const Mat<T>& x, const Mat<T>& w, const Mat<T>& b, Mat<T>* de,
                              Mat<T>* dw, Mat<T>* db) {
    Mat<T> r = e * w;
    r.rowwise() += b.row(0);
    r -= x;
    const T count = static_cast<T>(r.size());
    if (count == T(0)) {
        if (de) de->setZero(e.rows(), e.cols());
        if (dw) dw->setZero(w.rows(), w.cols());
        if (db) db->setZero(b.rows(), b.cols());
        return T(0);
    }
    const T loss = r.squaredNorm() / count;
    const Mat<T> dr = (T(2) / count) * r;
    if (de) *de = dr * w.transpose();
    if (dw) *dw = e.transpose() * dr;
    if (db) *db = dr.colwise().sum();
    return loss;
}

template <typename T>
T whitening_decorrelation_loss(const Mat<T>& e, T lambda, Mat<T>* de, T eps) {
    const Eigen::Index rows = e.rows(), cols = e.cols();
    if (rows == 0) {
        if (de) de->setZero(rows, cols);
        return T(0);
    }
    const T n = static_cast<T>(rows);
    Mat<T> z = e;
    std::vector<T> sigma(static_cast<size_t>(cols));
    for (Eigen::Index j = 0; j < cols; ++j) {
        const T mean = z.col(j).mean();
        z.col(j).array() -= mean;
        sigma[j] = std::sqrt(z.col(j).squaredNorm() / n + eps);
        z.col(j) /= sigma[j];
    }
    const Mat<T> corr = z.transpose() * z / n;
    T loss = 0;
    Mat<T> d_corr(cols, cols);
    for (Eigen::Index i = 0; i < cols; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (i == j) {
                loss += (T(1) - corr(i, i)) * (T(1) - corr(i, i));
                d_corr(i, i) = -T(2) * (T(1) - corr(i, i));
            } else {
                loss += lambda * corr(i, j) * corr(i, j);
                d_corr(i, j) = T(2) * lambda * corr(i, j);
            }
        }
    }
    if (de) {
        const Mat<T> dz = z * (d_corr + d_corr.transpose()) / n;
        de->resize(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            const T mean_dz = dz.col(j).mean();
            const T mean_dz_z = dz.col(j).dot(z.col(j)) / n;
            de->col(j) = (dz.col(j).array() - mean_dz - z.col(j).array() * mean_dz_z).matrix() / sigma[j];
        }
    }
    return loss;
}

template <typename T>
T classification_loss(const Mat<T>& e, const std::vector<int64_t>& labels, const Mat<T>& w, const Mat<T>& b,
                      Mat<T>* de, Mat<T>* dw, Mat<T>* db) {
    if (static_cast<Eigen::Index>(labels.size()) != e.rows()) {
        throw ConfigError("classification_loss: label count differs from embedding rows");
    }
    Mat<T> logits = e * w;
    logits.rowwise() += b.row(0);
    std::vector<Eigen::Index> targets;
    for (int64_t y : labels) {
        if (y < 0 || y >= w.cols()) {
            throw ConfigError("classification_loss: label " + std::to_string(y) + " outside [0, " +
                              std::to_string(w.cols()) + ")");
        }
        targets.push_back(static_cast<Eigen::Index>(y));
    }
    Mat<T> dl;
    const T loss = softmax_xent(logits, targets, &dl);
    if (de) *de = dl * w.transpose();
    if (dw) *dw = e.transpose() * dl;
    if (db) *db = dl.colwise().sum();
    return loss;
}

#define GIGLITE_INSTANTIATE(T)                                                                                       \
    template T margin_loss<T>(const Mat<T>&, const Mat<T>&, const Mat<T>&, T, Mat<T>*, Mat<T>*, Mat<T>*);           \
    template T retrieval_loss<T>(const Mat<T>&, const Mat<T>&, T, Mat<T>*, Mat<T>*);                                \
    template T feature_reconstruction_loss<T>(const Mat<T>&, const Mat<T>&, const Mat<T>&, const Mat<T>&, Mat<T>*, \
                                              Mat<T>*, Mat<T>*);                                                    \
    template T whitening_decorrelation_loss<T>(const Mat<T>&, T, Mat<T>*, T);                                       \
    template T classification_loss<T>(const Mat<T>&, const std::vector<int64_t>&, const Mat<T>&, const Mat<T>&,   \
                                      Mat<T>*, Mat<T>*, Mat<T>*);

GIGLITE_INSTANTIATE(float)
GIGLITE_INSTANTIATE(double)

#undef GIGLITE_INSTANTIATE

}  // namespace giglite
