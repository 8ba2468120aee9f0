#pragma once

#include <cstdint>
#include <vector>

#include "giglite/model.h"

namespace giglite {

// Each loss returns its value and, for every non-null output pointer, writes the
// gradient with respect to the matching input (same shape as that input).

/// Mean over rows of max(0, gamma - <a,p> + <a,n>).
template <typename T>
T margin_loss(const Mat<T>& anchors, const Mat<T>& positives, const Mat<T>& negatives, T gamma,
              Mat<T>* d_anchors = nullptr, Mat<T>* d_positives = nullptr, Mat<T>* d_negatives = nullptr);

/// In-batch softmax: logits_ij = <a_i, c_j> / tau over all candidate rows, target j = i.
/// `candidates` has at least as many rows as `anchors`; extra rows act as shared negatives.
template <typename T>
T retrieval_loss(const Mat<T>& anchors, const Mat<T>& candidates, T tau, Mat<T>* d_anchors = nullptr,
                 Mat<T>* d_candidates = nullptr);

/// Mean squared error of (embeddings * w + b) against features, averaged over all entries.
template <typename T>
T feature_reconstruction_loss(const Mat<T>& embeddings, const Mat<T>& features, const Mat<T>& w, const Mat<T>& b,
                              Mat<T>* d_embeddings = nullptr, Mat<T>* d_w = nullptr, Mat<T>* d_b = nullptr);

/// Columns standardized over rows (population variance + eps); C = Z^T Z / N;
/// sum_i (1 - C_ii)^2 + lambda * sum_{i != j} C_ij^2.
template <typename T>
T whitening_decorrelation_loss(const Mat<T>& embeddings, T lambda, Mat<T>* d_embeddings = nullptr, T eps = T(1e-9));

/// Mean cross-entropy of softmax(embeddings * w + b) against integer labels.
template <typename T>
T classification_loss(const Mat<T>& embeddings, const std::vector<int64_t>& labels, const Mat<T>& w, const Mat<T>& b,
                      Mat<T>* d_embeddings = nullptr, Mat<T>* d_w = nullptr, Mat<T>* d_b = nullptr);

}  // namespace giglite
