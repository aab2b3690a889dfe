// SPDX-License-Identifier: Apache-2.0
#include "kdnas/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace kdnas::analysis {

std::vector<CandidateRecord> pareto_front(const std::vector<CandidateRecord>& records) {
    if (records.empty()) throw EmptyInput("pareto_front needs at least one record");
    std::vector<std::size_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = records[a];
        const auto& rb = records[b];
        if (ra.latency_ms != rb.latency_ms) return ra.latency_ms < rb.latency_ms;
        if (ra.accuracy != rb.accuracy) return ra.accuracy > rb.accuracy;
        if (ra.generation != rb.generation) return ra.generation < rb.generation;
        return ra.candidate_index < rb.candidate_index;
    });
    std::vector<CandidateRecord> front;
    double best_acc = -std::numeric_limits<double>::infinity();
    double last_lat = std::numeric_limits<double>::quiet_NaN();
    double last_acc = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i : idx) {
        const auto& r = records[i];
        if (!front.empty() && r.latency_ms == last_lat && r.accuracy == last_acc) {
            continue;  // exact tie on both axes: earliest generation already kept
        }
        if (r.accuracy > best_acc) {
            front.push_back(r);
            best_acc = r.accuracy;
            last_lat = r.latency_ms;
            last_acc = r.accuracy;
        }
    }
    return front;
}

std::vector<CandidateRecord> select_top(const std::vector<CandidateRecord>& records, int k,
                                        double latency_lo, double latency_hi) {
    if (k < 1) throw ConfigError("select_top needs k >= 1");
    std::vector<CandidateRecord> in_window;
    for (const auto& r : records) {
        if (r.latency_ms >= latency_lo && r.latency_ms <= latency_hi) in_window.push_back(r);
    }
    std::sort(in_window.begin(), in_window.end(), [](const CandidateRecord& a, const CandidateRecord& b) {
        if (a.reward != b.reward) return a.reward > b.reward;
        if (a.generation != b.generation) return a.generation < b.generation;
        return a.candidate_index < b.candidate_index;
    });
    if (in_window.size() > static_cast<std::size_t>(k)) in_window.resize(static_cast<std::size_t>(k));
    return in_window;
}

OperatorProbability operator_probability(const std::vector<CandidateRecord>& records,
                                         const space::SearchSpaceDef& sp) {
    if (records.empty()) throw EmptyInput("operator_probability needs at least one record");
    const std::size_t E = static_cast<std::size_t>(sp.onehot_length());
    OperatorProbability out;
    out.probability.assign(E, 0.0);
    for (const auto& r : records) {
        if (r.onehot.bits.size() != E) {
            throw space::LengthMismatch(r.onehot.bits.size(), E);
        }
        for (std::size_t b = 0; b < E; ++b) out.probability[b] += r.onehot.bits[b] ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(records.size());
    out.stddev.resize(E);
    for (std::size_t b = 0; b < E; ++b) {
        out.probability[b] /= n;
        out.stddev[b] = std::sqrt(std::max(0.0, out.probability[b] * (1.0 - out.probability[b])));
    }
    return out;
}

FamilyDivergence family_divergence(const std::vector<CandidateRecord>& family_a,
                                   const std::vector<CandidateRecord>& family_b,
                                   const space::SearchSpaceDef& sp) {
    const auto pa = operator_probability(family_a, sp);
    const auto pb = operator_probability(family_b, sp);
    FamilyDivergence out;
    out.diff.resize(pa.probability.size());
    for (std::size_t b = 0; b < out.diff.size(); ++b) {
        out.diff[b] = pa.probability[b] - pb.probability[b];
    }
    out.order.resize(out.diff.size());
    std::iota(out.order.begin(), out.order.end(), 0);
    std::stable_sort(out.order.begin(), out.order.end(), [&](int x, int y) {
        return std::abs(out.diff[static_cast<std::size_t>(x)]) >
               std::abs(out.diff[static_cast<std::size_t>(y)]);
    });
    return out;
}

double relative_gain(double kd_akd, double cls_akd, double kd_nas, double cls_nas) {
    return (kd_akd - cls_akd) - (kd_nas - cls_nas);
}

WinStats winning_ratio(const std::vector<std::pair<double, double>>& pair_gains) {
    if (pair_gains.empty()) throw EmptyInput("winning_ratio needs at least one pair");
    WinStats stats;
    double gain_sum = 0.0;
    for (const auto& [akd, nas] : pair_gains) {
        if (!std::isfinite(akd) || !std::isfinite(nas)) {
            ++stats.excluded;
            continue;
        }
        ++stats.valid;
        if (akd > nas) ++stats.wins;
        gain_sum += akd - nas;
    }
    if (stats.valid == 0) throw EmptyInput("winning_ratio: no valid pairs after exclusions");
    stats.ratio = static_cast<double>(stats.wins) / static_cast<double>(stats.valid);
    stats.average_gain = gain_sum / static_cast<double>(stats.valid);
    return stats;
}

Projection project_2d(const std::vector<space::OneHotVector>& onehot_vectors) {
    if (onehot_vectors.size() < 3) throw ConfigError("project_2d needs at least 3 vectors");
    const std::size_t n = onehot_vectors.size();
    const std::size_t e = onehot_vectors.front().bits.size();
    for (const auto& v : onehot_vectors) {
        if (v.bits.size() != e) throw space::LengthMismatch(v.bits.size(), e);
    }
    bool all_identical = true;
    for (std::size_t i = 1; i < n && all_identical; ++i) {
        all_identical = onehot_vectors[i] == onehot_vectors[0];
    }
    if (all_identical) throw DegenerateInput("project_2d: all vectors identical");
    if (e < 2) throw DegenerateInput("project_2d needs at least 2 coordinates");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(e));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < e; ++j) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                onehot_vectors[i].bits[j] ? 1.0 : 0.0;
        }
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
    // Eigen returns ascending eigenvalues; take the last two.
    const Eigen::Index last = static_cast<Eigen::Index>(e) - 1;
    Eigen::VectorXd pc1 = solver.eigenvectors().col(last);
    Eigen::VectorXd pc2 = solver.eigenvectors().col(last - 1);
    auto fix_sign = [](Eigen::VectorXd& v) {
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
    };
    fix_sign(pc1);
    fix_sign(pc2);

    Projection out;
    out.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.points[i] = {x.row(static_cast<Eigen::Index>(i)).dot(pc1),
                         x.row(static_cast<Eigen::Index>(i)).dot(pc2)};
    }
    const double total = std::max(solver.eigenvalues().sum(), 1e-300);
    out.explained_variance = {solver.eigenvalues()(last) / total,
                              solver.eigenvalues()(last - 1) / total};
    return out;
}

namespace {

std::vector<double> centroid(const std::vector<space::OneHotVector>& family) {
    const std::size_t e = family.front().bits.size();
    std::vector<double> c(e, 0.0);
    for (const auto& v : family) {
        if (v.bits.size() != e) throw space::LengthMismatch(v.bits.size(), e);
        for (std::size_t j = 0; j < e; ++j) c[j] += v.bits[j] ? 1.0 : 0.0;
    }
    for (auto& x : c) x /= static_cast<double>(family.size());
    return c;
}

double mean_distance_to(const std::vector<space::OneHotVector>& family,
                        const std::vector<double>& center) {
    double sum = 0.0;
    for (const auto& v : family) {
        double sq = 0.0;
        for (std::size_t j = 0; j < center.size(); ++j) {
            const double d = (v.bits[j] ? 1.0 : 0.0) - center[j];
            sq += d * d;
        }
        sum += std::sqrt(sq);
    }
    return sum / static_cast<double>(family.size());
}

}  // namespace

SeparationStats centroid_separation(const std::vector<space::OneHotVector>& family_a,
                                    const std::vector<space::OneHotVector>& family_b) {
    if (family_a.size() < 2 || family_b.size() < 2) {
        throw TooFewMembers("centroid_separation needs >= 2 members per family");
    }
    const auto ca = centroid(family_a);
    const auto cb = centroid(family_b);
    if (ca.size() != cb.size()) throw space::LengthMismatch(cb.size(), ca.size());
    SeparationStats stats;
    double sq = 0.0;
    for (std::size_t j = 0; j < ca.size(); ++j) sq += (ca[j] - cb[j]) * (ca[j] - cb[j]);
    stats.inter = std::sqrt(sq);
    stats.intra_a = mean_distance_to(family_a, ca);
    stats.intra_b = mean_distance_to(family_b, cb);
    const double intra = 0.5 * (stats.intra_a + stats.intra_b);
    if (stats.inter == 0.0) {
        stats.ratio = 0.0;
    } else if (intra == 0.0) {
        stats.ratio = std::numeric_limits<double>::infinity();
    } else {
        stats.ratio = stats.inter / intra;
    }
    return stats;
}

std::vector<std::vector<double>> distribution_divergence(
    const std::vector<std::vector<double>>& dist_list) {
    if (dist_list.empty()) throw EmptyInput("distribution_divergence needs input");
    const std::size_t n = dist_list.size();
    const std::size_t k = dist_list.front().size();
    for (const auto& p : dist_list) {
        if (p.size() != k) throw space::LengthMismatch(p.size(), k);
        double sum = 0.0;
        for (double v : p) {
            if (v < 0.0) throw NotNormalized("probabilities must be >= 0");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw NotNormalized("probability vector does not sum to 1");
    }
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double kl = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                const double p = dist_list[i][c];
                if (p > 0.0) kl += p * std::log(p / std::max(dist_list[j][c], 1e-12));
            }
            m[i][j] = kl;
        }
    }
    return m;
}

}  // namespace kdnas::analysis
