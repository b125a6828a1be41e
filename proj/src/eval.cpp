#include "aesad/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

namespace aesad {

namespace {

struct ClassCounts {
    std::uint64_t positives = 0;
    std::uint64_t negatives = 0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("auc: scores and labels differ in length");
    ClassCounts counts;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1) ++counts.positives;
        else if (labels[i] == 0) ++counts.negatives;
        else throw std::invalid_argument("auc: label outside {0,1}");
        if (std::isnan(scores[i])) throw std::invalid_argument("auc: NaN score");
    }
    if (counts.positives == 0 || counts.negatives == 0) {
        throw std::invalid_argument("auc: both labels must be present");
    }
    return counts;
}

// Both routes compute twice the Mann-Whitney U as an integer, so they agree
// to the last bit after the same final division.
double finish(std::uint64_t twice_u, const ClassCounts& c) {
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(c.positives) * static_cast<double>(c.negatives));
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
    const ClassCounts counts = check_inputs(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Tied block occupying ranks i+1..j shares average rank (i+1+j)/2; doubled: i+1+j.
    std::uint64_t twice_rank_sum = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const std::uint64_t twice_rank = i + 1 + j;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) twice_rank_sum += twice_rank;
        }
        i = j;
    }
    const std::uint64_t p = counts.positives;
    return finish(twice_rank_sum - p * (p + 1), counts);
}

double auc_bruteforce(std::span<const double> scores, std::span<const int> labels) {
    const ClassCounts counts = check_inputs(scores, labels);
    std::uint64_t twice_u = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j]) twice_u += 2;
            else if (scores[i] == scores[j]) twice_u += 1;
        }
    }
    return finish(twice_u, counts);
}

std::map<int, double> per_class_auc(std::span<const double> scores, std::span<const int> class_ids,
                                    std::span<const int> normal_classes) {
    if (scores.size() != class_ids.size()) throw std::invalid_argument("per_class_auc: length mismatch");
    const std::set<int> normal(normal_classes.begin(), normal_classes.end());
    std::set<int> anomalous;
    std::vector<double> normal_scores;
    for (std::size_t i = 0; i < class_ids.size(); ++i) {
        if (normal.count(class_ids[i])) normal_scores.push_back(scores[i]);
        else anomalous.insert(class_ids[i]);
    }
    if (normal_scores.empty()) throw std::invalid_argument("per_class_auc: no rows of the normal classes");

    std::map<int, double> out;
    for (int c : anomalous) {
        std::vector<double> s = normal_scores;
        std::vector<int> y(normal_scores.size(), 0);
        for (std::size_t i = 0; i < class_ids.size(); ++i) {
            if (class_ids[i] == c) {
                s.push_back(scores[i]);
                y.push_back(1);
            }
        }
        out[c] = auc(s, y);
    }
    return out;
}

RunStats aggregate_runs(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("aggregate_runs: no values");
    RunStats st;
    st.count = values.size();
    st.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - st.mean) * (v - st.mean);
        st.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return st;
}

double win_probability(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("win_probability: paired lists differ in length");
    if (a.empty()) throw std::invalid_argument("win_probability: no pairs");
    std::size_t wins = 0;
    for (std::size_t i = 0; i < a.size(); ++i) wins += a[i] > b[i] ? 1 : 0;
    return static_cast<double>(wins) / static_cast<double>(a.size());
}

WinMatrix win_matrix(const std::vector<std::string>& methods, const std::vector<std::vector<double>>& paired_aucs) {
    if (methods.size() != paired_aucs.size()) throw std::invalid_argument("win_matrix: one AUC list per method");
    WinMatrix m;
    m.methods = methods;
    const std::size_t k = methods.size();
    m.p.assign(k, std::vector<double>(k, std::numeric_limits<double>::quiet_NaN()));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i != j) m.p[i][j] = win_probability(paired_aucs[i], paired_aucs[j]);
        }
    }
    return m;
}

std::string format_real(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void write_report(std::ostream& out, const EvalReport& report) {
    out << "method: " << report.method << '\n';
    out << "auc: " << format_real(report.overall_auc) << '\n';
    if (!report.per_class.empty()) {
        out << "per_class_auc:\n";
        for (const auto& [c, v] : report.per_class) out << "  " << c << ": " << format_real(v) << '\n';
    }
    if (!report.config.empty()) {
        out << "config:\n";
        for (const auto& [k, v] : report.config) out << "  " << k << ": " << v << '\n';
    }
}

void write_per_class_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
    std::set<int> classes;
    for (const auto& r : reports) {
        for (const auto& [c, v] : r.per_class) classes.insert(c);
    }
    out << "class";
    for (const auto& r : reports) out << ',' << r.method;
    out << '\n';
    for (int c : classes) {
        out << c;
        for (const auto& r : reports) {
            out << ',';
            if (auto it = r.per_class.find(c); it != r.per_class.end()) out << format_real(it->second);
        }
        out << '\n';
    }
    out << "overall";
    for (const auto& r : reports) out << ',' << format_real(r.overall_auc);
    out << '\n';
}

void write_win_matrix_csv(std::ostream& out, const WinMatrix& matrix) {
    out << "method";
    for (const auto& m : matrix.methods) out << ',' << m;
    out << '\n';
    for (std::size_t i = 0; i < matrix.methods.size(); ++i) {
        out << matrix.methods[i];
        for (std::size_t j = 0; j < matrix.methods.size(); ++j) {
            out << ',';
            if (i != j) out << format_real(matrix.p[i][j]);
        }
        out << '\n';
    }
}

}  // namespace aesad
