#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace aesad {

// P(score_anomaly > score_normal) + 1/2 P(tie), from average ranks.
double auc(std::span<const double> scores, std::span<const int> labels);

// Same quantity by enumerating every (anomaly, normal) pair. O(n^2) oracle.
double auc_bruteforce(std::span<const double> scores, std::span<const int> labels);

// For each class outside normal_classes: auc over rows of the normal classes
// plus rows of that class. Labels are derived from class membership.
std::map<int, double> per_class_auc(std::span<const double> scores, std::span<const int> class_ids,
                                    std::span<const int> normal_classes);

struct RunStats {
    double mean = 0.0;
    double std = 0.0;  // sample std (n - 1); 0 for a single run
    std::size_t count = 0;
};

RunStats aggregate_runs(std::span<const double> values);

// Fraction of paired runs where a strictly beats b.
double win_probability(std::span<const double> a, std::span<const double> b);

// Square matrix of win_probability(row method, column method); the
// diagonal is NaN and written blank.
struct WinMatrix {
    std::vector<std::string> methods;
    std::vector<std::vector<double>> p;
};

WinMatrix win_matrix(const std::vector<std::string>& methods, const std::vector<std::vector<double>>& paired_aucs);

struct EvalReport {
    std::string method;
    double overall_auc = 0.0;
    std::map<int, double> per_class;
    std::map<std::string, std::string> config;
};

void write_report(std::ostream& out, const EvalReport& report);
void write_per_class_csv(std::ostream& out, const std::vector<EvalReport>& reports);
void write_win_matrix_csv(std::ostream& out, const WinMatrix& matrix);

// Shortest round-trip decimal representation.
std::string format_real(double v);

}  // namespace aesad
