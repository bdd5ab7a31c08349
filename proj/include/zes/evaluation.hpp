#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zes {

struct EvalRow {
    std::string image_id;
    double predicted = 0.0;
    double ground_truth = 0.0;
    double abs_error = 0.0;
};

struct ErrorSummary {
    std::size_t n = 0;
    double mae = 0.0;
    double rmse = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    ErrorSummary overall;
    // Ground-truth count terciles (rows sorted by ground truth, stable).
    ErrorSummary low;
    ErrorSummary med;
    ErrorSummary high;
};

struct Prediction {
    std::string image_id;
    double predicted = 0.0;
    double ground_truth = 0.0;
};

ErrorSummary summarize(const std::vector<EvalRow>& rows);

// Throws EmptyInputError for an empty list.
EvalReport evaluate(const std::vector<Prediction>& predictions);

// image_id,predicted,ground_truth,abs_error rows then "MAE,<v>,RMSE,<v>".
void write_metrics_csv(std::ostream& out, const EvalReport& report);
// Table-style line: "<label>  MAE <mae>  RMSE <rmse>" with two decimals.
std::string format_summary_row(const std::string& label, const ErrorSummary& s);

} // namespace zes
