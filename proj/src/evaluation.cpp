#include "zes/evaluation.hpp"

#include "zes/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

namespace zes {

ErrorSummary summarize(const std::vector<EvalRow>& rows)
{
    ErrorSummary s;
    s.n = rows.size();
    if (rows.empty()) {
        return s;
    }
    double abs_sum = 0.0, sq_sum = 0.0;
    for (const auto& r : rows) {
        const double e = r.predicted - r.ground_truth;
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    s.mae = abs_sum / static_cast<double>(rows.size());
    s.rmse = std::sqrt(sq_sum / static_cast<double>(rows.size()));
    return s;
}

EvalReport evaluate(const std::vector<Prediction>& predictions)
{
    if (predictions.empty()) {
        throw EmptyInputError("evaluate needs at least one prediction");
    }
    EvalReport report;
    for (const auto& p : predictions) {
        report.rows.push_back({p.image_id, p.predicted, p.ground_truth, std::abs(p.predicted - p.ground_truth)});
    }
    report.overall = summarize(report.rows);

    std::vector<std::size_t> order(report.rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return report.rows[a].ground_truth < report.rows[b].ground_truth;
    });
    const std::size_t n = order.size();
    ErrorSummary* splits[] = {&report.low, &report.med, &report.high};
    for (std::size_t t = 0; t < 3; ++t) {
        std::vector<EvalRow> part;
        for (std::size_t i = t * n / 3; i < (t + 1) * n / 3; ++i) {
            part.push_back(report.rows[order[i]]);
        }
        *splits[t] = summarize(part);
    }
    return report;
}

void write_metrics_csv(std::ostream& out, const EvalReport& report)
{
    out << "image_id,predicted,ground_truth,abs_error\n";
    for (const auto& r : report.rows) {
        out << fmt::format("{},{:.6f},{:.6f},{:.6f}\n", r.image_id, r.predicted, r.ground_truth, r.abs_error);
    }
    out << fmt::format("MAE,{:.6f},RMSE,{:.6f}\n", report.overall.mae, report.overall.rmse);
}

std::string format_summary_row(const std::string& label, const ErrorSummary& s)
{
    return fmt::format("{:<24} MAE {:>8.2f}  RMSE {:>8.2f}", label, s.mae, s.rmse);
}

} // namespace zes
