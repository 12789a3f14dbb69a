#pragma once

#include <string>
#include <vector>

namespace packdet {

/// Plain-text table with padded columns, for the human-readable half of
/// every report.
struct TextTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

std::string render_table(const TextTable& t);

/// Machine-readable side of a report: one record per metric cell.
struct MetricRecord {
    std::string run_id;
    std::string family;
    std::string split;
    std::string metric;
    double value = 0.0;
};

void write_records_csv(const std::string& path, const std::vector<MetricRecord>& records);

std::string format_number(double v, int precision = 6);

} // namespace packdet
