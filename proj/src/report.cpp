#include "packdet/report.hpp"

#include "packdet/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace packdet {

std::string render_table(const TextTable& t) {
    std::vector<size_t> width(t.header.size(), 0);
    auto widen = [&](const std::vector<std::string>& row) {
        for (size_t c = 0; c < row.size() && c < width.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    };
    widen(t.header);
    for (const auto& row : t.rows) widen(row);

    std::string out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (size_t c = 0; c < width.size(); ++c) {
            const std::string& cell = c < row.size() ? row[c] : std::string();
            out += cell;
            if (c + 1 < width.size()) out.append(width[c] - cell.size() + 2, ' ');
        }
        out += '\n';
    };
    emit(t.header);
    size_t total = 0;
    for (size_t w : width) total += w + 2;
    out.append(total > 2 ? total - 2 : total, '-');
    out += '\n';
    for (const auto& row : t.rows) emit(row);
    return out;
}

void write_records_csv(const std::string& path, const std::vector<MetricRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::bad_argument, "cannot write records: " + path);
    out << "run_id,family,split,metric,value\n";
    for (const MetricRecord& r : records) {
        out << r.run_id << ',' << r.family << ',' << r.split << ',' << r.metric << ','
            << format_number(r.value, 12) << '\n';
    }
}

std::string format_number(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

} // namespace packdet
