#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "btpilot/eval/eval.hpp"

namespace btp::eval {

namespace {

constexpr const char* kCsvHeader = "id,robot,eta_cog,eta_disp,eta_exec,sigma,L_cog,L_disp,L_exec,L_total,details";

double round_to(double v, double scale) { return std::round(v * scale) / scale; }

std::optional<double> round_opt(const std::optional<double>& v, double scale) {
    if (!v) return std::nullopt;
    return round_to(*v, scale);
}

std::string fmt(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string fmt(const std::optional<double>& v, int decimals) { return v ? fmt(*v, decimals) : std::string("-"); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw std::invalid_argument("unterminated quote in CSV line");
    out.push_back(std::move(cur));
    return out;
}

std::optional<double> parse_cell(const std::string& s) {
    if (s == "-") return std::nullopt;
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
}

std::optional<double> column_mean(const std::vector<ReportRow>& rows, std::optional<double> ReportRow::*field) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows) {
        if (r.*field) {
            sum += *(r.*field);
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

}  // namespace

ReportRow to_row(const ScenarioReport& r) {
    ReportRow row;
    row.id = r.id;
    row.robot = r.robot;
    row.eta_cog = round_opt(r.eta_cog, 1e4);
    row.eta_disp = round_opt(r.eta_disp, 1e4);
    row.eta_exec = round_opt(r.eta_exec, 1e4);
    row.sigma = round_to(r.sigma, 1e4);
    row.l_cog = round_opt(r.latency.cog, 10);
    row.l_disp = round_opt(r.latency.disp, 10);
    row.l_exec = round_opt(r.latency.exec, 10);
    row.l_total = round_to(r.latency.total, 10);
    row.details = r.details;
    return row;
}

ReportRow average_row(const std::vector<ReportRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("no rows to average");
    ReportRow a;
    a.id = "Avg.";
    a.robot = "any";
    a.eta_cog = round_opt(column_mean(rows, &ReportRow::eta_cog), 1e4);
    a.eta_disp = round_opt(column_mean(rows, &ReportRow::eta_disp), 1e4);
    a.eta_exec = round_opt(column_mean(rows, &ReportRow::eta_exec), 1e4);
    double s = 0.0;
    double t = 0.0;
    for (const auto& r : rows) {
        s += r.sigma;
        t += r.l_total;
    }
    a.sigma = round_to(s / static_cast<double>(rows.size()), 1e4);
    a.l_cog = round_opt(column_mean(rows, &ReportRow::l_cog), 10);
    a.l_disp = round_opt(column_mean(rows, &ReportRow::l_disp), 10);
    a.l_exec = round_opt(column_mean(rows, &ReportRow::l_exec), 10);
    a.l_total = round_to(t / static_cast<double>(rows.size()), 10);
    return a;
}

std::string to_csv(const std::vector<ReportRow>& rows) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : rows) {
        out += csv_field(r.id) + "," + csv_field(r.robot) + "," + fmt(r.eta_cog, 4) + "," + fmt(r.eta_disp, 4) + "," +
               fmt(r.eta_exec, 4) + "," + fmt(r.sigma, 4) + "," + fmt(r.l_cog, 1) + "," + fmt(r.l_disp, 1) + "," +
               fmt(r.l_exec, 1) + "," + fmt(r.l_total, 1) + "," + csv_field(r.details) + "\n";
    }
    return out;
}

std::vector<ReportRow> rows_from_csv(std::string_view text) {
    std::vector<ReportRow> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("unexpected CSV header");
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 11) throw std::invalid_argument("CSV line " + std::to_string(n) + ": expected 11 fields");
        ReportRow r;
        r.id = f[0];
        r.robot = f[1];
        r.eta_cog = parse_cell(f[2]);
        r.eta_disp = parse_cell(f[3]);
        r.eta_exec = parse_cell(f[4]);
        auto sigma = parse_cell(f[5]);
        if (!sigma) throw std::invalid_argument("CSV line " + std::to_string(n) + ": sigma missing");
        r.sigma = *sigma;
        r.l_cog = parse_cell(f[6]);
        r.l_disp = parse_cell(f[7]);
        r.l_exec = parse_cell(f[8]);
        auto total = parse_cell(f[9]);
        if (!total) throw std::invalid_argument("CSV line " + std::to_string(n) + ": L_total missing");
        r.l_total = *total;
        r.details = f[10];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string to_table(const std::vector<ReportRow>& rows) {
    const std::vector<std::string> head{"#", "Robot", "eta_cog", "eta_disp", "eta_exec", "sigma",
                                        "L_cog", "L_disp", "L_exec", "L_total", "Details"};
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows) {
        cells.push_back({r.id, r.robot, fmt(r.eta_cog, 2), fmt(r.eta_disp, 2), fmt(r.eta_exec, 2), fmt(r.sigma, 2),
                         fmt(r.l_cog, 0), fmt(r.l_disp, 0), fmt(r.l_exec, 0), fmt(r.l_total, 0), r.details});
    }
    std::vector<std::size_t> width(head.size());
    for (std::size_t c = 0; c < head.size(); ++c) {
        width[c] = head[c].size();
        for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
    }
    auto line = [&](const std::vector<std::string>& row) {
        std::string out;
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::string cell = row[c];
            if (c + 1 < row.size()) cell.resize(width[c], ' ');
            out += cell;
            if (c + 1 < row.size()) out += " | ";
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + "\n";
    };
    std::string rule;
    for (std::size_t c = 0; c < head.size(); ++c) {
        rule += std::string(width[c], '-');
        if (c + 1 < head.size()) rule += "-+-";
    }
    rule += "\n";
    std::string out = line(head) + rule;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i + 1 == cells.size() && rows[i].id == "Avg.") out += rule;
        out += line(cells[i]);
    }
    return out;
}

void emit_report(const std::vector<ScenarioReport>& reports, const std::filesystem::path& dir) {
    if (reports.empty()) throw std::invalid_argument("no reports to emit");
    std::filesystem::create_directories(dir);
    std::vector<ReportRow> rows;
    for (const auto& r : reports) rows.push_back(to_row(r));
    rows.push_back(average_row(rows));

    auto write = [&](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
        out << text;
        if (!out) throw std::runtime_error("write to '" + p.string() + "' failed");
    };
    write(dir / "report.csv", to_csv(rows));
    write(dir / "report.txt", to_table(rows));

    std::string digests;
    for (const auto& r : reports) {
        for (std::size_t i = 0; i < r.runs.size(); ++i) {
            const auto& run = r.runs[i];
            digests += r.id + "," + r.robot + "," + std::to_string(i) + "," + run.digest + "," +
                       std::to_string(run.cog) + std::to_string(run.disp) + std::to_string(run.exec) + "\n";
        }
    }
    write(dir / "digests.txt", digests);

    bool any_logs = false;
    for (const auto& r : reports) any_logs = any_logs || !r.logs.empty();
    if (!any_logs) return;
    std::filesystem::create_directories(dir / "logs");
    for (const auto& r : reports) {
        for (std::size_t i = 0; i < r.logs.size(); ++i) {
            r.logs[i].save(dir / "logs" / (r.id + "_" + r.robot + "_" + std::to_string(i) + ".ndjson"));
        }
    }
}

std::vector<ReportRow> load_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return rows_from_csv(ss.str());
}

}  // namespace btp::eval
