#include "kforge/profiling.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>

namespace kforge {

namespace {

// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<std::vector<std::string>> read_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"': quoted = true; any = true; break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                any = true;
                break;
            case '\r': break;
            case '\n':
                if (any || !field.empty()) {
                    row.push_back(std::move(field));
                    rows.push_back(std::move(row));
                }
                row.clear();
                field.clear();
                any = false;
                break;
            default: field.push_back(c); any = true;
        }
    }
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::optional<double> parse_number(const std::string& s) {
    const auto t = trim(s);
    if (t.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

struct Columns {
    int pct = -1, total = -1, calls = -1, avg = -1, name = -1;
    std::string calls_header, name_header;
};

int find_column(const std::vector<std::string>& header, std::initializer_list<std::string_view> names,
                std::string* matched = nullptr) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto h = trim(header[i]);
        for (auto n : names) {
            if (h == n) {
                if (matched) *matched = h;
                return static_cast<int>(i);
            }
        }
    }
    return -1;
}

std::optional<ReportKind> detect_kind(std::string_view file_name, const Columns& cols) {
    if (file_name.find("api") != std::string_view::npos) return ReportKind::api_summary;
    if (file_name.find("kern") != std::string_view::npos) return ReportKind::gpu_kernel_summary;
    if (file_name.find("mem") != std::string_view::npos) return ReportKind::memory_transfer_summary;
    if (file_name.find("nvtx") != std::string_view::npos || file_name.find("range") != std::string_view::npos)
        return ReportKind::range_summary;
    if (cols.name_header == "Operation") return ReportKind::memory_transfer_summary;
    if (cols.name_header == "Range") return ReportKind::range_summary;
    if (cols.calls_header == "Num Calls") return ReportKind::api_summary;
    if (cols.calls_header == "Instances") return ReportKind::gpu_kernel_summary;
    return std::nullopt;
}

std::string_view calls_header(ReportKind k) {
    switch (k) {
        case ReportKind::api_summary: return "Num Calls";
        case ReportKind::memory_transfer_summary: return "Count";
        default: return "Instances";
    }
}

std::string_view name_header(ReportKind k) {
    switch (k) {
        case ReportKind::memory_transfer_summary: return "Operation";
        case ReportKind::range_summary: return "Range";
        default: return "Name";
    }
}

std::string fmt_number(double v) { return fmt::format("{}", v); }

int image_priority(const fs::path& p) {
    const auto name = p.filename().string();
    if (name.starts_with("summary")) return 0;
    if (name.starts_with("memory")) return 1;
    if (name.starts_with("timeline")) return 2;
    return 3;
}

}  // namespace

std::string_view to_string(ReportKind k) noexcept {
    switch (k) {
        case ReportKind::api_summary: return "api_summary";
        case ReportKind::gpu_kernel_summary: return "gpu_kernel_summary";
        case ReportKind::memory_transfer_summary: return "memory_transfer_summary";
        case ReportKind::range_summary: return "range_summary";
    }
    return "unknown";
}

bool StatsReports::empty() const noexcept {
    if (!opaque.empty()) return false;
    return std::all_of(tables.begin(), tables.end(), [](const auto& kv) { return kv.second.empty(); });
}

std::size_t ProfileBundle::image_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        items.begin(), items.end(), [](const ProfileItem& i) { return i.kind == EvidenceKind::image; }));
}

void parse_stats_csv(std::string_view text, std::string_view file_name, StatsReports& into) {
    const auto rows = read_csv(text);
    auto opaque = [&] { into.opaque.push_back({std::string(file_name), std::string(text)}); };
    if (rows.empty()) {
        into.warnings.push_back(std::string(file_name) + ": empty file");
        return;
    }

    const auto& header = rows.front();
    Columns cols;
    cols.pct = find_column(header, {"Time (%)", "Time(%)"});
    cols.total = find_column(header, {"Total Time (ns)"});
    cols.calls = find_column(header, {"Num Calls", "Instances", "Count", "Calls"}, &cols.calls_header);
    cols.avg = find_column(header, {"Avg (ns)", "Average (ns)"});
    cols.name = find_column(header, {"Name", "Operation", "Range"}, &cols.name_header);
    if (cols.total < 0 || cols.calls < 0 || cols.avg < 0 || cols.name < 0) {
        opaque();
        return;
    }
    const auto kind = detect_kind(file_name, cols);
    if (!kind) {
        opaque();
        return;
    }

    auto& table = into.tables[*kind];
    const auto needed = static_cast<std::size_t>(std::max({cols.pct, cols.total, cols.calls, cols.avg, cols.name}));
    std::vector<KernelStatRow> parsed;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        auto skip = [&](const std::string& why) {
            into.warnings.push_back(fmt::format("{}:{}: {}, row skipped", file_name, r + 1, why));
            spdlog::warn("event=profile_row_skipped file={} row={} reason=\"{}\"", file_name, r + 1, why);
        };
        if (row.size() <= needed) {
            skip("too few fields");
            continue;
        }
        const auto total = parse_number(row[cols.total]);
        const auto calls = parse_number(row[cols.calls]);
        const auto avg = parse_number(row[cols.avg]);
        std::optional<double> pct = cols.pct >= 0 ? parse_number(row[cols.pct]) : std::optional<double>(0.0);
        if (!total || !calls || !avg || !pct) {
            skip("non-numeric field");
            continue;
        }
        if (*total < 0 || *calls < 0 || *avg < 0 || *pct < 0 || *pct > 100 || *calls != std::floor(*calls)) {
            skip("value out of range");
            continue;
        }
        parsed.push_back({row[cols.name], *total, static_cast<std::uint64_t>(*calls), *avg, *pct});
    }
    if (cols.pct < 0) {
        double sum = 0.0;
        for (const auto& row : parsed) sum += row.total_time_ns;
        for (auto& row : parsed) row.pct_time = sum > 0 ? 100.0 * row.total_time_ns / sum : 0.0;
    }
    table.insert(table.end(), parsed.begin(), parsed.end());
}

StatsReports parse_stats_reports(const fs::path& dir) {
    StatsReports out;
    if (!fs::is_directory(dir)) throw LoadError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) parse_stats_csv(read_file(f), f.filename().string(), out);
    return out;
}

std::string write_stats_csv(ReportKind kind, const std::vector<KernelStatRow>& rows) {
    std::string out = fmt::format("Time (%),Total Time (ns),{},Avg (ns),{}\n", calls_header(kind), name_header(kind));
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{}\n", fmt_number(r.pct_time), fmt_number(r.total_time_ns), r.calls,
                           fmt_number(r.avg_ns), csv_field(r.name));
    }
    return out;
}

ProfileBundle build_bundle(const StatsReports& reports, const std::vector<fs::path>& screenshots,
                           const BundleBudget& budget, Backend backend) {
    ProfileBundle bundle;
    bundle.source_backend = backend;
    std::set<std::string> digests;
    auto add = [&](ProfileItem item) {
        if (digests.insert(item.digest).second) bundle.items.push_back(std::move(item));
    };

    for (const auto& [kind, rows] : reports.tables) {
        if (rows.empty()) continue;
        auto top = rows;
        std::stable_sort(top.begin(), top.end(), [](const KernelStatRow& a, const KernelStatRow& b) {
            if (a.total_time_ns != b.total_time_ns) return a.total_time_ns > b.total_time_ns;
            return a.name < b.name;
        });
        if (top.size() > budget.max_rows) top.resize(budget.max_rows);
        ProfileItem item;
        item.kind = EvidenceKind::text_table;
        item.title = fmt::format("{} (top {} of {} by total time)", to_string(kind), top.size(), rows.size());
        item.payload = write_stats_csv(kind, top);
        item.digest = sha256_hex(item.payload);
        add(std::move(item));
    }

    std::vector<OpaqueTable> opaque = reports.opaque;
    std::stable_sort(opaque.begin(), opaque.end(), [](const auto& a, const auto& b) { return a.title < b.title; });
    for (const auto& t : opaque) {
        // header plus at most max_rows data lines
        std::string text;
        std::size_t lines = 0;
        for (const auto& line : split(t.text, '\n')) {
            if (lines > budget.max_rows) break;
            if (trim(line).empty()) continue;
            text += line;
            text += '\n';
            ++lines;
        }
        if (text.empty()) continue;
        ProfileItem item{EvidenceKind::text_table, t.title, text, sha256_hex(text)};
        add(std::move(item));
    }

    auto images = screenshots;
    std::stable_sort(images.begin(), images.end(), [](const fs::path& a, const fs::path& b) {
        const int pa = image_priority(a), pb = image_priority(b);
        if (pa != pb) return pa < pb;
        return a.filename() < b.filename();
    });
    std::size_t taken = 0;
    for (const auto& img : images) {
        if (taken >= budget.max_images) break;
        if (!fs::exists(img)) continue;
        const auto before = bundle.items.size();
        add(ProfileItem{EvidenceKind::image, img.filename().string(), img.string(), sha256_file(img)});
        if (bundle.items.size() > before) ++taken;
    }

    if (bundle.items.empty()) throw PreconditionError("no profiling evidence");
    return bundle;
}

std::vector<fs::path> find_screenshots(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().extension() != ".png") continue;
        if (image_priority(e.path()) < 3) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::pair<StatsReports, std::vector<fs::path>> ingest_artifacts(const std::vector<fs::path>& paths) {
    StatsReports reports;
    std::vector<fs::path> images;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            bool has_csv = false;
            for (const auto& e : fs::directory_iterator(p)) has_csv = has_csv || e.path().extension() == ".csv";
            if (has_csv) {
                auto sub = parse_stats_reports(p);
                for (auto& [k, rows] : sub.tables) {
                    auto& dst = reports.tables[k];
                    dst.insert(dst.end(), rows.begin(), rows.end());
                }
                reports.opaque.insert(reports.opaque.end(), sub.opaque.begin(), sub.opaque.end());
                reports.warnings.insert(reports.warnings.end(), sub.warnings.begin(), sub.warnings.end());
            }
            auto shots = find_screenshots(p);
            images.insert(images.end(), shots.begin(), shots.end());
        } else if (p.extension() == ".csv" && fs::exists(p)) {
            parse_stats_csv(read_file(p), p.filename().string(), reports);
        } else if (p.extension() == ".png" && fs::exists(p)) {
            images.push_back(p);
        } else if (!fs::exists(p)) {
            reports.warnings.push_back("artifact not found: " + p.string());
        }
        // other artifacts (e.g. .gputrace bundles) are not evidence by themselves
    }
    return {std::move(reports), std::move(images)};
}

}  // namespace kforge
