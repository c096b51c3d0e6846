#include "lyapstream/quality_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include <fmt/format.h>

#include "default_table.inc"

namespace lyapstream {

namespace {

constexpr std::string_view kHeader = "r,d,psnr_db,ssim,cycles,delta";

struct Row {
    int line = 0;
    int r = 0;
    int d = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    std::optional<double> cycles;
    std::optional<double> delta;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view field, std::string_view name, int line) {
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
        throw TableError(fmt::format("row {}: malformed row: bad {} '{}'", line, name, field), line);
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value))
            throw TableError(fmt::format("row {}: malformed row: non-finite {}", line, name), line);
    }
    return value;
}

std::optional<double> parse_optional(std::string_view field, std::string_view name, int line) {
    if (field.empty()) return std::nullopt;
    return parse_number<double>(field, name, line);
}

}  // namespace

QualityTable QualityTable::parse(std::istream& in, std::string_view source) {
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    std::vector<Row> rows;

    while (std::getline(in, line)) {
        ++line_no;
        auto view = trim(line);
        if (!saw_header) {
            if (view != kHeader)
                throw TableError(fmt::format("{}: row 1: malformed row: header must be '{}'", source, kHeader), 1);
            saw_header = true;
            continue;
        }
        if (view.empty()) continue;
        auto fields = split(view);
        if (fields.size() != 6)
            throw TableError(fmt::format("{}: row {}: malformed row: expected 6 fields, got {}",
                                         source, line_no, fields.size()),
                             line_no);
        Row row;
        row.line = line_no;
        row.r = parse_number<int>(fields[0], "r", line_no);
        row.d = parse_number<int>(fields[1], "d", line_no);
        row.psnr = parse_number<double>(fields[2], "psnr_db", line_no);
        row.ssim = parse_number<double>(fields[3], "ssim", line_no);
        row.cycles = parse_optional(fields[4], "cycles", line_no);
        row.delta = parse_optional(fields[5], "delta", line_no);

        if (row.r <= 0)
            throw TableError(fmt::format("{}: row {}: malformed row: rate must be positive", source, line_no), line_no);
        if (row.d < 0)
            throw TableError(fmt::format("{}: row {}: malformed row: depth must be nonnegative", source, line_no), line_no);
        if (row.ssim < 0.0 || row.ssim > 1.0)
            throw TableError(fmt::format("{}: row {}: malformed row: ssim outside [0,1]", source, line_no), line_no);
        if (row.d == 0 && row.cycles && *row.cycles != 0.0)
            throw TableError(fmt::format("{}: row {}: malformed row: depth 0 must carry no cycles", source, line_no), line_no);
        if (row.d > 0 && (!row.cycles || *row.cycles <= 0.0))
            throw TableError(fmt::format("{}: row {}: malformed row: depth {} needs positive cycles", source, line_no, row.d), line_no);
        rows.push_back(row);
    }
    if (!saw_header) throw TableError(fmt::format("{}: empty table", source), 0);
    if (rows.empty()) throw TableError(fmt::format("{}: table has no rows", source), 0);

    std::map<std::pair<int, int>, const Row*> cells;
    std::map<int, const Row*> by_depth;
    for (const auto& row : rows) {
        auto [it, inserted] = cells.emplace(std::pair{row.r, row.d}, &row);
        if (!inserted)
            throw TableError(fmt::format("{}: row {}: duplicate (r,d) key ({},{}) first seen on row {}",
                                         source, row.line, row.r, row.d, it->second->line),
                             row.line);
        auto [dit, fresh] = by_depth.emplace(row.d, &row);
        if (!fresh) {
            const Row& first = *dit->second;
            if (first.cycles.value_or(0.0) != row.cycles.value_or(0.0))
                throw TableError(fmt::format("{}: row {}: cycles for depth {} differ from row {}",
                                             source, row.line, row.d, first.line),
                                 row.line);
        }
    }

    QualityTable t;
    for (const auto& [key, _] : cells) {
        if (std::find(t.rates_.begin(), t.rates_.end(), key.first) == t.rates_.end())
            t.rates_.push_back(key.first);
    }
    for (const auto& [d, _] : by_depth) t.depths_.push_back(d);
    std::sort(t.rates_.begin(), t.rates_.end());

    const std::size_t nd = t.depths_.size();
    t.psnr_.assign(t.rates_.size() * nd, 0.0);
    t.ssim_.assign(t.rates_.size() * nd, 0.0);
    for (std::size_t ri = 0; ri < t.rates_.size(); ++ri) {
        for (std::size_t di = 0; di < nd; ++di) {
            auto it = cells.find({t.rates_[ri], t.depths_[di]});
            if (it == cells.end())
                throw TableError(fmt::format("{}: missing entry for (r={}, d={})", source,
                                             t.rates_[ri], t.depths_[di]),
                                 0);
            t.psnr_[ri * nd + di] = it->second->psnr;
            t.ssim_[ri * nd + di] = it->second->ssim;
        }
    }
    for (const auto& [d, row] : by_depth) {
        t.cycles_.push_back(row->cycles.value_or(0.0));
        t.weight_.push_back(row->delta.value_or(0.0));
    }

    // Monotonicity: psnr rises with depth, falls with rate; cycles rise with depth.
    for (std::size_t ri = 0; ri < t.rates_.size(); ++ri) {
        for (std::size_t di = 0; di < nd; ++di) {
            const Row& row = *cells.at({t.rates_[ri], t.depths_[di]});
            if (di > 0 && !(t.psnr_at(ri, di) > t.psnr_at(ri, di - 1)))
                throw TableError(fmt::format("{}: row {}: monotonicity violation: psnr({},{}) not above psnr({},{})",
                                             source, row.line, row.r, row.d, row.r, t.depths_[di - 1]),
                                 row.line);
            if (ri > 0 && !(t.psnr_at(ri, di) < t.psnr_at(ri - 1, di)))
                throw TableError(fmt::format("{}: row {}: monotonicity violation: psnr({},{}) not below psnr({},{})",
                                             source, row.line, row.r, row.d, t.rates_[ri - 1], row.d),
                                 row.line);
        }
    }
    for (std::size_t di = 1; di < nd; ++di) {
        if (t.depths_[di - 1] > 0 && !(t.cycles_[di] > t.cycles_[di - 1])) {
            const Row& row = *by_depth.at(t.depths_[di]);
            throw TableError(fmt::format("{}: row {}: monotonicity violation: cycles({}) not above cycles({})",
                                         source, row.line, t.depths_[di], t.depths_[di - 1]),
                             row.line);
        }
    }
    return t;
}

std::optional<std::size_t> QualityTable::rate_index(int r) const noexcept {
    for (std::size_t i = 0; i < rates_.size(); ++i)
        if (rates_[i] == r) return i;
    return std::nullopt;
}

std::optional<std::size_t> QualityTable::depth_index(int d) const noexcept {
    for (std::size_t i = 0; i < depths_.size(); ++i)
        if (depths_[i] == d) return i;
    return std::nullopt;
}

double QualityTable::psnr(int r, int d) const {
    auto ri = rate_index(r);
    auto di = depth_index(d);
    if (!ri || !di) throw std::out_of_range(fmt::format("no table entry for (r={}, d={})", r, d));
    return psnr_at(*ri, *di);
}

double QualityTable::ssim(int r, int d) const {
    auto ri = rate_index(r);
    auto di = depth_index(d);
    if (!ri || !di) throw std::out_of_range(fmt::format("no table entry for (r={}, d={})", r, d));
    return ssim_[*ri * depths_.size() + *di];
}

double QualityTable::cycles(int d) const {
    auto di = depth_index(d);
    if (!di) throw std::out_of_range(fmt::format("no table entry for depth {}", d));
    return cycles_[*di];
}

double QualityTable::depth_weight(int d) const {
    auto di = depth_index(d);
    if (!di) throw std::out_of_range(fmt::format("no table entry for depth {}", d));
    return weight_[*di];
}

double QualityTable::max_psnr() const noexcept {
    return *std::max_element(psnr_.begin(), psnr_.end());
}

QualityTable QualityTable::restricted_to_rates(std::span<const int> keep) const {
    std::ostringstream csv;
    csv << kHeader << '\n';
    std::istringstream full(to_csv());
    std::string line;
    std::getline(full, line);
    while (std::getline(full, line)) {
        int r = 0;
        std::from_chars(line.data(), line.data() + line.size(), r);
        if (std::find(keep.begin(), keep.end(), r) != keep.end()) csv << line << '\n';
    }
    for (int r : keep)
        if (!has_rate(r)) throw std::out_of_range(fmt::format("rate {} not in table", r));
    std::istringstream in(csv.str());
    return parse(in, "<restricted>");
}

QualityTable QualityTable::restricted_to_depths(std::span<const int> keep) const {
    for (int d : keep)
        if (!has_depth(d)) throw std::out_of_range(fmt::format("depth {} not in table", d));
    std::ostringstream csv;
    csv << kHeader << '\n';
    std::istringstream full(to_csv());
    std::string line;
    std::getline(full, line);
    while (std::getline(full, line)) {
        auto fields = split(line);
        int d = 0;
        std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), d);
        if (std::find(keep.begin(), keep.end(), d) != keep.end()) csv << line << '\n';
    }
    std::istringstream in(csv.str());
    return parse(in, "<restricted>");
}

std::string QualityTable::to_csv() const {
    std::string out{kHeader};
    out += '\n';
    for (std::size_t ri = 0; ri < rates_.size(); ++ri) {
        for (std::size_t di = 0; di < depths_.size(); ++di) {
            out += fmt::format("{},{},{},{},", rates_[ri], depths_[di], psnr_at(ri, di),
                               ssim_[ri * depths_.size() + di]);
            if (depths_[di] > 0) out += fmt::format("{},{}", cycles_[di], weight_[di]);
            else out += ',';
            out += '\n';
        }
    }
    return out;
}

QualityTable load_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw TableError(fmt::format("cannot open quality table '{}'", path.string()), 0);
    return QualityTable::parse(in, path.string());
}

std::string_view default_table_csv() { return kDefaultTableCsv; }

const QualityTable& default_table() {
    static const QualityTable table = [] {
        std::istringstream in{std::string(kDefaultTableCsv)};
        return QualityTable::parse(in, "<default>");
    }();
    return table;
}

double ChunkSizeModel::size_bits(int r) const {
    return base_size_bits / std::pow(static_cast<double>(r), exponent);
}

QualityModel::QualityModel(QualityTable table, ChunkSizeModel sizes, ComputeModel compute)
    : table_(std::move(table)), sizes_(sizes), compute_(compute) {
    if (!(sizes_.base_size_bits > 0.0) || !(sizes_.exponent > 0.0))
        throw std::invalid_argument("chunk size model needs positive base size and exponent");
    if (!(compute_.core_rate_hz > 0.0) || !(compute_.calibration > 0.0))
        throw std::invalid_argument("compute model needs positive core rate and calibration");
}

double QualityModel::chunk_size(int r) const {
    if (!table_.has_rate(r)) throw std::out_of_range(fmt::format("rate {} not in table", r));
    return sizes_.size_bits(r);
}

double QualityModel::single_core_time(int r, int d) const {
    if (!table_.has_rate(r)) throw std::out_of_range(fmt::format("rate {} not in table", r));
    return compute_.calibration * table_.cycles(d) / compute_.core_rate_hz;
}

double QualityModel::processing_time(int r, int d, int u) const {
    if (u < 0) throw std::invalid_argument("core count must be nonnegative");
    if (d == 0) {
        if (!table_.has_depth(0)) throw std::out_of_range("depth 0 not in table");
        return 0.0;
    }
    if (u == 0) throw std::invalid_argument(fmt::format("depth {} requires at least one core", d));
    return single_core_time(r, d) / u;
}

double QualityModel::max_quality(std::optional<double> override_db) const noexcept {
    return override_db ? *override_db : table_.max_psnr();
}

}  // namespace lyapstream
