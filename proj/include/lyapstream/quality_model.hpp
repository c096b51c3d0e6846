#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lyapstream {

/// Raised when a quality table cannot be parsed or fails validation.
/// `row()` is the 1-based line number in the source (header is line 1),
/// or 0 when the problem is not tied to a single row.
class TableError : public std::runtime_error {
public:
    TableError(const std::string& what, int row)
        : std::runtime_error(what), row_(row) {}
    int row() const noexcept { return row_; }

private:
    int row_;
};

/// Measured quality and processing cost of the super-resolution model for
/// every (compression rate, SR depth) pair. Immutable once constructed.
///
/// Depth 0 means "no super-resolution" (bicubic upscaling only) and carries
/// zero work. Cycle counts are a function of depth only.
class QualityTable {
public:
    /// Parses the `r,d,psnr_db,ssim,cycles,delta` CSV format and validates it.
    static QualityTable parse(std::istream& in, std::string_view source = "<stream>");

    std::span<const int> rates() const noexcept { return rates_; }
    std::span<const int> depths() const noexcept { return depths_; }

    bool has_rate(int r) const noexcept { return rate_index(r).has_value(); }
    bool has_depth(int d) const noexcept { return depth_index(d).has_value(); }
    std::optional<std::size_t> rate_index(int r) const noexcept;
    std::optional<std::size_t> depth_index(int d) const noexcept;

    double psnr(int r, int d) const;
    double ssim(int r, int d) const;
    double cycles(int d) const;
    double depth_weight(int d) const;

    // Unchecked index-based access for hot loops.
    double psnr_at(std::size_t ri, std::size_t di) const noexcept {
        return psnr_[ri * depths_.size() + di];
    }
    double cycles_at(std::size_t di) const noexcept { return cycles_[di]; }

    double max_psnr() const noexcept;
    int min_rate() const noexcept { return rates_.front(); }
    int max_depth() const noexcept { return depths_.back(); }

    /// Copy of this table keeping only the given rates (which must exist).
    QualityTable restricted_to_rates(std::span<const int> keep) const;
    /// Copy of this table keeping only the given depths (which must exist).
    QualityTable restricted_to_depths(std::span<const int> keep) const;

    /// Re-emits the table in its CSV format.
    std::string to_csv() const;

private:
    QualityTable() = default;

    std::vector<int> rates_;
    std::vector<int> depths_;
    std::vector<double> psnr_;    // rates x depths, row-major
    std::vector<double> ssim_;    // rates x depths, row-major
    std::vector<double> cycles_;  // per depth
    std::vector<double> weight_;  // per depth
};

/// Loads and validates a quality table CSV from disk.
QualityTable load_table(const std::filesystem::path& path);

/// The table shipped with the project (data/quality_table.csv, compiled in).
const QualityTable& default_table();
std::string_view default_table_csv();

/// Chunk size as a function of the compression rate: S(r) = base / r^exponent.
struct ChunkSizeModel {
    double base_size_bits = 3.0e6;
    double exponent = 2.0;

    double size_bits(int r) const;
};

/// Per-core execution speed of the receiver, with a calibration multiplier
/// applied to the per-chunk work.
struct ComputeModel {
    double core_rate_hz = 1.171e9;
    double calibration = 1.0;
};

/// Quality table plus the size and compute models that turn it into
/// chunk sizes and processing times.
class QualityModel {
public:
    explicit QualityModel(QualityTable table, ChunkSizeModel sizes = {}, ComputeModel compute = {});

    const QualityTable& table() const noexcept { return table_; }
    const ChunkSizeModel& sizes() const noexcept { return sizes_; }
    const ComputeModel& compute() const noexcept { return compute_; }

    /// Size in bits of one chunk compressed at rate r. Throws for unknown r.
    double chunk_size(int r) const;

    /// Single-core processing time of one chunk, in seconds. Zero for d = 0.
    double single_core_time(int r, int d) const;

    /// Time for u cores to process one chunk at (r, d). d = 0 needs no cores
    /// and costs nothing; d > 0 with u = 0 is rejected.
    double processing_time(int r, int d, int u) const;

    /// Reference quality P̄ used in the degradation penalty: the best table
    /// entry unless an override is given.
    double max_quality(std::optional<double> override_db = std::nullopt) const noexcept;

private:
    QualityTable table_;
    ChunkSizeModel sizes_;
    ComputeModel compute_;
};

}  // namespace lyapstream
