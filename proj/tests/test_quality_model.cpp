#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lyapstream/quality_model.hpp"

using namespace lyapstream;

namespace {

QualityTable parse_text(const std::string& text) {
    std::istringstream in(text);
    return QualityTable::parse(in, "test");
}

std::string default_csv() { return std::string(default_table_csv()); }

std::string replace_line(std::string csv, const std::string& from, const std::string& to) {
    auto pos = csv.find(from);
    REQUIRE(pos != std::string::npos);
    csv.replace(pos, from.size(), to);
    return csv;
}

std::string error_of(const std::string& text) {
    try {
        parse_text(text);
    } catch (const TableError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_SUITE("quality_model") {

TEST_CASE("default table reproduces every published entry") {
    const auto& t = default_table();
    const std::array<int, 4> rates{2, 3, 4, 5};
    const std::array<int, 6> depths{0, 5, 10, 15, 20, 25};
    const double psnr[4][6] = {{30.60, 30.66, 31.01, 31.87, 32.20, 32.26},
                               {27.45, 27.51, 28.42, 29.08, 29.39, 29.45},
                               {25.82, 26.29, 26.85, 27.49, 27.73, 27.79},
                               {24.81, 25.22, 25.74, 26.23, 26.46, 26.54}};
    const double ssim[4][6] = {{0.859, 0.866, 0.885, 0.899, 0.904, 0.906},
                               {0.749, 0.773, 0.795, 0.816, 0.823, 0.826},
                               {0.672, 0.701, 0.724, 0.749, 0.759, 0.762},
                               {0.620, 0.641, 0.663, 0.688, 0.698, 0.702}};
    const double cycles[5] = {1.007e9, 1.441e9, 1.864e9, 2.283e9, 2.669e9};
    REQUIRE(t.rates().size() == 4);
    REQUIRE(t.depths().size() == 6);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(t.psnr(rates[i], depths[j]) == psnr[i][j]);
            CHECK(t.ssim(rates[i], depths[j]) == ssim[i][j]);
        }
    for (std::size_t j = 1; j < 6; ++j) CHECK(t.cycles(depths[j]) == cycles[j - 1]);
    CHECK(t.cycles(0) == 0.0);
    CHECK(t.psnr(2, 25) == 32.26);
    CHECK(t.psnr(5, 0) == 24.81);
}

TEST_CASE("csv round trip") {
    const auto& t = default_table();
    const auto again = parse_text(t.to_csv());
    for (int r : t.rates())
        for (int d : t.depths()) CHECK(again.psnr(r, d) == t.psnr(r, d));
}

TEST_CASE("load errors carry row numbers") {
    SUBCASE("monotonicity in depth") {
        auto csv = replace_line(default_csv(), "2,10,31.01", "2,10,30.50");
        auto msg = error_of(csv);
        CHECK(msg.find("monotonicity violation") != std::string::npos);
        CHECK(msg.find("row 4") != std::string::npos);
    }
    SUBCASE("monotonicity in rate") {
        auto msg = error_of(replace_line(default_csv(), "3,0,27.45", "3,0,31.00"));
        CHECK(msg.find("monotonicity violation") != std::string::npos);
    }
    SUBCASE("duplicate key") {
        auto csv = replace_line(default_csv(), "3,0,27.45", "2,0,27.45");
        auto msg = error_of(csv);
        CHECK(msg.find("duplicate (r,d) key") != std::string::npos);
        CHECK(msg.find("row 8") != std::string::npos);
    }
    SUBCASE("malformed field") {
        auto msg = error_of(replace_line(default_csv(), "2,5,30.66", "2,5,abc"));
        CHECK(msg.find("malformed row") != std::string::npos);
        CHECK(msg.find("row 3") != std::string::npos);
    }
    SUBCASE("wrong field count") {
        auto msg = error_of(replace_line(default_csv(), "2,5,30.66,", "2,5,"));
        CHECK(msg.find("malformed row") != std::string::npos);
    }
    SUBCASE("bad header") {
        auto msg = error_of(replace_line(default_csv(), "r,d,psnr_db", "rate,d,psnr_db"));
        CHECK(msg.find("row 1") != std::string::npos);
    }
    SUBCASE("missing entry") {
        auto csv = default_csv();
        auto pos = csv.find("\n5,25,");
        REQUIRE(pos != std::string::npos);
        csv.erase(pos + 1, csv.find('\n', pos + 1) - pos);
        CHECK(error_of(csv).find("missing entry") != std::string::npos);
    }
    SUBCASE("ssim out of range") {
        CHECK(error_of(replace_line(default_csv(), "0.906", "1.906")).find("malformed row") != std::string::npos);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_table("/nonexistent/table.csv"), TableError);
    }
}

TEST_CASE("load_table reads a file") {
    auto path = std::filesystem::temp_directory_path() / "lyapstream_table_test.csv";
    {
        std::ofstream f(path);
        f << default_csv();
    }
    auto t = load_table(path);
    CHECK(t.psnr(4, 15) == 27.49);
    std::filesystem::remove(path);
}

TEST_CASE("chunk sizes") {
    QualityModel q(default_table());
    CHECK(q.chunk_size(2) == doctest::Approx(7.5e5).epsilon(1e-15));
    CHECK(q.chunk_size(5) == doctest::Approx(1.2e5).epsilon(1e-15));
    CHECK_THROWS(q.chunk_size(7));
    for (int r : q.table().rates()) {
        CHECK(q.chunk_size(r) > 0.0);
        CHECK(q.chunk_size(r) * std::pow(r, 2.0) == 3.0e6);
    }
    CHECK(q.chunk_size(3) > q.chunk_size(4));
}

TEST_CASE("processing time") {
    QualityModel q(default_table());
    CHECK(q.processing_time(2, 0, 0) == 0.0);
    CHECK(q.processing_time(2, 25, 1) == doctest::Approx(2.2792).epsilon(1e-4));
    CHECK(q.processing_time(2, 25, 2) == doctest::Approx(1.1396).epsilon(1e-4));
    CHECK_THROWS_AS(q.processing_time(2, 25, 0), std::invalid_argument);
    for (int d : q.table().depths()) {
        if (d == 0) continue;
        const double one = q.processing_time(3, d, 1);
        for (int u = 2; u <= 10; ++u) CHECK(q.processing_time(3, d, u) * u == doctest::Approx(one).epsilon(1e-14));
    }
    QualityModel slow(default_table(), {}, ComputeModel{1.171e9, 2.0});
    CHECK(slow.single_core_time(2, 25) == doctest::Approx(2.0 * q.single_core_time(2, 25)));
}

TEST_CASE("max quality") {
    QualityModel q(default_table());
    CHECK(q.max_quality() == 32.26);
    CHECK(q.max_quality(35.0) == 35.0);
    const std::array<int, 1> only5{5};
    QualityModel q5(default_table().restricted_to_rates(only5));
    CHECK(q5.max_quality() == 26.54);

    int at_max = 0;
    for (int r : q.table().rates())
        for (int d : q.table().depths()) {
            CHECK(q.max_quality() - q.table().psnr(r, d) >= 0.0);
            if (q.table().psnr(r, d) == q.max_quality()) ++at_max;
        }
    CHECK(at_max == 1);
}

}  // TEST_SUITE
