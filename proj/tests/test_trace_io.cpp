#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nrflow/outputs.hpp"
#include "nrflow/trace.hpp"

using namespace nrflow;
namespace fs = std::filesystem;

namespace {

TraceRecord sample(double t, int id) {
    TraceRecord r;
    r.t = t;
    r.vehicle_id = id;
    r.state = {1.0 / 3.0, -2.5e-7, 13.4, 0.01, 0.2, -0.003};
    r.nominal = {0.5, 0.01};
    r.applied = {-0.25, 0.0};
    r.r1 = 12345.6789012;
    r.r2 = 3.0;
    r.yhat1 = 7.0;
    r.yhat2 = -1.0;
    r.h_long = 4.5;
    r.flags = kSaturated | kLatFilterActive;
    return r;
}

std::string to_csv(const SimTrace& t) {
    std::ostringstream os;
    write_trace_csv(t, os);
    return os.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(TraceCsv, HeaderHasNineteenColumns) {
    const std::string h = kTraceHeader;
    EXPECT_EQ(std::count(h.begin(), h.end(), ','), 18);
    EXPECT_EQ(h.rfind("t,vehicle_id,z1,z2", 0), 0u);
}

TEST(TraceCsv, NineSignificantDigitsAndNan) {
    const std::string line = format_record(sample(0.005, 2));
    EXPECT_NE(line.find("0.333333333,"), std::string::npos);
    EXPECT_NE(line.find("-2.5e-07,"), std::string::npos);
    EXPECT_NE(line.find("12345.6789,"), std::string::npos);
    EXPECT_NE(line.find(",nan,"), std::string::npos);  // h_lat unset
    EXPECT_EQ(line.substr(line.rfind(',') + 1), std::to_string(kSaturated | kLatFilterActive));
}

TEST(TraceCsv, RoundTripIsStableAfterOneWrite) {
    SimTrace t;
    for (int k = 0; k < 4; ++k) t.records.push_back(sample(0.005 * k, k % 2));
    const std::string first = to_csv(t);
    std::istringstream in(first);
    const SimTrace back = read_trace_csv(in);
    ASSERT_EQ(back.records.size(), 4u);
    EXPECT_NEAR(back.dt, 0.005, 1e-12);
    EXPECT_TRUE(std::isnan(back.records[0].h_lat));
    EXPECT_EQ(back.records[3].flags, kSaturated | kLatFilterActive);
    EXPECT_NEAR(back.records[1].state.z1, 1.0 / 3.0, 1e-9);
    EXPECT_EQ(to_csv(back), first);
}

TEST(TraceCsv, RejectsMalformedInput) {
    std::istringstream empty("");
    EXPECT_THROW(read_trace_csv(empty), Error);
    std::istringstream header("t,z1\n1,2\n");
    EXPECT_THROW(read_trace_csv(header), Error);
    std::istringstream short_row(std::string(kTraceHeader) + "\n1,2,3\n");
    EXPECT_THROW(read_trace_csv(short_row), Error);
    std::string row = format_record(sample(0.0, 1));
    row.replace(0, row.find(','), "abc");
    std::istringstream bad_number(std::string(kTraceHeader) + "\n" + row + "\n");
    EXPECT_THROW(read_trace_csv(bad_number), Error);
}

TEST(TraceCsv, AcceptsCrlfLineEndings) {
    std::istringstream in(std::string(kTraceHeader) + "\r\n" + format_record(sample(0, 1)) + "\r\n");
    EXPECT_EQ(read_trace_csv(in).records.size(), 1u);
}

TEST(InferGeometry, StraightAndArc) {
    SimTrace straight;
    for (int k = 0; k < 5; ++k) {
        TraceRecord r;
        r.r1 = 10.0 * k;
        straight.records.push_back(r);
    }
    EXPECT_EQ(infer_geometry(straight).kind, RoadKind::straight);

    const double radius = 821.2395;
    SimTrace arc;
    for (int k = 0; k < 20; ++k) {
        const double th = 0.025 * k;
        TraceRecord r;
        r.r1 = radius * std::sin(th);
        r.r2 = radius * (1 - std::cos(th));
        arc.records.push_back(r);
    }
    const RoadGeometry g = infer_geometry(arc);
    EXPECT_EQ(g.kind, RoadKind::arc);
    EXPECT_NEAR(g.radius, radius, 1e-6 * radius);
}

TEST(Outputs, EmptyTraceWritesHeaderAndEmptyFigures) {
    const fs::path dir = fs::temp_directory_path() / "nrflow_test_empty_outputs";
    fs::remove_all(dir);
    SimTrace t;
    t.geometry = RoadGeometry{};
    emit_outputs(t, nullptr, OutputPaths{dir});
    EXPECT_EQ(slurp(dir / "trace.csv"), std::string(kTraceHeader) + "\n");
    const std::string svg = slurp(dir / "tracking_error.svg");
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(svg.find("<polyline"), std::string::npos);
}
