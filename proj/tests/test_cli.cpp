#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "cnpressure/convergence.hpp"

using namespace cnpressure;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream is(text);
    return config_from_key_values(parse_key_values(is));
}

// Tiny custom study: 2x2 cells, two coarse steps, short horizon.
RunConfig tiny(const std::string& extra = {}) {
    return parse("experiment = custom\nnx = 2\nny = 2\nfinal_time = 0.4\nk_list = 0.1, 0.05\n"
                 "reference_factor = 4\nviscosity = 0.1\n" + extra);
}

}  // namespace

TEST(Config, PresetsMatchExperiments) {
    const auto i = RunConfig::preset(Experiment::CaseI);
    EXPECT_EQ(i.k_list, (std::vector<double>{0.02, 0.01, 0.005, 0.0025}));
    EXPECT_EQ(i.pattern, (std::vector<double>{0.8, 1.2}));
    EXPECT_EQ(i.reference_factor, 8);
    EXPECT_DOUBLE_EQ(i.reference_step(), 0.0025 / 8);
    EXPECT_EQ(i.nx, 16);
    EXPECT_EQ(i.forcing, "swirl_ramp");
    EXPECT_EQ(i.initial, "zero");
    EXPECT_DOUBLE_EQ(i.viscosity, 0.01);
    EXPECT_DOUBLE_EQ(i.final_time, 2.0);

    const auto ii = RunConfig::preset(Experiment::CaseII);
    EXPECT_EQ(ii.forcing, "zero");
    EXPECT_EQ(ii.initial, "stationary_quadrant");
    EXPECT_EQ(ii.variants.size(), 5u);
    EXPECT_EQ(ii.variants[1], (Variant{1, 1.5}));

    const auto m = RunConfig::preset(Experiment::StokesManufactured);
    EXPECT_EQ(m.model, FlowModel::Stokes);
    EXPECT_EQ(m.norms, (std::vector<NormId>{NormId::PressureLinfl2, NormId::VelocityLinfV1}));
}

TEST(Config, ParsesKeysCommentsAndOverrides) {
    const auto c = parse("# comment\nexperiment = case_ii\nviscosity = 0.5  # trailing\n"
                         "k_list = 0.1,0.05 , 0.025\nvariants = 0:0, 2:2\nnorms = pressure_L2l2\n"
                         "spatial_norm = nodal\nsampling = reference_midpoint\nviscosity = 0.25\n");
    EXPECT_EQ(c.experiment, Experiment::CaseII);
    EXPECT_DOUBLE_EQ(c.viscosity, 0.25);
    EXPECT_EQ(c.k_list, (std::vector<double>{0.1, 0.05, 0.025}));
    EXPECT_EQ(c.variants, (std::vector<Variant>{{0, 0.0}, {2, 2.0}}));
    EXPECT_EQ(c.norms, std::vector<NormId>{NormId::PressureL2l2});
    EXPECT_EQ(c.spatial, SpatialNorm::NodalEuclidean);
    EXPECT_EQ(c.sampling, PressureSampling::ReferenceMidpoint);
    EXPECT_EQ(c.initial, "stationary_quadrant");
}

TEST(Config, KeyValueRoundTrip) {
    auto c = parse("experiment = case_ii\nk_list = 0.03, 0.011\npattern = 0.7, 1.3, 1\nvariants = 1:1.5\nseed = 9\n");
    const auto text = to_key_values(c);
    const auto d = parse(text);
    EXPECT_EQ(to_key_values(d), text);
    EXPECT_EQ(d.k_list, c.k_list);
    EXPECT_EQ(d.pattern, c.pattern);
    EXPECT_EQ(d.seed, 9u);
}

TEST(Config, RejectsInvalidInput) {
    EXPECT_THROW(parse("k_list = 0.01, 0.02\n"), InvalidArgument);
    EXPECT_THROW(parse("k_list = 0.02, 0.02\n"), InvalidArgument);
    EXPECT_THROW(parse("reference_factor = 2\n"), InvalidArgument);
    EXPECT_THROW(parse("colour = blue\n"), InvalidArgument);
    EXPECT_THROW(parse("viscosity = fast\n"), InvalidArgument);
    EXPECT_THROW(parse("viscosity = -1\n"), InvalidArgument);
    EXPECT_THROW(parse("nx = 1.5\n"), InvalidArgument);
    EXPECT_THROW(parse("variants = 1\n"), InvalidArgument);
    EXPECT_THROW(parse("variants = -1:0\n"), InvalidArgument);
    EXPECT_THROW(parse("variants = 1:-0.5\n"), InvalidArgument);
    EXPECT_THROW(parse("norms = pressure_H1\n"), InvalidArgument);
    EXPECT_THROW(parse("experiment = case_iii\n"), InvalidArgument);
    EXPECT_THROW(parse("geometry = disk\n"), InvalidArgument);
    EXPECT_THROW(parse("model = euler\n"), InvalidArgument);
    EXPECT_THROW(parse("model = nse\nforcing = manufactured\n"), InvalidArgument);
    EXPECT_THROW(parse("just some words\n"), InvalidArgument);
    EXPECT_THROW(parse("threads = 0\n"), InvalidArgument);
}

TEST(Convergence, ZeroDataGivesExactMatch) {
    const auto r = run_convergence(tiny("forcing = zero\n"));
    ASSERT_TRUE(r.all_ok());
    for (const auto& rec : r.records) {
        for (const auto& row : rec.rows) EXPECT_EQ(row.error, 0.0);
        EXPECT_EQ(rate_summary(rec), "exact match");
    }
    EXPECT_FALSE(r.rate(Variant{0, 0.0}, NormId::PressureL2l2).has_value());
}

TEST(Convergence, RecordsCoverEveryVariantAndNorm) {
    const auto c = tiny("model = stokes\nvariants = 0:0, 1:1.5\nnorms = pressure_L2l2, velocity_LinfV1\n");
    const auto r = run_convergence(c);
    ASSERT_TRUE(r.all_ok());
    EXPECT_EQ(r.records.size(), 4u);
    EXPECT_EQ(r.rows.size(), 4u);  // two prefixes times two steps
    for (const auto& rec : r.records) {
        ASSERT_EQ(rec.rows.size(), 2u);
        EXPECT_GT(rec.rows[0].k, rec.rows[1].k);
        for (const auto& row : rec.rows) EXPECT_GT(row.error, 0.0);
    }
    EXPECT_TRUE(r.rate(Variant{1, 1.5}, NormId::VelocityLinfV1).has_value());
    EXPECT_THROW(r.record(Variant{2, 0.0}, NormId::PressureL2l2), InvalidArgument);
}

TEST(Convergence, CsvIsDeterministicAcrossRunsAndThreads) {
    const auto a = convergence_csv(run_convergence(tiny("variants = 0:0, 1:0\n")));
    const auto b = convergence_csv(run_convergence(tiny("variants = 0:0, 1:0\n")));
    const auto c = convergence_csv(run_convergence(tiny("variants = 0:0, 1:0\nthreads = 3\nseed = 17\n")));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    EXPECT_EQ(a.substr(0, a.find('\n')), csv_header());
}

TEST(Convergence, SolverFailuresAreRecordedPerRow) {
    // One Newton iteration cannot reach the tolerance once the flow is nonzero.
    const auto r = run_convergence(tiny("newton_max_iterations = 1\nforcing_amplitude = 5\n"));
    EXPECT_FALSE(r.all_ok());
    EXPECT_NE(r.reference_status.find("newton"), std::string::npos);
    for (const auto& row : r.rows) EXPECT_NE(row.status, "ok");
    const auto csv = convergence_csv(r);
    EXPECT_NE(csv.find(",nan,"), std::string::npos);
    const auto manifest = convergence_manifest(r);
    EXPECT_NE(manifest.find("status=newton"), std::string::npos);
}

TEST(Convergence, ManifestReproducesConfiguration) {
    const auto c = tiny("forcing = zero\nseed = 5\n");
    const auto manifest = convergence_manifest(run_convergence(c));
    std::istringstream is(manifest);
    const auto again = config_from_key_values(parse_key_values(is));
    EXPECT_EQ(to_key_values(again), to_key_values(c));
    EXPECT_NE(manifest.find(version_string), std::string::npos);
    EXPECT_NE(manifest.find("geometry = square"), std::string::npos);
}
