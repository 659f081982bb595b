#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cnpressure/errors.hpp"
#include "cnpressure/schemes.hpp"

using namespace cnpressure;

namespace {

const fem::TaylorHoodSpace& space4() {
    static const fem::TaylorHoodSpace space(fem::FemMesh2D::structured(fem::Rectangle{}, 4, 4));
    return space;
}

ProblemSpec base_spec(FlowModel model, double nu = 0.1, double T = 0.5) {
    ProblemSpec s;
    s.model = model;
    s.viscosity = nu;
    s.final_time = T;
    return s;
}

double max_abs(const Trajectory& tr) {
    double m = 0.0;
    for (std::size_t n = 0; n <= tr.mesh().intervals(); ++n) m = std::max(m, tr.velocity.at_node(n).cwiseAbs().maxCoeff());
    for (std::size_t n = 1; n <= tr.mesh().intervals(); ++n) m = std::max(m, tr.pressure.on_interval(n).cwiseAbs().maxCoeff());
    return m;
}

}  // namespace

TEST(Schemes, ZeroDataStaysZero) {
    const auto mesh = build_uniform_mesh(0.5, 5);
    for (auto model : {FlowModel::Stokes, FlowModel::NavierStokes}) {
        const auto tr = solve(space4(), base_spec(model), mesh, 2);
        EXPECT_EQ(max_abs(tr), 0.0);
        if (model == FlowModel::NavierStokes)
            for (const auto& s : tr.steps) EXPECT_EQ(s.newton_iterations, 1);
    }
}

TEST(Schemes, SchemeTagsMarkEulerPrefix) {
    auto spec = base_spec(FlowModel::Stokes);
    spec.forcing = problems::ramped_swirl();
    const auto mesh = build_alternating_mesh(0.5, 0.05, {0.8, 1.2});
    for (std::size_t n0 : {0u, 1u, 3u}) {
        const auto tr = stokes_cn_solve(space4(), spec, mesh, n0);
        EXPECT_EQ(tr.euler_prefix(), n0);
        for (std::size_t n = 1; n <= mesh.intervals(); ++n)
            EXPECT_EQ(tr.scheme(n), n <= n0 ? SchemeTag::ImplicitEuler : SchemeTag::CrankNicolson);
    }
    EXPECT_STREQ(to_string(SchemeTag::ImplicitEuler), "IE");
    EXPECT_STREQ(to_string(SchemeTag::CrankNicolson), "CN");
    EXPECT_THROW(stokes_cn_solve(space4(), spec, mesh, mesh.intervals()), InvalidArgument);
}

TEST(Schemes, HybridWithoutPrefixIsPlainCrankNicolson) {
    auto spec = base_spec(FlowModel::NavierStokes);
    spec.forcing = problems::ramped_swirl(2.0);
    const auto mesh = build_alternating_mesh(0.5, 0.05, {0.8, 1.2});
    const auto hybrid = solve(space4(), spec, mesh, 0);
    const auto plain = nse_cn_solve(space4(), spec, mesh);
    for (std::size_t n = 1; n <= mesh.intervals(); ++n) {
        EXPECT_EQ(hybrid.velocity.at_node(n), plain.velocity.at_node(n));
        EXPECT_EQ(hybrid.pressure.on_interval(n), plain.pressure.on_interval(n));
    }
    auto stokes = spec;
    stokes.model = FlowModel::Stokes;
    const auto a = solve(space4(), stokes, mesh, 0);
    const auto b = stokes_cn_solve(space4(), spec, mesh, 0);
    EXPECT_EQ(a.velocity.at_node(mesh.intervals()), b.velocity.at_node(mesh.intervals()));
}

TEST(Schemes, NavierStokesApproachesStokesForSmallData) {
    // Scaling all data by eps changes the nonlinear solution by O(eps^2) relative to Stokes.
    const auto mesh = build_uniform_mesh(0.3, 6);
    std::vector<double> gaps;
    for (double eps : {1e-3, 1e-4}) {
        auto spec = base_spec(FlowModel::NavierStokes, 0.05, 0.3);
        spec.forcing = problems::ramped_swirl(eps * 50.0);
        spec.initial = InitialData::interpolate([eps](const fem::Point& p) {
            const double b = (1 - p.x() * p.x()) * (1 - p.y() * p.y());
            return Eigen::Vector2d(eps * b, -eps * b * p.x());
        });
        const auto nse = nse_cn_solve(space4(), spec, mesh, 1);
        const auto stokes = stokes_cn_solve(space4(), spec, mesh, 1);
        double gap = 0.0;
        for (std::size_t n = 0; n <= mesh.intervals(); ++n)
            gap = std::max(gap, (nse.velocity.at_node(n) - stokes.velocity.at_node(n)).norm());
        gaps.push_back(gap);
    }
    EXPECT_GT(gaps[0], 0.0);
    EXPECT_NEAR(gaps[0] / gaps[1], 100.0, 10.0);
}

TEST(Schemes, StokesEnergyDecaysWithoutForcing) {
    auto spec = base_spec(FlowModel::Stokes, 0.05, 1.0);
    spec.initial = InitialData::stationary(problems::quadrant_swirl());
    const auto mesh = build_alternating_mesh(1.0, 0.1, {0.8, 1.2});
    const auto tr = stokes_cn_solve(space4(), spec, mesh, 0);
    const FlowSolver solver(space4(), spec.viscosity);
    double previous = INFINITY;
    for (std::size_t n = 0; n <= mesh.intervals(); ++n) {
        const auto& u = tr.velocity.at_node(n);
        const double energy = u.dot(solver.mass() * u);
        EXPECT_LE(energy, previous);
        previous = energy;
    }
    EXPECT_GT(previous, 0.0);
}

TEST(Schemes, StationaryGradientForcingIsAbsorbedByPressure) {
    // f = grad q with q = x + 2y + 3 in the pressure space: u = 0 and p = q minus its mean.
    const auto st = stationary_nse_solve(space4(), 0.01,
                                         [](const fem::Point&) { return Eigen::Vector2d(1.0, 2.0); });
    EXPECT_LE(st.velocity.cwiseAbs().maxCoeff(), 1e-8);
    const Eigen::VectorXd q = space4().interpolate_pressure([](const fem::Point& p) { return p.x() + 2 * p.y(); });
    EXPECT_LE((st.pressure - q).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Schemes, StationaryZeroForcingGivesZero) {
    const auto st = stationary_nse_solve(space4(), 0.01, nullptr);
    EXPECT_EQ(st.velocity.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(st.pressure.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Schemes, ConstantForcingReachesStationarySolution) {
    const SpatialField f0 = problems::quadrant_swirl(2.0);
    auto spec = base_spec(FlowModel::NavierStokes, 1.0, 6.0);
    spec.forcing = [f0](const fem::Point& p, double) { return f0(p); };
    // Implicit Euler damps every mode; Crank-Nicolson leaves stiff modes nearly undamped.
    const auto tr = nse_cn_solve(space4(), spec, build_uniform_mesh(6.0, 30), 29);
    const auto st = stationary_nse_solve(space4(), 1.0, f0);
    const auto& uT = tr.velocity.at_node(30);
    EXPECT_GT(st.velocity.norm(), 1e-3);
    EXPECT_LE((uT - st.velocity).norm(), 1e-8 * st.velocity.norm());
    EXPECT_LE((tr.pressure.on_interval(30) - st.pressure).norm(), 1e-6 * st.pressure.norm());
}

TEST(Schemes, NewtonConvergesQuadratically) {
    auto spec = base_spec(FlowModel::NavierStokes, 0.01, 0.2);
    spec.initial = InitialData::stationary(problems::quadrant_swirl());
    const auto tr = nse_cn_solve(space4(), spec, build_uniform_mesh(0.2, 2), 0);
    for (const auto& s : tr.steps) {
        EXPECT_LE(s.newton_iterations, 5);
        EXPECT_LE(s.residual, 1e-10);
    }
}

TEST(Schemes, NewtonFailureNamesTheStep) {
    auto spec = base_spec(FlowModel::NavierStokes, 0.01, 0.2);
    spec.initial = InitialData::values(stationary_nse_solve(space4(), 0.01, problems::quadrant_swirl()).velocity, true);
    try {
        nse_cn_solve(space4(), spec, build_uniform_mesh(0.2, 2), 0, NewtonConfig{1e-10, 1});
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.step(), 1u);
        EXPECT_EQ(e.iterations(), 1);
        EXPECT_GT(e.residual(), 1e-10);
    }
}

TEST(Schemes, CrankNicolsonIsSecondOrderAndEulerFirstOrder) {
    // Temporal self-convergence on a fixed spatial mesh against a fine CN solution.
    const problems::ManufacturedStokes mms(0.1);
    auto spec = base_spec(FlowModel::Stokes, 0.1, 1.0);
    spec.forcing = mms.forcing_field();
    const auto ref = stokes_cn_solve(space4(), spec, build_uniform_mesh(1.0, 1280));
    const ErrorEvaluator ev(space4());
    std::vector<double> ks, cn, ie;
    for (long long N : {20, 40, 80}) {
        const auto mesh = build_uniform_mesh(1.0, N);
        ks.push_back(mesh.max_step());
        const ErrorSpec s{NormId::PressureLinfl2};
        cn.push_back(ev(stokes_cn_solve(space4(), spec, mesh, 0), ref, s));
        ie.push_back(ev(stokes_cn_solve(space4(), spec, mesh, N - 1), ref, s));
    }
    EXPECT_NEAR(fit_rate(ks, cn).slope, 2.0, 0.15);
    EXPECT_NEAR(fit_rate(ks, ie).slope, 1.0, 0.15);
}

TEST(Schemes, ForcingIntegralIsExactForQuadraticsInTime) {
    const FlowSolver solver(space4(), 1.0);
    const SpaceTimeField f = [](const fem::Point& p, double t) { return Eigen::Vector2d(t * t * p.x(), 1.0 - t); };
    const auto a = solver.forcing_integral(f, 0.5, 1.5);
    // int_{0.5}^{1.5} t^2 dt = 13/12 and int (1 - t) dt = 0.
    const auto b = solver.assembler().load([](const fem::Point& p) { return Eigen::Vector2d(13.0 / 12.0 * p.x(), 0.0); });
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(solver.forcing_integral(nullptr, 0.0, 1.0).norm(), 0.0);
}

TEST(Reference, PreconditionsAndEulerPrefix) {
    auto spec = base_spec(FlowModel::Stokes, 0.1, 0.2);
    EXPECT_THROW(reference_solve(space4(), spec, build_alternating_mesh(0.2, 0.02, {0.8, 1.2})), InvalidArgument);
    EXPECT_THROW(reference_solve(space4(), spec, build_uniform_mesh(0.2, 20), 0.05), InvalidArgument);
    EXPECT_EQ(reference_solve(space4(), spec, build_uniform_mesh(0.2, 20), 0.08).euler_prefix(), 0u);
    spec.initial = InitialData::stationary(problems::quadrant_swirl());
    EXPECT_EQ(reference_solve(space4(), spec, build_uniform_mesh(0.2, 20)).euler_prefix(), 2u);
}

TEST(Reference, ExportWritesManifestAndData) {
    auto spec = base_spec(FlowModel::Stokes, 0.1, 0.2);
    spec.forcing = problems::ramped_swirl();
    spec.forcing_id = "swirl_ramp";
    const auto tr = stokes_cn_solve(space4(), spec, build_uniform_mesh(0.2, 4), 1);
    const auto dir = std::filesystem::temp_directory_path() / "cnpressure_export_test";
    std::filesystem::remove_all(dir);
    export_trajectory(dir, tr, spec, space4());
    std::ifstream manifest(dir / "manifest.txt");
    std::string text((std::istreambuf_iterator<char>(manifest)), {});
    EXPECT_NE(text.find("schemes = IE,CN,CN,CN"), std::string::npos);
    EXPECT_NE(text.find("forcing = swirl_ramp"), std::string::npos);
    std::ifstream pressure(dir / "pressure.txt");
    int lines = 0;
    for (std::string l; std::getline(pressure, l);) ++lines;
    EXPECT_EQ(lines, 4);
    std::filesystem::remove_all(dir);
}
