#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "kmmr/datagen.hpp"
#include "kmmr/error.hpp"
#include "oracles.hpp"

using namespace kmmr;
using datagen::Scenario;
using datagen::ScenarioSpec;
using datagen::TrueFunction;

namespace {

ScenarioSpec make_spec(TrueFunction f, Scenario s, int n, std::uint64_t seed = 527) {
    ScenarioSpec spec;
    spec.true_function = f;
    spec.scenario = s;
    spec.d = datagen::default_dimension(s);
    spec.n = n;
    spec.seed = seed;
    return spec;
}

Vector raw_y(const datagen::Dataset& ds) { return (ds.Y.array() * ds.y_std + ds.y_mean).matrix(); }

}  // namespace

TEST_CASE("true function values") {
    CHECK(datagen::true_function_value("quad", 2.0) == 6.0);
    CHECK(datagen::true_function_value("abs", -3.0) == 3.0);
    CHECK(datagen::true_function_value("sin", 0.0) == 0.0);
    CHECK(datagen::true_function_value("linear", -1.5) == -1.5);
    CHECK(datagen::true_function_value(TrueFunction::Sin, 1.0) == std::sin(1.0));
    CHECK_THROWS_AS((void)datagen::true_function_value("cubic", 1.0), ConfigError);
    CHECK(datagen::parse_true_function("quadratic") == TrueFunction::Quad);
    CHECK_THROWS_AS((void)datagen::parse_scenario("XX"), ConfigError);
}

TEST_CASE("splits have n rows and share train standardization") {
    const auto s = datagen::generate(make_spec(TrueFunction::Linear, Scenario::LS, 200));
    CHECK(s.train.size() == 200);
    CHECK(s.valid.size() == 200);
    CHECK(s.test.size() == 200);
    CHECK(std::abs(s.train.Y.mean()) < 1e-10);
    const double sd = std::sqrt((s.train.Y.array() - s.train.Y.mean()).square().sum() / 199.0);
    CHECK(std::abs(sd - 1.0) < 1e-10);
    CHECK(s.valid.y_mean == s.train.y_mean);
    CHECK(s.test.y_std == s.train.y_std);
    CHECK(s.train.split == datagen::Split::Train);
    CHECK(s.test.split == datagen::Split::Test);
    // the splits are independent draws
    CHECK(s.train.X[0] != s.valid.X[0]);
}

TEST_CASE("instrument strength by scenario") {
    const auto ls = datagen::generate(make_spec(TrueFunction::Linear, Scenario::LS, 1000));
    const double corr_ls = oracle::pearson(ls.train.X, ls.train.Z.col(0));
    CHECK(corr_ls > 0.5);

    const auto lw = datagen::generate(make_spec(TrueFunction::Linear, Scenario::LW, 1000));
    CHECK(lw.train.dim() == 6);
    for (int k = 0; k < 6; ++k) CHECK(oracle::pearson(lw.train.X, lw.train.Z.col(k)) < corr_ls);
}

TEST_CASE("noiseless hook gives exact structural equations") {
    for (auto scen : {Scenario::LS, Scenario::LW, Scenario::NS}) {
        auto spec = make_spec(TrueFunction::Quad, scen, 50);
        spec.noiseless = true;
        const auto s = datagen::generate(spec);
        const Vector y = raw_y(s.train);
        for (Eigen::Index i = 0; i < 50; ++i) {
            double gmean = 0.0;
            for (int k = 0; k < spec.d; ++k) {
                const double z = s.train.Z(i, k);
                gmean += scen == Scenario::NS ? std::sin(z) : z;
            }
            gmean /= spec.d;
            CHECK(s.train.X[i] == doctest::Approx(gmean).epsilon(1e-12));
            CHECK(y[i] == doctest::Approx(s.train.X[i] * s.train.X[i] + s.train.X[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("noiseless draws consume the same stream as noisy ones") {
    auto spec = make_spec(TrueFunction::Linear, Scenario::LS, 30);
    const auto noisy = datagen::generate(spec);
    spec.noiseless = true;
    const auto clean = datagen::generate(spec);
    CHECK(noisy.train.Z == clean.train.Z);
}

TEST_CASE("generation is bit-reproducible and seed-sensitive") {
    const auto a = datagen::generate(make_spec(TrueFunction::Abs, Scenario::LW, 100, 7));
    const auto b = datagen::generate(make_spec(TrueFunction::Abs, Scenario::LW, 100, 7));
    const auto c = datagen::generate(make_spec(TrueFunction::Abs, Scenario::LW, 100, 8));
    CHECK(a.train.X == b.train.X);
    CHECK(a.test.Y == b.test.Y);
    CHECK(a.valid.Z == b.valid.Z);
    CHECK(a.train.X != c.train.X);
}

TEST_CASE("the shared error term confounds X and Y") {
    const auto s = datagen::generate(make_spec(TrueFunction::Linear, Scenario::LS, 5000));
    const Vector y = raw_y(s.train);
    Vector resid(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) resid[i] = y[i] - s.train.X[i];
    // e has variance 1 in both equations; the correlation is well above 0.3
    CHECK(oracle::pearson(s.train.X, resid) > 0.3);
}

TEST_CASE("CSV round trip and schema") {
    const auto s = datagen::generate(make_spec(TrueFunction::Sin, Scenario::LW, 20));
    std::ostringstream out;
    datagen::write_csv(s.test, out);
    const std::string text = out.str();
    CHECK(text.rfind("x,y,z1,z2,z3,z4,z5,z6,split\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 21);
    std::istringstream in(text);
    const auto back = datagen::read_csv(in);
    CHECK(back.X == s.test.X);
    CHECK(back.Y == s.test.Y);
    CHECK(back.Z == s.test.Z);
    CHECK(back.split == datagen::Split::Test);

    std::istringstream bad("x,y\n1,2\n");
    CHECK_THROWS_AS((void)datagen::read_csv(bad), Error);
}

TEST_CASE("metadata record") {
    const auto spec = make_spec(TrueFunction::Linear, Scenario::LS, 100);
    const auto s = datagen::generate(spec);
    const auto j = nlohmann::json::parse(datagen::metadata_json(spec, s));
    CHECK(j.at("seed").get<std::uint64_t>() == 527);
    CHECK(j.at("y_mean").get<double>() == s.train.y_mean);
    CHECK(j.at("y_std").get<double>() == s.train.y_std);
    CHECK(j.at("scenario").get<std::string>() == "LS");
}

TEST_CASE("spec validation") {
    auto spec = make_spec(TrueFunction::Linear, Scenario::LS, 0);
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.n = 10;
    spec.d = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.d = 2;  // d is configurable for any scenario
    CHECK_NOTHROW(spec.validate());
}
