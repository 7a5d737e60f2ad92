#include "kmmr/datagen.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "kmmr/error.hpp"

namespace kmmr::datagen {

namespace {

constexpr double kNoiseSd = 0.1;

struct RawSplit {
    Vector X;
    Vector Y;
    Matrix Z;
};

RawSplit draw(const ScenarioSpec& spec, numerics::Rng rng) {
    RawSplit raw{Vector(spec.n), Vector(spec.n), Matrix(spec.n, spec.d)};
    const double noise_gain = spec.noiseless ? 0.0 : 1.0;
    for (int i = 0; i < spec.n; ++i) {
        double g_sum = 0.0;
        for (int k = 0; k < spec.d; ++k) {
            const double z = rng.uniform(-3.0, 3.0);
            raw.Z(i, k) = z;
            g_sum += spec.scenario == Scenario::NS ? std::sin(z) : z;
        }
        const double e = noise_gain * rng.normal();
        const double gamma = noise_gain * rng.normal(0.0, kNoiseSd);
        const double delta = noise_gain * rng.normal(0.0, kNoiseSd);
        const double x = g_sum / spec.d + e + gamma;
        raw.X[i] = x;
        raw.Y[i] = true_function_value(spec.true_function, x) + e + delta;
    }
    return raw;
}

Dataset finish(RawSplit raw, double y_mean, double y_std, Split split) {
    Dataset ds;
    ds.X = std::move(raw.X);
    ds.Y = (raw.Y.array() - y_mean) / y_std;
    ds.Z = std::move(raw.Z);
    ds.y_mean = y_mean;
    ds.y_std = y_std;
    ds.split = split;
    return ds;
}

}  // namespace

std::string to_string(TrueFunction f) {
    switch (f) {
        case TrueFunction::Abs: return "abs";
        case TrueFunction::Linear: return "linear";
        case TrueFunction::Quad: return "quad";
        case TrueFunction::Sin: return "sin";
    }
    return {};
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::LS: return "LS";
        case Scenario::LW: return "LW";
        case Scenario::NS: return "NS";
    }
    return {};
}

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        case Split::Test: return "test";
    }
    return {};
}

TrueFunction parse_true_function(const std::string& name) {
    if (name == "abs") return TrueFunction::Abs;
    if (name == "linear") return TrueFunction::Linear;
    if (name == "quad" || name == "quadratic") return TrueFunction::Quad;
    if (name == "sin") return TrueFunction::Sin;
    throw ConfigError("unknown true function '" + name + "' (expected abs, linear, quad, sin)");
}

Scenario parse_scenario(const std::string& name) {
    if (name == "LS") return Scenario::LS;
    if (name == "LW") return Scenario::LW;
    if (name == "NS") return Scenario::NS;
    throw ConfigError("unknown scenario '" + name + "' (expected LS, LW, NS)");
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "valid") return Split::Valid;
    if (name == "test") return Split::Test;
    throw ConfigError("unknown split '" + name + "'");
}

double true_function_value(TrueFunction f, double x) {
    switch (f) {
        case TrueFunction::Abs: return std::abs(x);
        case TrueFunction::Linear: return x;
        case TrueFunction::Quad: return x * x + x;
        case TrueFunction::Sin: return std::sin(x);
    }
    return 0.0;
}

double true_function_value(const std::string& name, double x) {
    return true_function_value(parse_true_function(name), x);
}

int default_dimension(Scenario s) { return s == Scenario::LW ? 6 : 1; }

void ScenarioSpec::validate() const {
    if (d < 1) throw ConfigError("instrument dimension d must be >= 1");
    if (n < 2) throw ConfigError("sample size n must be >= 2");
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    const auto m = static_cast<Eigen::Index>(rows.size());
    out.X.resize(m);
    out.Y.resize(m);
    out.Z.resize(m, Z.cols());
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto src = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
        out.X[r] = X[src];
        out.Y[r] = Y[src];
        out.Z.row(r) = Z.row(src);
    }
    out.y_mean = y_mean;
    out.y_std = y_std;
    out.split = split;
    return out;
}

DataSplits generate(const ScenarioSpec& spec) {
    spec.validate();
    const numerics::Rng root(spec.seed);
    RawSplit train = draw(spec, root.substream("train"));
    RawSplit valid = draw(spec, root.substream("valid"));
    RawSplit test = draw(spec, root.substream("test"));

    const std::span<const double> ys(train.Y.data(), static_cast<std::size_t>(train.Y.size()));
    const double y_mean = numerics::mean(ys);
    double y_std = numerics::sample_std(ys);
    if (!(y_std > 0.0)) y_std = 1.0;  // constant Y (e.g. noiseless constant f*): centre only

    return DataSplits{finish(std::move(train), y_mean, y_std, Split::Train),
                      finish(std::move(valid), y_mean, y_std, Split::Valid),
                      finish(std::move(test), y_mean, y_std, Split::Test)};
}

void write_csv(const Dataset& ds, std::ostream& out) {
    out << "x,y";
    for (Eigen::Index k = 0; k < ds.dim(); ++k) out << ",z" << (k + 1);
    out << ",split\n";
    const std::string tag = to_string(ds.split);
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        out << numerics::format_double(ds.X[i]) << ',' << numerics::format_double(ds.Y[i]);
        for (Eigen::Index k = 0; k < ds.dim(); ++k) out << ',' << numerics::format_double(ds.Z(i, k));
        out << ',' << tag << '\n';
    }
}

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("read_csv: empty input");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 4 || header[0] != "x" || header[1] != "y" || header.back() != "split") {
        throw IoError("read_csv: header must be x,y,z1..zd,split");
    }
    const std::size_t d = header.size() - 3;
    for (std::size_t k = 0; k < d; ++k) {
        if (header[2 + k] != "z" + std::to_string(k + 1)) {
            throw IoError("read_csv: unexpected column '" + header[2 + k] + "'");
        }
    }
    std::vector<std::vector<double>> rows;
    std::string split_tag = "train";
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != header.size()) throw IoError("read_csv: ragged row");
        std::vector<double> row(d + 2);
        for (std::size_t c = 0; c < d + 2; ++c) {
            const std::string& s = cells[c];
            auto res = std::from_chars(s.data(), s.data() + s.size(), row[c]);
            if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
                throw IoError("read_csv: bad number '" + s + "'");
            }
        }
        split_tag = cells.back();
        rows.push_back(std::move(row));
    }
    Dataset ds;
    const auto n = static_cast<Eigen::Index>(rows.size());
    ds.X.resize(n);
    ds.Y.resize(n);
    ds.Z.resize(n, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        ds.X[i] = row[0];
        ds.Y[i] = row[1];
        for (std::size_t k = 0; k < d; ++k) ds.Z(i, static_cast<Eigen::Index>(k)) = row[2 + k];
    }
    ds.split = parse_split(split_tag);
    return ds;
}

std::string metadata_json(const ScenarioSpec& spec, const DataSplits& splits) {
    nlohmann::ordered_json j;
    j["seed"] = spec.seed;
    j["scenario"] = to_string(spec.scenario);
    j["f_star"] = to_string(spec.true_function);
    j["d"] = spec.d;
    j["n"] = spec.n;
    j["y_mean"] = splits.train.y_mean;
    j["y_std"] = splits.train.y_std;
    return j.dump(2) + "\n";
}

}  // namespace kmmr::datagen
