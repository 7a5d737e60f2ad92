#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "kmmr_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string(KMMR_CLI_PATH) + " " + args + " > " +
                            (workdir() / "stdout.txt").string() + " 2> " +
                            (workdir() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

long lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

std::string out(const std::string& name) { return (workdir() / name).string(); }

}  // namespace

TEST_CASE("generate writes three CSVs and metadata, reproducibly") {
    REQUIRE(run("generate --scenario LS --f-star linear --n 100 --seed 527 --out " + out("gen")) == 0);
    for (const char* split : {"train", "valid", "test"}) {
        const auto text = slurp(workdir() / "gen" / (std::string(split) + ".csv"));
        CHECK(lines(text) == 101);
        CHECK(text.rfind("x,y,z1,split\n", 0) == 0);
    }
    const auto meta = nlohmann::json::parse(slurp(workdir() / "gen" / "metadata.json"));
    CHECK(meta.at("seed").get<int>() == 527);

    const auto first = slurp(workdir() / "gen" / "train.csv");
    REQUIRE(run("generate --scenario LS --f-star linear --n 100 --seed 527 --out " + out("gen")) == 0);
    CHECK(slurp(workdir() / "gen" / "train.csv") == first);

    REQUIRE(run("generate --scenario LW --n 10 --out " + out("genlw")) == 0);
    CHECK(slurp(workdir() / "genlw" / "test.csv").rfind("x,y,z1,z2,z3,z4,z5,z6,split\n", 0) == 0);
}

TEST_CASE("config files and exit codes") {
    {
        std::ofstream cfg(workdir() / "bad.cfg");
        cfg << "scenario = LS\nbandwidth = 2\n";
    }
    CHECK(run("generate --config " + out("bad.cfg")) == 2);
    CHECK(run("select --alpha 2") == 2);
    CHECK(run("generate --set nonsense=1") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("generate --config " + out("missing.cfg")) == 1);

    {
        std::ofstream cfg(workdir() / "good.cfg");
        cfg << "scenario = NS\nf_star = sin\nn = 40\nseed = 3\n";
    }
    REQUIRE(run("generate --config " + out("good.cfg") + " --n 30 --out " + out("cfg")) == 0);
    CHECK(lines(slurp(workdir() / "cfg" / "train.csv")) == 31);
    CHECK(nlohmann::json::parse(slurp(workdir() / "cfg" / "metadata.json")).at("seed").get<int>() == 3);
}

TEST_CASE("select prints the table and writes the report") {
    REQUIRE(run("select --n 200 --model poly:2 --out " + out("sel")) == 0);
    const auto stdout_text = slurp(workdir() / "stdout.txt");
    CHECK(stdout_text.find("chosen: ") != std::string::npos);
    CHECK(stdout_text.find("P2-1") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(workdir() / "sel" / "selection.json"));
    CHECK(j.at("candidates").size() == 10);
    const auto csv = slurp(workdir() / "sel" / "candidates.csv");
    CHECK(csv.rfind("label,itc,identifiable,keic,ratio,chosen\n", 0) == 0);
    CHECK(lines(csv) == 11);
}

TEST_CASE("experiment writes per-run and aggregate tables deterministically") {
    const std::string args =
        "experiment -q --scenario LS,NS --f-star abs --n 60 --replications 1 --model poly:2 --out ";
    REQUIRE(run(args + out("exp1")) == 0);
    REQUIRE(run(args + out("exp2") + " --jobs 2") == 0);
    for (const char* f : {"runs_n60.csv", "aggregate_n60.csv", "record_n60.json"}) {
        CHECK(slurp(workdir() / "exp1" / f) == slurp(workdir() / "exp2" / f));
    }
    const auto runs = slurp(workdir() / "exp1" / "runs_n60.csv");
    CHECK(runs.rfind("scenario,f_star,method,rep,mse,chosen_label,path\n", 0) == 0);
    CHECK(lines(runs) == 1 + 2 * 3);
    const auto agg = slurp(workdir() / "exp1" / "aggregate_n60.csv");
    // one replication: zero spread
    std::istringstream in(agg);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) CHECK(line.substr(line.rfind(',') + 1) == "0");
    CHECK(slurp(workdir() / "stdout.txt").find("±") != std::string::npos);
}

TEST_CASE("plotdata writes normalized ITC") {
    REQUIRE(run("plotdata --n 80,120 --replications 1 --model poly:2 --out " + out("plot")) == 0);
    const auto csv = slurp(workdir() / "plot" / "plotdata.csv");
    CHECK(csv.rfind("scenario,f_star,n,rep,label,itc,normalized,identifiable\n", 0) == 0);
    CHECK(lines(csv) == 1 + 2 * 11);
    CHECK(csv.find(",threshold,") != std::string::npos);
}
