#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

using namespace testutil;

#ifndef SDGG_CLI_PATH
#error "SDGG_CLI_PATH must be defined by the build"
#endif

namespace {

int run(const std::string& args) {
    std::string cmd = std::string(SDGG_CLI_PATH) + " " + args +
                      " >/dev/null 2>/dev/null";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("gradcheck subcommand exits zero") {
    CHECK(run("gradcheck") == 0);
}

TEST_CASE("config errors exit with code two") {
    CHECK(run("train --set no_such_key=1") == 2);
    CHECK(run("train --set epochs=abc") == 2);
}

TEST_CASE("data errors exit with code three") {
    TempDir dir("cli_nodata");
    CHECK(run("train --set dataset_dir=" + dir.path.string() +
              " --set dataset_name=missing --out " +
              (dir.path / "out").string()) == 3);
}

TEST_CASE("train then eval round trip on a tiny dataset") {
    TempDir dir("cli_train");
    write_synth_tu(dir.path / "data", "synth", 6, 31);
    std::string common = " --set dataset_dir=" + (dir.path / "data").string() +
                         " --set dataset_name=synth --set epochs=5"
                         " --set K=2 --set agg_dim=8 --set latent_dim=4";
    std::string out = (dir.path / "out").string();
    REQUIRE(run("train" + common + " --out " + out) == 0);
    for (const char* name :
         {"checkpoint.json", "metrics.json", "train_log.jsonl", "scores.csv"})
        CHECK(std::filesystem::exists(dir.path / "out" / name));

    std::ifstream log(dir.path / "out" / "train_log.jsonl");
    std::string line;
    std::size_t epochs = 0;
    while (std::getline(log, line)) {
        nlohmann::json j = nlohmann::json::parse(line);
        CHECK(j.contains("total_loss"));
        ++epochs;
    }
    CHECK(epochs == 5);

    std::string eval_out = (dir.path / "eval_out").string();
    CHECK(run("eval" + common + " --set checkpoint=" + out +
              "/checkpoint.json --out " + eval_out) == 0);
    CHECK(std::filesystem::exists(dir.path / "eval_out" / "metrics.json"));
}

TEST_CASE("simulate-2d writes the boundary grid") {
    TempDir dir("cli_sim");
    std::string out = (dir.path / "out").string();
    REQUIRE(run("simulate-2d --set sim_samples=100 --set sim_epochs=20"
                " --set sim_resolution=20 --out " +
                out) == 0);
    std::ifstream csv(dir.path / "out" / "boundary.csv");
    REQUIRE(csv.good());
    std::string header;
    std::getline(csv, header);
    CHECK(header == "z,x,score");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 400);
}
