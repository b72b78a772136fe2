#include <cstdlib>

#include "doctest.h"
#include "helpers.hpp"
#include "sdgg/run_config.hpp"

using namespace sdgg;
using namespace testutil;

TEST_CASE("empty input yields the documented defaults") {
    RunConfig cfg = parse_config("", {});
    CHECK(cfg.train.method == Method::NAT);
    CHECK(cfg.train.lambda == 1.0);
    CHECK(cfg.train.gamma == 1e-5);
    CHECK(cfg.train.clip == 0.01);
    CHECK(cfg.train.lr == 1e-3);
    CHECK(cfg.train.epochs == 300);
    CHECK(cfg.train.batch_size == 4);
    CHECK(cfg.train.K == 3);
    CHECK(cfg.train.agg_dim == 16);
    CHECK(cfg.train.latent_dim == 10);
    CHECK(cfg.trials == 3);
    CHECK(cfg.train_fraction == 0.8);
    CHECK(cfg.normal_classes == std::vector<int>{0});
}

TEST_CASE("a single override leaves everything else untouched") {
    RunConfig cfg = parse_config("", {"lambda=10"});
    CHECK(cfg.train.lambda == 10.0);
    CHECK(cfg.train.gamma == 1e-5);
    CHECK(cfg.train.epochs == 300);
}

TEST_CASE("file values are overlaid by overrides") {
    TempDir dir("cfg");
    write_file(dir.path / "run.cfg",
               "# comment line\n"
               "method = ATII\n"
               "lambda = 0.1\n"
               "epochs = 50\n"
               "normal_class = 0, 2\n");
    RunConfig cfg =
        parse_config((dir.path / "run.cfg").string(), {"lambda=5"});
    CHECK(cfg.train.method == Method::ATII);
    CHECK(cfg.train.lambda == 5.0);
    CHECK(cfg.train.epochs == 50);
    CHECK(cfg.normal_classes == std::vector<int>{0, 2});
}

TEST_CASE("type errors name the key") {
    try {
        parse_config("", {"epochs=abc"});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("epochs") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("", {"no_such_key=1"}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {"not-a-pair"}), ConfigError);
    CHECK_THROWS_AS(parse_config("/nonexistent/path.cfg", {}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {"train_fraction=1.5"}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {"epochs=0"}), ConfigError);
}

TEST_CASE("optimizer defaults to the method's pairing") {
    CHECK(parse_config("", {"method=NAT"}).train.optimizer ==
          OptimizerKind::Adam);
    CHECK(parse_config("", {"method=ATI"}).train.optimizer ==
          OptimizerKind::RmsProp);
    CHECK(parse_config("", {"method=ATII"}).train.optimizer ==
          OptimizerKind::RmsProp);
    CHECK(parse_config("", {"method=ATI", "optimizer=adam"}).train.optimizer ==
          OptimizerKind::Adam);
}

TEST_CASE("environment seed wins over the config") {
    ::setenv("SDGG_SEED", "12345", 1);
    RunConfig cfg = parse_config("", {"seed=1"});
    ::unsetenv("SDGG_SEED");
    CHECK(cfg.train.seed == 12345);
}
