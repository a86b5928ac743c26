#include <doctest.h>

#include "charrnet/config.hpp"
#include "charrnet/errors.hpp"

using namespace charrnet;

TEST_CASE("minimal document takes every default") {
    const RunConfig c = parse_run_config(R"({"config_version": 1})");
    CHECK(c.dataset.population.n_devices == 10);
    CHECK(c.dataset.bursts_per_device_train == 200);
    CHECK(c.model.kind == ModelKind::charrnet);
    CHECK(c.model.stft.window_len == 64);
    CHECK(c.model.stft.beta == doctest::Approx(8.6));
    CHECK(c.train.optimizer == OptimizerKind::adam);
    CHECK(c.train.learning_rate == doctest::Approx(1e-3));
    CHECK(c.train.batch_size == 32);
    CHECK(c.train.epochs == 50);
    CHECK(c.verify.cases == 100);
    CHECK(c.eval.split == "test");
}

TEST_CASE("unknown keys are rejected at every level") {
    CHECK_THROWS_AS(parse_run_config(R"({"config_version": 1, "bogus": 0})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"config_version": 1, "model": {"stft": {"hopp": 8}}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"config_version": 1, "train": {"augmentation": {"snr": 3}}})"), ConfigError);
}

TEST_CASE("schema version is required and checked") {
    CHECK_THROWS_AS(parse_run_config("{}"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"config_version": 2})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
}

TEST_CASE("type and value errors name the offending key") {
    try {
        parse_run_config(R"({"config_version": 1, "train": {"epochs": "many"}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("epochs") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_run_config(R"({"config_version": 1, "model": {"kind": "resnet"}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"config_version": 1, "train": {"optimizer": "rmsprop"}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"config_version": 1, "dataset": {"train_tags": ["cave"]}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"config_version": 1, "train": {"learning_rate": -1}})"), ConfigError);
}

TEST_CASE("dump and parse round trip") {
    RunConfig c = parse_run_config(R"({"config_version": 1})");
    c.dataset.population.n_devices = 3;
    c.dataset.population_seed = 77;
    c.dataset.test_tags = {"pristine", "nLOS200", "rayleigh"};
    c.dataset.snr_db = 15.5;
    c.model.kind = ModelKind::baseline;
    c.model.backbone.channels = {8, 8};
    c.train.optimizer = OptimizerKind::sgd;
    c.train.augmentation.fading_specs = {{FadingModel::ricean, 4, 0.25, 6.0}, {FadingModel::rayleigh, 8, 0.5, {}}};
    c.train.augmentation.fresh_draws = false;
    c.verify.seed = 99;
    c.eval.split = "all";
    const std::string text = dump_run_config(c);
    const RunConfig back = parse_run_config(text);
    CHECK(dump_run_config(back) == text);
    CHECK(back.dataset.population_seed == std::optional<std::uint64_t>(77));
    CHECK(back.train.augmentation.fading_specs.size() == 2);
    CHECK(back.train.augmentation.fading_specs[0].k_factor_db == std::optional<double>(6.0));
    CHECK_FALSE(back.train.augmentation.fading_specs[1].k_factor_db.has_value());
}

TEST_CASE("infinite SNR is expressible") {
    const RunConfig c = parse_run_config(R"({"config_version": 1, "dataset": {"snr_db": "inf"}})");
    CHECK(std::isinf(c.dataset.snr_db));
    CHECK(parse_run_config(dump_run_config(c)).dataset.snr_db == c.dataset.snr_db);
}

TEST_CASE("model digest tracks architecture") {
    ModelConfig a;
    ModelConfig b = a;
    CHECK(config_digest(a) == config_digest(b));
    b.equivariant.filters = 4;
    CHECK(config_digest(a) != config_digest(b));
    CHECK(parse_model_config(dump_model_config(b)).equivariant.filters == 4);
}

TEST_CASE("init seed does not enter the digest") {
    ModelConfig a;
    ModelConfig b = a;
    b.init_seed = 12345;
    CHECK(config_digest(a) == config_digest(b));
}

TEST_CASE("shipped configs parse, and the default file matches built-in defaults") {
    const RunConfig def = load_run_config(CHARRNET_CONFIG_DIR "/default.json");
    CHECK(dump_run_config(def) == dump_run_config(RunConfig{}));
    CHECK(load_run_config(CHARRNET_CONFIG_DIR "/smoke.json").dataset.population.n_devices == 4);
    CHECK_THROWS_AS(load_run_config(CHARRNET_CONFIG_DIR "/absent.json"), IoError);
}
