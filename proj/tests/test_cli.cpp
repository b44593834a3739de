#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mmdgm/config.hpp"
#include "mmdgm/metrics.hpp"
#include "mmdgm/pgm.hpp"
#include "testutil.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace mmdgm;

TEST_CASE("config parsing: precedence, comments, defaults")
{
    const std::string text =
        "# a comment line\n"
        "C = 1000\n"
        "hidden = 64, 64   # trailing comment\n"
        "\n"
        "seed = 7\n";

    const RunConfig cfg = parse_config(text, {{"C", "10"}});
    CHECK(cfg.C == 10.0);
    CHECK(cfg.hidden == std::vector<int>{64, 64});
    CHECK(cfg.seed == 7);

    const RunConfig defaults = parse_config("", {});
    CHECK(defaults.C == 0.0);
    CHECK(defaults.latent_dim == 50);
    CHECK(defaults.hidden == std::vector<int>{500, 500});
    CHECK(defaults.batch_size == 100);
    CHECK(defaults.mc_samples == 1);
    CHECK(defaults.sigma2_eta == 1e3);
}

TEST_CASE("config parsing: errors name the offender")
{
    CHECK_THROWS_WITH_AS(parse_config("foo = 1\n", {}), doctest::Contains("foo"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("C = abc\n", {}), doctest::Contains("C"), ConfigError);
    CHECK_THROWS_AS(parse_config("justtext\n", {}), ConfigError);
    CHECK_THROWS_AS(parse_config("act = relu\n", {}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {{"nope", "1"}}), ConfigError);
}

TEST_CASE("resolved config text parses back to the same configuration")
{
    RunConfig cfg = parse_config("", {});
    cfg.C = 12.5;
    cfg.hidden = {32, 16};
    cfg.csweep_values = {0, 2.5, 100};
    cfg.seed = 99;
    cfg.mask = "rand_drop:0.4";

    const RunConfig round = parse_config(resolved_config_text(cfg), {});
    CHECK(round.C == cfg.C);
    CHECK(round.hidden == cfg.hidden);
    CHECK(round.csweep_values == cfg.csweep_values);
    CHECK(round.seed == cfg.seed);
    CHECK(round.mask == cfg.mask);
    CHECK(resolved_config_text(round) == resolved_config_text(cfg));
}

TEST_CASE("mask specs")
{
    const MaskSpec r = parse_mask_spec("rect:12x12");
    CHECK(r.kind == MaskSpec::Kind::Rect);
    CHECK(r.rect_h == 12);
    CHECK(r.rect_w == 12);

    const MaskSpec d = parse_mask_spec("rand_drop:0.6");
    CHECK(d.kind == MaskSpec::Kind::RandDrop);
    CHECK(d.drop_prob == 0.6);

    CHECK(parse_mask_spec("none").kind == MaskSpec::Kind::None);
    CHECK_THROWS_AS(parse_mask_spec("rect:12"), ConfigError);
    CHECK_THROWS_AS(parse_mask_spec("blob:3"), ConfigError);
    CHECK_THROWS_AS(parse_mask_spec("rand_drop:1.5"), ConfigError);
}

TEST_CASE("pgm grid layout and quantization")
{
    const std::string path = testutil::temp_path("grid.pgm");

    Matrix one(1, 4);
    one << 0.0, 1.0, 1.0, 0.0;
    write_pgm_grid(one, 2, 1, path);
    const testutil::Pgm p = testutil::read_pgm(path);
    CHECK(p.width == 2);
    CHECK(p.height == 2);
    CHECK(p.maxval == 255);
    REQUIRE(p.pixels.size() == 4);
    CHECK(p.pixels[0] == 0);
    CHECK(p.pixels[1] == 255);
    CHECK(p.pixels[2] == 255);
    CHECK(p.pixels[3] == 0);

    // Six images in three columns: 2 image rows, single-pixel separators.
    const int side = 5;
    RngCursor cur(RngStream{1, StreamId::Init});
    Matrix six(6, side * side);
    for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < side * side; ++j)
            six(i, j) = cur.uniform();
    write_pgm_grid(six, side, 3, path);
    const testutil::Pgm g = testutil::read_pgm(path);
    CHECK(g.width == 3 * side + 2);
    CHECK(g.height == 2 * side + 1);

    // Re-reading recovers the quantized pixels exactly.
    for (Index i = 0; i < 6; ++i) {
        const int gr = int(i) / 3;
        const int gc = int(i) % 3;
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c) {
                const unsigned char want =
                    static_cast<unsigned char>(std::lround(255.0 * six(i, r * side + c)));
                const int row = gr * (side + 1) + r;
                const int col = gc * (side + 1) + c;
                CHECK(g.pixels[std::size_t(row) * g.width + col] == want);
            }
    }
    // Separator row is black.
    for (int col = 0; col < g.width; ++col)
        CHECK(g.pixels[std::size_t(side) * g.width + col] == 0);

    CHECK_THROWS_AS(write_pgm_grid(Matrix::Zero(1, 5), 2, 1, path), ParamError);
    std::remove(path.c_str());
}

TEST_CASE("metrics csv format and round trip")
{
    const std::string path = testutil::temp_path("metrics.csv");

    std::vector<EpochMetrics> rows(1);
    rows[0] = EpochMetrics{0, 123.456789012345, -88.25, 0.03125, 3e-4};
    emit_metrics(rows, path);

    std::ifstream in(path, std::ios::binary);
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,objective,bound_mean,train_error,lr");
    std::string line;
    std::getline(in, line);
    CHECK(!line.empty());
    std::string extra;
    CHECK_FALSE(std::getline(in, extra));

    // Parse the row back; shortest round-trip formatting is lossless.
    std::istringstream ls(line);
    std::string field;
    std::getline(ls, field, ',');
    CHECK(field == "0");
    double vals[4];
    for (double& v : vals) {
        std::getline(ls, field, ',');
        v = std::stod(field);
    }
    CHECK(vals[0] == rows[0].objective);
    CHECK(vals[1] == rows[0].bound_mean);
    CHECK(vals[2] == rows[0].train_error);
    CHECK(vals[3] == rows[0].lr);

    // Deterministic output.
    emit_metrics(rows, path + ".b");
    std::ifstream a(path, std::ios::binary);
    std::ifstream b(path + ".b", std::ios::binary);
    std::stringstream sa;
    std::stringstream sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());

    std::remove(path.c_str());
    std::remove((path + ".b").c_str());
}

TEST_CASE("train config derivation")
{
    RunConfig cfg = parse_config("", {});
    cfg.C = 5.0;
    cfg.epochs = 100;
    const TrainConfig tc = to_train_config(cfg);
    CHECK(tc.pretrain_epochs == 20); // default: a fifth of the epochs when C > 0

    cfg.pretrain_epochs = 7;
    CHECK(to_train_config(cfg).pretrain_epochs == 7);

    cfg.C = 0.0;
    cfg.pretrain_epochs = -1;
    CHECK(to_train_config(cfg).pretrain_epochs == 0);

    cfg.act = "tanh";
    CHECK(to_train_config(cfg).act == Act::Tanh);
    cfg.feature_mode = "concat_hidden";
    CHECK(to_train_config(cfg).feature_mode == FeatureMode::ConcatHidden);
}
