#include "cli.hpp"

#include "oracles.hpp"

#include "tgdr/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace tgdr;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "tgdr");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = cli::run_command(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Value of a "key value" line printed by the report tables.
std::string reported(const std::string& out, const std::string& key) {
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string k, v;
        ls >> k >> v;
        if (k == key) return v;
    }
    return "";
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("tgdr_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
    auto r = run({"fit", "--bogus"});
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: USAGE: ", 0) == 0);
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("fit, predict and evaluate agree") {
    TempDir dir;
    REQUIRE(run({"simulate", "--train", dir / "train.csv", "--test", dir / "test.csv", "--n-train", "80",
                 "--n-test", "40", "--features", "20", "--seed", "3"})
                .code == 0);
    auto fit = run({"fit", "--data", dir / "train.csv", "--tau", "0.8", "--steps", "150", "--out",
                    dir / "model.json", "--report", dir / "fit.csv"});
    REQUIRE(fit.code == 0);
    CHECK(fit.out.rfind("config: {", 0) == 0);
    CHECK(fit.out.find("\"seed\":0") != std::string::npos);
    CHECK(fit.out.find("\"delta_v\":0.01") != std::string::npos);

    auto pred = run({"predict", "--data", dir / "train.csv", "--model", dir / "model.json", "--out",
                     dir / "pred.csv"});
    REQUIRE(pred.code == 0);
    CHECK(reported(pred.out, "error_pct") == reported(fit.out, "training_error_pct"));
    CHECK(reported(pred.out, "gbs") == reported(fit.out, "training_gbs"));

    auto eval = run({"evaluate", "--predictions", dir / "pred.csv", "--data", dir / "train.csv", "--out",
                     dir / "eval.csv"});
    REQUIRE(eval.code == 0);
    CHECK(reported(eval.out, "error_pct") == reported(fit.out, "training_error_pct"));
    CHECK(reported(eval.out, "gbs") == reported(fit.out, "training_gbs"));
    CHECK(slurp(dir / "eval.csv").find("metric,value\nn,80\n") == 0);

    CHECK(slurp(dir / "pred.csv").rfind("sample,predicted,prob_", 0) == 0);
    REQUIRE(run({"fit", "--data", dir / "train.csv", "--classes", "1,2,3", "--steps", "10", "--out",
                 dir / "ordered.json"}).code == 0);
    REQUIRE(run({"predict", "--data", dir / "test.csv", "--model", dir / "ordered.json", "--out",
                 dir / "ordered.csv"}).code == 0);
    CHECK(slurp(dir / "ordered.csv").rfind("sample,predicted,prob_1,prob_2,prob_3\n", 0) == 0);
}

TEST_CASE("predict checks and aligns features") {
    TempDir dir;
    {
        std::ofstream f(dir / "a.csv");
        f << "g1,g2,g3,label\n1,0,2,a\n-1,1,0,b\n2,2,1,a\n-2,0,-1,b\n";
        std::ofstream g(dir / "b.csv");
        g << "g1,g2,label\n1,0,a\n-1,1,b\n";
        std::ofstream h(dir / "c.csv");
        h << "g3,label,g1,g2\n2,a,1,0\n0,b,-1,1\n1,a,2,2\n-1,b,-2,0\n";
    }
    REQUIRE(run({"fit", "--data", dir / "a.csv", "--steps", "20", "--out", dir / "m.json"}).code == 0);
    auto bad = run({"predict", "--data", dir / "b.csv", "--model", dir / "m.json", "--out", dir / "p.csv"});
    CHECK(bad.code == 1);
    CHECK(bad.err.rfind("error: DIM_MISMATCH: ", 0) == 0);
    CHECK(std::count(bad.err.begin(), bad.err.end(), '\n') == 1);

    REQUIRE(run({"predict", "--data", dir / "a.csv", "--model", dir / "m.json", "--out", dir / "p1.csv"}).code == 0);
    REQUIRE(run({"predict", "--data", dir / "c.csv", "--model", dir / "m.json", "--out", dir / "p2.csv"}).code == 0);
    CHECK(slurp(dir / "p1.csv") == slurp(dir / "p2.csv"));
}

TEST_CASE("missing files and bad models") {
    TempDir dir;
    auto r = run({"fit", "--data", dir / "none.csv", "--out", dir / "m.json"});
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: IO_ERROR: ", 0) == 0);
    {
        std::ofstream f(dir / "bad.csv");
        f << "g1,label\n1,a\nNA,b\n";
    }
    r = run({"fit", "--data", dir / "bad.csv", "--out", dir / "m.json"});
    CHECK(r.err.rfind("error: PARSE_ERROR: ", 0) == 0);
}

TEST_CASE("meta fit, pool and predict") {
    TempDir dir;
    std::mt19937_64 rng(5);
    auto data = oracle::random_dataset(rng, 90, 6, 3, 3, 1.0);
    {
        std::ofstream f(dir / "meta.csv");
        f << "id,study,";
        for (int j = 1; j <= 6; ++j) f << "g" << j << ',';
        f << "label\n";
        for (Index i = 0; i < 90; ++i) {
            f << "s" << i << ",GSE" << data.study_ids[i] << ',';
            for (Index j = 0; j < 6; ++j) f << format_double(data.features(i, j)) << ',';
            f << "c" << data.labels[i] << '\n';
        }
    }
    const std::vector<std::string> common{"--data", dir / "meta.csv", "--study-col", "study", "--id-col", "id"};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail) {
        head.insert(head.end(), common.begin(), common.end());
        head.insert(head.end(), tail.begin(), tail.end());
        return run(head);
    };
    auto nocol = run({"fit", "--meta", "--data", dir / "meta.csv", "--study-col", "nope", "--out", dir / "x.json"});
    CHECK(nocol.code == 1);
    CHECK(nocol.err.rfind("error: PARSE_ERROR: ", 0) == 0);
    CHECK(run({"fit", "--meta", "--data", dir / "meta.csv", "--out", dir / "x.json"}).code == 1);
    auto fit = with({"fit", "--meta"}, {"--steps", "50", "--out", dir / "meta.json"});
    REQUIRE(fit.code == 0);
    CHECK(reported(fit.out, "mode") == "meta");
    REQUIRE(with({"fit"}, {"--steps", "50", "--out", dir / "multi.json"}).code == 0);

    auto wrong = with({"pool"}, {"--model", dir / "multi.json", "--out", dir / "x.json"});
    CHECK(wrong.code == 1);
    CHECK(wrong.err.rfind("error: INCOMPATIBLE_MODEL: ", 0) == 0);

    auto pool = with({"pool"}, {"--model", dir / "meta.json", "--out", dir / "pooled.json"});
    REQUIRE(pool.code == 0);
    CHECK(pool.out.find("sigma2[c1, GSE1]") != std::string::npos);
    auto pooled = load_model(dir / "pooled.json");
    CHECK(pooled.mode == ModelMode::Pooled);
    REQUIRE(pooled.pooled.has_value());
    CHECK(pooled.pooled->sigma2.cols() == 3);

    REQUIRE(with({"predict"}, {"--model", dir / "meta.json", "--out", dir / "pm.csv"}).code == 0);
    CHECK(slurp(dir / "pm.csv").find("\ns0,") != std::string::npos);
    REQUIRE(run({"predict", "--data", dir / "meta.csv", "--model", dir / "pooled.json", "--out",
                 dir / "pp.csv", "--id-col", "id", "--study-col", "study"})
                .code == 0);
    auto nostudy = run({"predict", "--data", dir / "meta.csv", "--model", dir / "meta.json", "--out",
                        dir / "pq.csv", "--id-col", "id"});
    CHECK(nostudy.code == 1);
}

TEST_CASE("cv and bag write their reports") {
    TempDir dir;
    REQUIRE(run({"simulate", "--train", dir / "train.csv", "--n-train", "60", "--features", "12", "--seed", "1"})
                .code == 0);
    auto cv = run({"cv", "--data", dir / "train.csv", "--tau-grid", "0.5,1", "--steps", "40", "--stride", "20",
                   "--folds", "3", "--out", dir / "cv.csv", "--best-config", dir / "best.json", "--folds-out",
                   dir / "folds.csv"});
    REQUIRE(cv.code == 0);
    CHECK(slurp(dir / "cv.csv").rfind("tau,k,error_pct,gbs\n0.5,20,", 0) == 0);
    CHECK(slurp(dir / "best.json").find("\"tau\"") != std::string::npos);
    auto bag = run({"bag", "--data", dir / "train.csv", "--tau", "0.8", "--steps", "40", "--bootstrap", "6",
                    "--cutoffs", "0.3,0.6", "--out", dir / "bag.json", "--report", dir / "bf.csv",
                    "--cutoff-report", dir / "cut.csv"});
    REQUIRE(bag.code == 0);
    auto model = load_model(dir / "bag.json");
    CHECK(model.mode == ModelMode::Bagged);
    REQUIRE(model.bagging.has_value());
    CHECK(model.bagging->n_bootstrap == 6);
    CHECK(slurp(dir / "bf.csv").rfind("feature,frequency,count,in_final_model\nX1,", 0) == 0);
    CHECK(run({"predict", "--data", dir / "train.csv", "--model", dir / "bag.json", "--out", dir / "p.csv"}).code == 0);
}

TEST_CASE("options from a config file") {
    TempDir dir;
    {
        std::ofstream f(dir / "opts.ini");
        f << "[simulate]\nn-train=30\nfeatures=8\nseed=12\n";
    }
    auto r = run({"--config", dir / "opts.ini", "simulate", "--train", dir / "t.csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("\"n_train\":30") != std::string::npos);
    CHECK(r.out.find("\"seed\":12") != std::string::npos);
}

}  // TEST_SUITE
