#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "prefdetect/jsonl.hpp"
#include "prefdetect/metrics.hpp"
#include "prefdetect/scorer.hpp"
#include "test_util.hpp"

using namespace prefdetect;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs the installed binary with stdout/stderr captured to files.
RunResult run_cli(const testutil::TempDir& tmp, const std::string& args) {
    static int counter = 0;
    const std::string out_path = tmp.file("stdout." + std::to_string(counter));
    const std::string err_path = tmp.file("stderr." + std::to_string(counter));
    ++counter;
    const std::string cmd =
        std::string(CLI_BIN) + " " + args + " >" + out_path + " 2>" + err_path;
    const int raw = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    res.out = testutil::read_file(out_path);
    res.err = testutil::read_file(err_path);
    return res;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& body) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    for (char c : body) {
        if (c == ',') {
            row.push_back(cell);
            cell.clear();
        } else if (c == '\n') {
            row.push_back(cell);
            cell.clear();
            rows.push_back(row);
            row.clear();
        } else {
            cell += c;
        }
    }
    return rows;
}

} // namespace

TEST_CASE("help exits cleanly") {
    testutil::TempDir tmp;
    CHECK(run_cli(tmp, "--help").exit_code == 0);
    CHECK(run_cli(tmp, "gen --help").exit_code == 0);
    // no subcommand is a usage error
    CHECK(run_cli(tmp, "").exit_code == 2);
    CHECK(run_cli(tmp, "frobnicate").exit_code == 2);
}

TEST_CASE("gen writes a loadable corpus deterministically") {
    testutil::TempDir tmp;
    const std::string args = "--docs-per-class 12 --seed 7 --min-words 30 --max-words 60";
    auto r1 = run_cli(tmp, "gen --out " + tmp.file("a") + " " + args);
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.out.find("wrote 36 documents") != std::string::npos);
    auto r2 = run_cli(tmp, "gen --out " + tmp.file("b") + " " + args);
    REQUIRE(r2.exit_code == 0);

    for (const char* name :
         {"documents.jsonl", "triplets.jsonl", "replay.jsonl", "gen.config"}) {
        CHECK(testutil::same_bytes(tmp.file("a") + "/" + name,
                                   tmp.file("b") + "/" + name));
    }

    const auto ds = load_dataset(tmp.file("a") + "/documents.jsonl");
    CHECK(ds.documents.size() == 36);
    const auto triplets = load_triplets(tmp.file("a") + "/triplets.jsonl");
    CHECK(triplets.size() == 12);
    const auto replay = load_replay(tmp.file("a") + "/replay.jsonl");
    CHECK(replay.size() == 64);

    // a different seed changes the corpus
    auto r3 = run_cli(tmp, "gen --out " + tmp.file("c") + " --docs-per-class 12 --seed 8" +
                               " --min-words 30 --max-words 60");
    REQUIRE(r3.exit_code == 0);
    CHECK(!testutil::same_bytes(tmp.file("a") + "/documents.jsonl",
                                tmp.file("c") + "/documents.jsonl"));
}

TEST_CASE("missing config file exits 2 and names the path") {
    testutil::TempDir tmp;
    const std::string missing = tmp.file("nope.cfg");
    auto r = run_cli(tmp, "gen --config " + missing + " --out " + tmp.file("x"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("nope.cfg") != std::string::npos);
}

TEST_CASE("config file values apply with flag precedence") {
    testutil::TempDir tmp;
    testutil::write_file(tmp.file("gen.cfg"), "docs-per-class=6\nseed=7\n"
                                              "min-words=30\nmax-words=60\n");
    auto file_only =
        run_cli(tmp, "gen --config " + tmp.file("gen.cfg") + " --out " + tmp.file("f"));
    REQUIRE(file_only.exit_code == 0);
    CHECK(load_dataset(tmp.file("f") + "/documents.jsonl").documents.size() == 18);

    auto flag_wins = run_cli(tmp, "gen --config " + tmp.file("gen.cfg") + " --out " +
                                      tmp.file("g") + " --docs-per-class 4");
    REQUIRE(flag_wins.exit_code == 0);
    CHECK(load_dataset(tmp.file("g") + "/documents.jsonl").documents.size() == 12);

    // the resolved sidecar reproduces the run byte for byte
    auto replay_run = run_cli(tmp, "gen --config " + tmp.file("g") + "/gen.config --out " +
                                       tmp.file("h"));
    REQUIRE(replay_run.exit_code == 0);
    CHECK(testutil::same_bytes(tmp.file("g") + "/documents.jsonl",
                               tmp.file("h") + "/documents.jsonl"));
}

TEST_CASE("mix fills records locally and deterministically") {
    testutil::TempDir tmp;
    REQUIRE(run_cli(tmp, "gen --out " + tmp.file("d") +
                             " --docs-per-class 8 --min-words 30 --max-words 60")
                .exit_code == 0);
    const std::string triplets_in = tmp.file("d") + "/triplets.jsonl";

    auto r = run_cli(tmp, "mix --in " + triplets_in + " --out " + tmp.file("m.jsonl") +
                              " --p 0.5 --rephraser local --seed 3");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("filled 8 failed 0") != std::string::npos);
    const auto mixed = load_triplets(tmp.file("m.jsonl"));
    REQUIRE(mixed.size() == 8);
    for (const auto& t : mixed) {
        REQUIRE(t.y_mix.has_value());
        CHECK(*t.y_mix != t.y_hu);
    }

    auto r2 = run_cli(tmp, "mix --in " + triplets_in + " --out " + tmp.file("m2.jsonl") +
                               " --p 0.5 --rephraser local --seed 3");
    REQUIRE(r2.exit_code == 0);
    CHECK(testutil::same_bytes(tmp.file("m.jsonl"), tmp.file("m2.jsonl")));

    // p=0 rejoins the human text unchanged (responses are single-spaced)
    auto r0 = run_cli(tmp, "mix --in " + triplets_in + " --out " + tmp.file("m0.jsonl") +
                               " --p 0 --rephraser local");
    REQUIRE(r0.exit_code == 0);
    for (const auto& t : load_triplets(tmp.file("m0.jsonl")))
        CHECK(*t.y_mix == t.y_hu);

    // data problems exit 3
    CHECK(run_cli(tmp, "mix --in " + tmp.file("absent.jsonl") + " --out " +
                           tmp.file("m3.jsonl"))
              .exit_code == 3);
    // config problems exit 2
    CHECK(run_cli(tmp, "mix --in " + triplets_in + " --out " + tmp.file("m4.jsonl") +
                           " --rephraser nonsense")
              .exit_code == 2);
    CHECK(run_cli(tmp, "mix --in " + triplets_in + " --out " + tmp.file("m5.jsonl") +
                           " --p 1.5")
              .exit_code == 2);
}

TEST_CASE("train writes checkpoint, history, and config, reproducibly") {
    testutil::TempDir tmp;
    REQUIRE(run_cli(tmp, "gen --out " + tmp.file("d") +
                             " --docs-per-class 16 --min-words 30 --max-words 60")
                .exit_code == 0);
    const std::string base = " --triplets " + tmp.file("d") + "/triplets.jsonl" +
                             " --replay " + tmp.file("d") + "/replay.jsonl --dim 2048";

    auto r1 = run_cli(tmp, "train" + base + " --out " + tmp.file("ckpt.json"));
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.out.find("final loss ") != std::string::npos);
    const auto params = load_checkpoint(tmp.file("ckpt.json"));
    CHECK(params.D == 2048);
    CHECK(!params.is_mlp());

    auto r2 = run_cli(tmp, "train" + base + " --out " + tmp.file("ckpt2.json"));
    REQUIRE(r2.exit_code == 0);
    CHECK(testutil::same_bytes(tmp.file("ckpt.json"), tmp.file("ckpt2.json")));
    CHECK(testutil::same_bytes(tmp.file("ckpt.history.csv"),
                               tmp.file("ckpt2.history.csv")));

    // disabling the extra terms zeroes their history columns
    auto r3 = run_cli(tmp, "train" + base + " --out " + tmp.file("ckpt3.json") +
                               " --lambda 0 --beta1 0 --beta2 0");
    REQUIRE(r3.exit_code == 0);
    const auto rows = parse_csv(testutil::read_file(tmp.file("ckpt3.history.csv")));
    REQUIRE(rows.size() > 1);
    REQUIRE(rows[0] == std::vector<std::string>(
                           {"step", "lr", "loss", "loss_rm", "loss_replay",
                            "loss_mix_hu", "loss_lm_mix"}));
    for (size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == 7);
        CHECK(rows[i][4] == "0");
        CHECK(rows[i][5] == "0");
        CHECK(rows[i][6] == "0");
    }

    // --eval prints a held-out AUROC
    auto r4 = run_cli(tmp, "train" + base + " --out " + tmp.file("ckpt4.json") +
                               " --eval " + tmp.file("d") + "/documents.jsonl");
    REQUIRE(r4.exit_code == 0);
    CHECK(r4.out.find("heldout auroc ") != std::string::npos);

    // non-finite loss exits 4
    CHECK(run_cli(tmp, "train" + base + " --out " + tmp.file("ckpt5.json") +
                           " --lr 1e300")
              .exit_code == 4);
    // bad variant exits 2
    CHECK(run_cli(tmp, "train" + base + " --out " + tmp.file("ckpt6.json") +
                           " --variant cubist")
              .exit_code == 2);
}

TEST_CASE("detect prints the score and threshold verdict") {
    testutil::TempDir tmp;
    save_checkpoint(make_linear_scorer(256), tmp.file("zero.json"));

    auto r = run_cli(tmp, "detect --ckpt " + tmp.file("zero.json") +
                              " --text \"some response text\"");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == "score 0\n");

    auto machine = run_cli(tmp, "detect --ckpt " + tmp.file("zero.json") +
                                    " --text \"hello there\" --threshold -1");
    REQUIRE(machine.exit_code == 0);
    CHECK(machine.out.find("verdict MACHINE") != std::string::npos);

    auto human = run_cli(tmp, "detect --ckpt " + tmp.file("zero.json") +
                                  " --text \"hello there\" --threshold 0.5");
    REQUIRE(human.exit_code == 0);
    CHECK(human.out.find("verdict HUMAN") != std::string::npos);

    CHECK(run_cli(tmp, "detect --ckpt " + tmp.file("missing.json") + " --text hi")
              .exit_code == 2);
}

TEST_CASE("detect matches the library score") {
    testutil::TempDir tmp;
    REQUIRE(run_cli(tmp, "gen --out " + tmp.file("d") +
                             " --docs-per-class 8 --min-words 30 --max-words 60")
                .exit_code == 0);
    REQUIRE(run_cli(tmp, "train --triplets " + tmp.file("d") + "/triplets.jsonl" +
                             " --replay " + tmp.file("d") + "/replay.jsonl --dim 1024" +
                             " --out " + tmp.file("ckpt.json"))
                .exit_code == 0);

    const std::string text = "a plain probe sentence for scoring";
    auto r = run_cli(tmp, "detect --ckpt " + tmp.file("ckpt.json") + " --text \"" + text +
                              "\" --context \"probe context\"");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.out.rfind("score ", 0) == 0);
    const double printed = std::stod(r.out.substr(6));

    const auto params = load_checkpoint(tmp.file("ckpt.json"));
    const double expected = score(params, extract_features("probe context", text, params.D));
    CHECK(printed == expected); // %.17g round-trips doubles exactly
}

TEST_CASE("eval with the oracle detector writes a full report") {
    testutil::TempDir tmp;
    REQUIRE(run_cli(tmp, "gen --out " + tmp.file("d") + " --docs-per-class 30").exit_code ==
            0);
    auto r = run_cli(tmp, "eval --in " + tmp.file("d") + "/documents.jsonl --out " +
                              tmp.file("e") + " --detector oracle");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.out.rfind("auroc ", 0) == 0);
    CHECK(std::stod(r.out.substr(6)) >= 0.9);

    const std::string report = testutil::read_file(tmp.file("e") + "/report.json");
    CHECK(report.find("\"auroc\"") != std::string::npos);
    CHECK(report.find("\"n_pos\": 30") != std::string::npos);

    const auto rows = parse_csv(testutil::read_file(tmp.file("e") + "/scores.csv"));
    CHECK(rows.size() == 61); // header + 30 machine + 30 human, mixed skipped
    CHECK(testutil::read_file(tmp.file("e") + "/eval.config")
              .find("detector=oracle") != std::string::npos);

    // rerun into a fresh directory is byte-identical
    auto r2 = run_cli(tmp, "eval --in " + tmp.file("d") + "/documents.jsonl --out " +
                               tmp.file("e2") + " --detector oracle");
    REQUIRE(r2.exit_code == 0);
    CHECK(testutil::same_bytes(tmp.file("e") + "/report.json",
                               tmp.file("e2") + "/report.json"));
    CHECK(testutil::same_bytes(tmp.file("e") + "/scores.csv",
                               tmp.file("e2") + "/scores.csv"));

    // reward detector requires a checkpoint
    CHECK(run_cli(tmp, "eval --in " + tmp.file("d") + "/documents.jsonl --out " +
                           tmp.file("e3") + " --detector reward")
              .exit_code == 2);
}

TEST_CASE("sweep emits the default seven-length grid") {
    testutil::TempDir tmp;
    REQUIRE(run_cli(tmp, "gen --out " + tmp.file("d") + " --docs-per-class 20").exit_code ==
            0);
    auto r = run_cli(tmp, "sweep --in " + tmp.file("d") + "/documents.jsonl --out " +
                              tmp.file("s") + " --detector oracle");
    REQUIRE(r.exit_code == 0);
    const auto rows = parse_csv(testutil::read_file(tmp.file("s") + "/sweep.csv"));
    REQUIRE(rows.size() == 8); // header + 7 lengths
    CHECK(rows[0] == std::vector<std::string>({"length", "auroc"}));
    const char* lengths[] = {"30", "60", "90", "120", "150", "180", "210"};
    for (int i = 0; i < 7; ++i) CHECK(rows[i + 1][0] == lengths[i]);

    auto r2 = run_cli(tmp, "sweep --in " + tmp.file("d") + "/documents.jsonl --out " +
                               tmp.file("s2") + " --detector oracle --lengths 25,50");
    REQUIRE(r2.exit_code == 0);
    const auto rows2 = parse_csv(testutil::read_file(tmp.file("s2") + "/sweep.csv"));
    REQUIRE(rows2.size() == 3);
    CHECK(rows2[1][0] == "25");
    CHECK(rows2[2][0] == "50");
}

TEST_CASE("attack reports original and attacked auroc") {
    testutil::TempDir tmp;
    REQUIRE(run_cli(tmp, "gen --out " + tmp.file("d") + " --docs-per-class 20").exit_code ==
            0);
    auto r = run_cli(tmp, "attack --in " + tmp.file("d") + "/documents.jsonl --out " +
                              tmp.file("a") + " --detector oracle --attacker local");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("original auroc ") != std::string::npos);
    CHECK(r.out.find("attacked auroc ") != std::string::npos);
    const auto rows = parse_csv(testutil::read_file(tmp.file("a") + "/attack.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>({"stage", "auroc"}));
    CHECK(rows[1][0] == "original");
    CHECK(rows[2][0] == "attacked");
}

TEST_CASE("gradcheck passes on fresh scorers") {
    testutil::TempDir tmp;
    auto lin = run_cli(tmp, "gradcheck --variant linear --dim 1024");
    CHECK(lin.exit_code == 0);
    CHECK(lin.out.rfind("max relative error ", 0) == 0);
    CHECK(std::stod(lin.out.substr(19)) <= 1e-6);

    auto mlp = run_cli(tmp, "gradcheck --variant mlp --dim 512 --hidden-units 8");
    CHECK(mlp.exit_code == 0);
    CHECK(std::stod(mlp.out.substr(19)) <= 1e-4);
}
