#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "benchdata.hpp"
#include "fairkit/cli.hpp"
#include "fairkit/freqview.hpp"
#include "fairkit/png_io.hpp"
#include "fairkit/prompts.hpp"
#include "fairkit/taxonomy.hpp"
#include "testutil.hpp"

using namespace fairkit;
using nlohmann::json;

namespace {

const Taxonomy& tax() {
    static const Taxonomy t = Taxonomy::builtin();
    return t;
}

// labels realizing the benchmark entropies for one model column
std::string benchmark_csv(int model) {
    std::string csv;
    const std::array<std::vector<long long>, 3> neutral{
        testutil::counts_with_entropy(2, benchdata::kNeutral[model][0]),
        testutil::counts_with_entropy(3, benchdata::kNeutral[model][1]),
        testutil::counts_with_entropy(5, benchdata::kNeutral[model][2])};
    testutil::append_label_csv(csv, "neutral", tax(), neutral);
    for (int t = 0; t < benchdata::kTriggerCount; ++t) {
        const std::array<std::vector<long long>, 3> counts{
            testutil::counts_with_entropy(2, benchdata::kGender[t][model]),
            testutil::counts_with_entropy(3, benchdata::kAge[t][model]),
            testutil::counts_with_entropy(5, benchdata::kRace[t][model])};
        testutil::append_label_csv(csv, benchdata::kTriggers[t], tax(), counts);
    }
    return csv;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("eval reproduces the benchmark row end to end") {
    testutil::TempDir dir;
    const std::string labels = dir.file("labels.csv");
    testutil::write_file(labels, benchmark_csv(0));  // SDXL column

    const std::string out = dir.file("report.json");
    const std::string csv = dir.file("report.csv");
    CHECK(testutil::run_cli({"eval", "--labels", labels, "--out", out, "--csv", csv, "--model",
                             "SDXL"}) == 0);

    const json report = json::parse(testutil::read_file(out));
    CHECK(std::abs(report.at("id_score").get<double>() - benchdata::kExpected[0][0]) <= 2e-3);
    CHECK(std::abs(report.at("ca_q").get<double>() - benchdata::kExpected[0][1]) <= 2e-3);
    CHECK(std::abs(report.at("ca_mean").get<double>() - benchdata::kExpected[0][2]) <= 2e-3);
    CHECK(std::abs(report.at("mgbi").get<double>() - benchdata::kExpected[0][3]) <= 2e-3);
    CHECK(report.at("per_trigger_g").size() == 9);
    CHECK(report.at("q").get<double>() == 0.1);

    const auto schema_issues =
        testutil::schema_errors(testutil::load_schema("metrics_report.schema.json"), report);
    if (!schema_issues.empty()) FAIL_CHECK(schema_issues[0]);

    SUBCASE("csv summary row") {
        const auto lines = split_lines(testutil::read_file(csv));
        REQUIRE(lines.size() == 2);
        CHECK(lines[0] == "model,id,ca_q,ca_mean,mgbi");
        CHECK(lines[1].substr(0, 5) == "SDXL,");
        // 4-decimal fields, all populated
        int commas = 0;
        for (char ch : lines[1]) commas += ch == ',';
        CHECK(commas == 4);
    }
    SUBCASE("manifest sidecar records the input digest") {
        const json man = json::parse(testutil::read_file(out + ".manifest.json"));
        CHECK(man.at("subcommand") == "eval");
        CHECK(man.at("version") == kToolVersion);
        CHECK(man.at("config").at("model") == "SDXL");
        REQUIRE(man.at("inputs").size() == 1);
        CHECK(man.at("inputs")[0].at("role") == "labels");
        CHECK(man.at("inputs")[0].at("fnv1a64") == file_digest(labels));
        CHECK(man.at("inputs")[0].at("fnv1a64") ==
              fnv1a64_hex(testutil::read_file(labels)));

        const auto man_issues =
            testutil::schema_errors(testutil::load_schema("run_manifest.schema.json"), man);
        if (!man_issues.empty()) FAIL_CHECK(man_issues[0]);
    }
}

TEST_CASE("eval context handling") {
    testutil::TempDir dir;

    SUBCASE("unknown literal prompt ids are rejected") {
        std::string csv;
        testutil::append_label_csv(csv, "bogus", tax(), {std::vector<long long>{3, 2},
                                                         std::vector<long long>{2, 2, 1},
                                                         std::vector<long long>{1, 1, 1, 1, 1}});
        const std::string labels = dir.file("labels.csv");
        testutil::write_file(labels, csv);
        testutil::Capture err(std::cerr);
        CHECK(testutil::run_cli({"eval", "--labels", labels}) == 1);
        CHECK(err.text().find("neither 'neutral' nor a trigger") != std::string::npos);
    }

    SUBCASE("prompt metadata maps ids to contexts") {
        const std::string prompts = dir.file("prompts.jsonl");
        testutil::write_file(
            prompts,
            json{{"id", "00000000000000aa"}, {"kind", "eval_neutral"}}.dump() + "\n" +
                json{{"id", "00000000000000bb"}, {"kind", "eval_trigger"}, {"trigger", "gentle"}}
                    .dump() +
                "\n");
        std::string csv;
        testutil::append_label_csv(csv, "00000000000000aa", tax(),
                                   {std::vector<long long>{3, 2}, std::vector<long long>{2, 2, 1},
                                    std::vector<long long>{1, 1, 1, 1, 1}});
        testutil::append_label_csv(csv, "00000000000000bb", tax(),
                                   {std::vector<long long>{4, 1}, std::vector<long long>{3, 1, 1},
                                    std::vector<long long>{2, 1, 1, 1, 0}});
        const std::string labels = dir.file("labels.csv");
        testutil::write_file(labels, csv);

        const std::string out = dir.file("report.json");
        CHECK(testutil::run_cli({"eval", "--labels", labels, "--prompts", prompts, "--out",
                                 out}) == 0);
        const json report = json::parse(testutil::read_file(out));
        CHECK(report.at("per_trigger_g").contains("gentle"));

        // an id missing from the metadata is an error
        testutil::append_label_csv(csv, "00000000000000cc", tax(),
                                   {std::vector<long long>{1, 0}, std::vector<long long>{1, 0, 0},
                                    std::vector<long long>{1, 0, 0, 0, 0}});
        testutil::write_file(labels, csv);
        testutil::Capture err(std::cerr);
        CHECK(testutil::run_cli({"eval", "--labels", labels, "--prompts", prompts}) == 1);
    }

    SUBCASE("neutral-only labels warn and skip the conditional block") {
        std::string csv;
        testutil::append_label_csv(csv, "neutral", tax(),
                                   {std::vector<long long>{3, 2}, std::vector<long long>{2, 2, 1},
                                    std::vector<long long>{1, 1, 1, 1, 1}});
        const std::string labels = dir.file("labels.csv");
        testutil::write_file(labels, csv);
        const std::string out = dir.file("report.json");
        testutil::Capture err(std::cerr);
        CHECK(testutil::run_cli({"eval", "--labels", labels, "--out", out}) == 0);
        CHECK(err.text().find("no trigger prompt groups") != std::string::npos);
        const json report = json::parse(testutil::read_file(out));
        CHECK_FALSE(report.contains("mgbi"));
        CHECK(report.contains("id_score"));
    }

    SUBCASE("missing labels file is an io error") {
        testutil::Capture quiet_err(std::cerr);
        CHECK(testutil::run_cli({"eval", "--labels", dir.file("absent.csv")}) == 2);
    }

    SUBCASE("bad q is a validation error") {
        testutil::Capture quiet_err(std::cerr);
        const std::string labels = dir.file("labels.csv");
        testutil::write_file(labels, "neutral,img-0,gender,female,1.0\n");
        CHECK(testutil::run_cli({"eval", "--labels", labels, "--q", "1.5"}) == 1);
    }
}

TEST_CASE("eval manifest-only prints without writing") {
    testutil::TempDir dir;
    const std::string labels = dir.file("labels.csv");
    testutil::write_file(labels, "neutral,img-0,gender,female,1.0\n");
    const std::string out = dir.file("report.json");

    testutil::Capture captured(std::cout);
    CHECK(testutil::run_cli({"eval", "--labels", labels, "--out", out, "--manifest-only"}) == 0);
    const json man = json::parse(captured.text());
    CHECK(man.at("subcommand") == "eval");
    CHECK_FALSE(std::ifstream(out).good());  // nothing written
}

TEST_CASE("taxonomy resolution order") {
    testutil::TempDir dir;
    const std::string labels = dir.file("labels.csv");
    testutil::write_file(labels, "neutral,img-0,gender,female,1.0\n");
    const std::string tax_path = std::string(FAIRKIT_DATA_DIR) + "/taxonomy.json";

    SUBCASE("environment variable supplies the default") {
        ::setenv("FAIRKIT_TAXONOMY", tax_path.c_str(), 1);
        testutil::Capture captured(std::cout);
        const int code =
            testutil::run_cli({"eval", "--labels", labels, "--manifest-only"});
        ::unsetenv("FAIRKIT_TAXONOMY");
        CHECK(code == 0);
        const json man = json::parse(captured.text());
        CHECK(man.at("config").at("taxonomy") == tax_path);
        bool has_taxonomy_input = false;
        for (const auto& input : man.at("inputs"))
            has_taxonomy_input = has_taxonomy_input || input.at("role") == "taxonomy";
        CHECK(has_taxonomy_input);
    }
    SUBCASE("explicit flag beats the environment") {
        ::setenv("FAIRKIT_TAXONOMY", dir.file("does-not-exist.json").c_str(), 1);
        testutil::Capture captured(std::cout);
        const int code = testutil::run_cli(
            {"eval", "--labels", labels, "--taxonomy", tax_path, "--manifest-only"});
        ::unsetenv("FAIRKIT_TAXONOMY");
        CHECK(code == 0);
        const json man = json::parse(captured.text());
        CHECK(man.at("config").at("taxonomy") == tax_path);
    }
    SUBCASE("default is the builtin") {
        testutil::Capture captured(std::cout);
        CHECK(testutil::run_cli({"eval", "--labels", labels, "--manifest-only"}) == 0);
        const json man = json::parse(captured.text());
        CHECK(man.at("config").at("taxonomy") == "builtin");
        CHECK(man.at("inputs").size() == 1);  // labels only
    }
}

TEST_CASE("bootstrap subcommand") {
    testutil::TempDir dir;

    SUBCASE("precomputed scores, determinism, schema") {
        const std::string scores = dir.file("scores.json");
        testutil::write_file(scores, json{{"scores", {0.2, 0.4, 0.6}}}.dump());
        const std::string out1 = dir.file("ci1.json");
        const std::string out2 = dir.file("ci2.json");
        const std::vector<std::string> args{"bootstrap", "--scores", scores,  "--replicates",
                                            "500",       "--seed",   "7",     "--out"};
        auto with_out = [&](const std::string& out) {
            std::vector<std::string> full = args;
            full.push_back(out);
            return full;
        };
        CHECK(testutil::run_cli(with_out(out1)) == 0);
        CHECK(testutil::run_cli(with_out(out2)) == 0);
        CHECK(testutil::read_file(out1) == testutil::read_file(out2));

        const json doc = json::parse(testutil::read_file(out1));
        CHECK(doc.at("point").get<double>() == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(doc.at("replicates") == 500);
        CHECK(doc.at("seed") == 7);
        CHECK(doc.at("statistic") == "mean");
        CHECK(doc.at("lower").get<double>() <= doc.at("point").get<double>());
        CHECK(doc.at("upper").get<double>() >= doc.at("point").get<double>());

        const auto issues = testutil::schema_errors(
            testutil::load_schema("bootstrap_result.schema.json"), doc);
        if (!issues.empty()) FAIL_CHECK(issues[0]);
    }
    SUBCASE("constant scores give a zero-width interval") {
        const std::string scores = dir.file("flat.json");
        testutil::write_file(scores, json::array({0.5, 0.5, 0.5, 0.5, 0.5, 0.5}).dump());
        const std::string out = dir.file("ci.json");
        CHECK(testutil::run_cli(
                  {"bootstrap", "--scores", scores, "--replicates", "200", "--out", out}) == 0);
        const json doc = json::parse(testutil::read_file(out));
        CHECK(doc.at("lower").get<double>() == 0.5);
        CHECK(doc.at("upper").get<double>() == 0.5);
    }
    SUBCASE("quantile statistic records q") {
        const std::string scores = dir.file("scores.json");
        testutil::write_file(scores, json::array({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}).dump());
        const std::string out = dir.file("ci.json");
        CHECK(testutil::run_cli({"bootstrap", "--scores", scores, "--statistic", "quantile",
                                 "--q", "0.5", "--replicates", "200", "--out", out}) == 0);
        const json doc = json::parse(testutil::read_file(out));
        CHECK(doc.at("statistic") == "quantile");
        CHECK(doc.at("q").get<double>() == 0.5);
    }
    SUBCASE("exactly one source required") {
        testutil::Capture quiet_err(std::cerr);
        const std::string scores = dir.file("scores.json");
        testutil::write_file(scores, json::array({0.1, 0.2}).dump());
        CHECK(testutil::run_cli({"bootstrap"}) == 1);
        CHECK(testutil::run_cli({"bootstrap", "--scores", scores, "--labels", scores}) == 1);
    }
    SUBCASE("unknown statistic rejected") {
        testutil::Capture quiet_err(std::cerr);
        const std::string scores = dir.file("scores.json");
        testutil::write_file(scores, json::array({0.1, 0.2}).dump());
        CHECK(testutil::run_cli({"bootstrap", "--scores", scores, "--statistic", "median"}) == 1);
    }
}

TEST_CASE("reward subcommand") {
    testutil::TempDir dir;

    SUBCASE("table from counts, balanced categories sit at zero") {
        const std::string counts = dir.file("counts.json");
        testutil::write_file(counts, json{{"prompt_id", "g1"},
                                          {"group_size", 10},
                                          {"counts",
                                           {{"gender", {5, 5}},
                                            {"age", {4, 3, 3}},
                                            {"race", {2, 2, 2, 2, 2}}}}}
                                         .dump());
        const std::string out = dir.file("reward.json");
        CHECK(testutil::run_cli({"reward", "--counts", counts, "--out", out}) == 0);
        const json doc = json::parse(testutil::read_file(out));
        CHECK(doc.at("prompt_id") == "g1");
        CHECK(doc.at("table").at("gender")[0].get<double>() == 0.0);
        CHECK(doc.at("table").at("gender")[1].get<double>() == 0.0);
        for (const auto& value : doc.at("table").at("race")) CHECK(value.get<double>() == 0.0);
        CHECK(doc.at("table").at("age")[0].get<double>() < 0.0);  // over-represented
        CHECK(doc.at("table").at("age")[1].get<double>() > 0.0);
    }
    SUBCASE("per-image rewards from assignments") {
        const std::string counts = dir.file("counts.json");
        testutil::write_file(
            counts,
            json{{"prompt_id", "g1"},
                 {"group_size", 2},
                 {"counts", {{"gender", {2, 0}}, {"age", {1, 1, 0}}, {"race", {0, 2, 0, 0, 0}}}},
                 {"assignments",
                  json::array({{{"image_id", "i1"},
                                {"gender", "female"},
                                {"age", "young"},
                                {"race", "Black"}},
                               {{"image_id", "i2"},
                                {"gender", "female"},
                                {"age", "middle"},
                                {"race", "Black"}}})}}
                .dump());
        const std::string out = dir.file("reward.json");
        CHECK(testutil::run_cli({"reward", "--counts", counts, "--out", out}) == 0);
        const json doc = json::parse(testutil::read_file(out));
        REQUIRE(doc.contains("per_image"));
        CHECK(doc.at("per_image").size() == 2);
        CHECK(std::isfinite(doc.at("per_image").at("i1").get<double>()));
    }
    SUBCASE("count sum mismatch is a validation error") {
        const std::string counts = dir.file("counts.json");
        testutil::write_file(counts, json{{"prompt_id", "g1"},
                                          {"group_size", 10},
                                          {"counts",
                                           {{"gender", {5, 4}},
                                            {"age", {4, 3, 3}},
                                            {"race", {2, 2, 2, 2, 2}}}}}
                                         .dump());
        testutil::Capture err(std::cerr);
        CHECK(testutil::run_cli({"reward", "--counts", counts}) == 1);
        CHECK(err.text().find("must equal group_size") != std::string::npos);
    }
    SUBCASE("curve sweep csv") {
        const std::string out = dir.file("curve.csv");
        CHECK(testutil::run_cli({"reward", "--curve", "--n", "20", "--categories", "2",
                                 "--steps-per-unit", "4", "--out", out}) == 0);
        const auto lines = split_lines(testutil::read_file(out));
        REQUIRE(lines.size() == 82);  // header + 81 grid points
        CHECK(lines[0] == "n_k,reward");
        CHECK(lines[1] == "0.000000,5.000000");
        CHECK(lines[41] == "10.000000,0.000000");
        CHECK(lines[81] == "20.000000,-5.000000");
    }
    SUBCASE("weights must parse") {
        testutil::Capture quiet_err(std::cerr);
        CHECK(testutil::run_cli({"reward", "--curve", "--weights", "1:2"}) == 1);
        CHECK(testutil::run_cli({"reward", "--curve", "--weights", "a:b:c"}) == 1);
    }
    SUBCASE("counts or curve required") {
        testutil::Capture quiet_err(std::cerr);
        CHECK(testutil::run_cli({"reward"}) == 1);
    }
}

TEST_CASE("prompts subcommand") {
    testutil::TempDir dir;

    SUBCASE("eval set emission") {
        const std::string out = dir.file("eval.jsonl");
        testutil::Capture err(std::cerr);
        CHECK(testutil::run_cli({"prompts", "--kind", "eval", "--seed", "3", "--out", out}) == 0);
        CHECK(err.text().find("750 eval prompts") != std::string::npos);

        const auto lines = split_lines(testutil::read_file(out));
        REQUIRE(lines.size() == 750);
        const json schema = testutil::load_schema("prompt.schema.json");
        for (std::size_t i = 0; i < lines.size(); i += 125) {
            const json doc = json::parse(lines[i]);
            const auto issues = testutil::schema_errors(schema, doc);
            if (!issues.empty()) FAIL_CHECK(issues[0]);
        }
        CHECK(json::parse(testutil::read_file(out + ".manifest.json")).at("seed") == 3);
    }
    SUBCASE("train set with a vocabulary file") {
        testutil::Capture quiet_err(std::cerr);
        const std::string vocab = std::string(FAIRKIT_DATA_DIR) + "/train_vocabulary.json";
        const std::string out = dir.file("train.jsonl");
        CHECK(testutil::run_cli({"prompts", "--kind", "train", "--n", "50", "--vocabulary",
                                 vocab, "--seed", "4", "--out", out}) == 0);
        const auto lines = split_lines(testutil::read_file(out));
        REQUIRE(lines.size() == 50);
        CHECK(json::parse(lines[0]).at("kind") == "train");
    }
    SUBCASE("vocabulary only applies to train") {
        testutil::Capture quiet_err(std::cerr);
        const std::string vocab = std::string(FAIRKIT_DATA_DIR) + "/train_vocabulary.json";
        CHECK(testutil::run_cli({"prompts", "--kind", "gen", "--vocabulary", vocab}) == 1);
    }
    SUBCASE("unknown kind rejected") {
        testutil::Capture quiet_err(std::cerr);
        CHECK(testutil::run_cli({"prompts", "--kind", "test"}) == 1);
    }
}

TEST_CASE("simulate subcommand") {
    testutil::TempDir dir;
    const std::string config = dir.file("config.json");
    testutil::write_file(config, json{{"sim",
                                       {{"epochs", 3},
                                        {"checkpoint_interval", 2},
                                        {"eval_samples", 300},
                                        {"seed", 5}}}}
                                     .dump());

    const std::string out = dir.file("run.jsonl");
    const std::string csv = dir.file("losses.csv");
    CHECK(testutil::run_cli({"simulate", "--config", config, "--out", out, "--csv", csv}) == 0);

    const auto lines = split_lines(testutil::read_file(out));
    REQUIRE(lines.size() >= 2);
    long long updates = 0;
    long long checkpoints = 0;
    for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
        const json line = json::parse(lines[i]);
        const std::string type = line.at("type");
        if (type == "update") ++updates;
        if (type == "checkpoint") {
            ++checkpoints;
            CHECK(line.at("update").get<long long>() <= updates);
            CHECK(line.at("fairness").get<double>() > 0.0);
        }
    }
    const json summary = json::parse(lines.back());
    CHECK(summary.at("type") == "summary");
    CHECK(summary.at("updates").get<long long>() == updates);
    CHECK(summary.at("checkpoints").get<long long>() == checkpoints);
    CHECK(updates == 6);
    CHECK(checkpoints == 3);
    CHECK(summary.at("final_kl").get<double>() >= 0.0);
    CHECK(summary.contains("final_policy"));
    CHECK(summary.contains("final_fairness"));

    const auto csv_lines = split_lines(testutil::read_file(csv));
    REQUIRE(csv_lines.size() == 7);
    CHECK(csv_lines[0] == "update,epoch,policy_loss,kl_loss,total_loss,smoothed_reward");

    SUBCASE("seed override lands in the manifest") {
        const std::string out2 = dir.file("run2.jsonl");
        CHECK(testutil::run_cli(
                  {"simulate", "--config", config, "--seed", "11", "--out", out2}) == 0);
        const json man = json::parse(testutil::read_file(out2 + ".manifest.json"));
        CHECK(man.at("seed") == 11);
        CHECK(man.at("config").at("sim").at("seed") == 11);
    }
    SUBCASE("unknown reference policy rejected") {
        testutil::Capture quiet_err(std::cerr);
        CHECK(testutil::run_cli({"simulate", "--config", config, "--ref-policy",
                                 dir.file("missing.json")}) == 2);
    }
    SUBCASE("invalid config rejected") {
        testutil::Capture quiet_err(std::cerr);
        const std::string bad = dir.file("bad.json");
        testutil::write_file(bad, json{{"sim", {{"timesteps", 4}}}}.dump());
        CHECK(testutil::run_cli({"simulate", "--config", bad}) == 1);
    }
}

TEST_CASE("freqview subcommand") {
    testutil::TempDir dir;
    const std::string input = dir.file("in.png");
    {
        ChannelStack rgb;
        std::mt19937 gen(5);
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        for (int c = 0; c < 3; ++c) {
            ImagePlane plane(16, 16);
            for (auto& v : plane.pixels) v = dist(gen);
            rgb.push_back(std::move(plane));
        }
        write_png_rgb(input, rgb);
    }

    SUBCASE("outputs and manifests") {
        const std::string view = dir.file("view.png");
        const std::string bands = dir.file("bands");
        const std::string raw = dir.file("raw.json");
        CHECK(testutil::run_cli({"freqview", "--in", input, "--out", view, "--bands", bands,
                                 "--raw", raw}) == 0);

        const ChannelStack decoded = read_png_rgb(view);
        REQUIRE(decoded.size() == 3);
        CHECK(decoded[0].height == 8);
        CHECK(decoded[0].width == 8);

        for (const char* suffix : {".cA.png", ".cH.png", ".cV.png", ".cD.png"})
            CHECK(std::ifstream(bands + suffix).good());

        const json doc = json::parse(testutil::read_file(raw));
        CHECK(doc.at("view").at("height") == 8);
        CHECK(doc.at("bands").at("cA").at("values").size() == 64);
        CHECK(doc.at("bands").at("cD").at("height") == 8);

        const json man = json::parse(testutil::read_file(view + ".manifest.json"));
        CHECK(man.at("config").at("wavelet") == "db4");
        CHECK(man.at("inputs")[0].at("role") == "image");
    }
    SUBCASE("at least one output required") {
        testutil::Capture quiet_err(std::cerr);
        CHECK(testutil::run_cli({"freqview", "--in", input}) == 1);
    }
    SUBCASE("missing input is an io error") {
        testutil::Capture quiet_err(std::cerr);
        CHECK(testutil::run_cli({"freqview", "--in", dir.file("absent.png"), "--raw",
                                 dir.file("raw.json")}) == 2);
    }
    SUBCASE("manifest-only writes nothing") {
        const std::string view = dir.file("view.png");
        testutil::Capture captured(std::cout);
        CHECK(testutil::run_cli(
                  {"freqview", "--in", input, "--out", view, "--manifest-only"}) == 0);
        CHECK(json::parse(captured.text()).at("subcommand") == "freqview");
        CHECK_FALSE(std::ifstream(view).good());
    }
}

TEST_CASE("cli surface") {
    SUBCASE("help exits cleanly") {
        testutil::Capture captured(std::cout);
        CHECK(testutil::run_cli({"--help"}) == 0);
        CHECK(captured.text().find("eval") != std::string::npos);
    }
    SUBCASE("a subcommand is required") {
        testutil::Capture out(std::cout);
        testutil::Capture err(std::cerr);
        CHECK(testutil::run_cli({}) == 1);
    }
    SUBCASE("unknown flags are parse errors") {
        testutil::Capture out(std::cout);
        testutil::Capture err(std::cerr);
        CHECK(testutil::run_cli({"eval", "--labels", "x.csv", "--frobnicate"}) == 1);
    }
}
