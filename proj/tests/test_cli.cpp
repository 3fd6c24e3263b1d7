#include "doctest.h"
#include "oracles.hpp"
#include "slotfill/commands.hpp"
#include "slotfill/config.hpp"
#include "slotfill/decoding.hpp"
#include "slotfill/model_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace slotfill;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("slotfill_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

SavedModel random_saved(Architecture arch, std::size_t depth, std::uint64_t seed) {
    const Corpus corpus = synth_global_task(30, seed, 20, 2);
    ModelConfig config = testing::tiny_config(arch, depth);
    config.vocab_size = corpus.words.size();
    config.num_labels = corpus.num_labels();
    Rng rng(seed);
    return SavedModel{testing::random_model(config, rng), corpus.words, corpus.labels, 3};
}

std::string serialize(const SavedModel& model) {
    std::ostringstream out;
    write_model(out, model);
    return out.str();
}

SavedModel deserialize(const std::string& text) {
    std::istringstream in(text);
    return read_model(in);
}

std::string replace_line(const std::string& text, const std::string& from, const std::string& to) {
    std::string copy = text;
    const auto at = copy.find(from);
    REQUIRE(at != std::string::npos);
    copy.replace(at, from.size(), to);
    return copy;
}

}  // namespace

TEST_CASE("model files round-trip exactly") {
    for (Architecture arch : testing::kAllArchitectures) {
        for (std::size_t depth : {1u, 2u}) {
            const SavedModel model = random_saved(arch, depth, 3 + depth);
            const std::string first = serialize(model);
            const SavedModel loaded = deserialize(first);
            CHECK(serialize(loaded) == first);
            CHECK(loaded.words == model.words);
            CHECK(loaded.labels == model.labels);
            CHECK(loaded.beam == 3);
            const auto a = model.params.tensors();
            const auto b = loaded.params.tensors();
            REQUIRE(a.size() == b.size());
            for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i].tensor == *b[i].tensor);
        }
    }
    CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("loaded models predict identically") {
    TempDir dir;
    const SavedModel model = random_saved(Architecture::kEncoderLabelerWL, 1, 21);
    save_model(model, dir.file("m.slf"));
    const SavedModel loaded = load_model(dir.file("m.slf"));
    Rng rng(4);
    for (int s = 0; s < 50; ++s) {
        const auto tokens = testing::random_ids(rng, 1 + rng.next_below(8), 1, model.words.size());
        CHECK(decode(loaded.params, tokens, 3) == decode(model.params, tokens, 3));
    }
}

TEST_CASE("model reader diagnostics") {
    const std::string text = serialize(random_saved(Architecture::kLabelerW, 1, 2));
    CHECK_THROWS_WITH_AS(deserialize(replace_line(text, "slotfill-model 1", "slotfill-model 2")),
                         doctest::Contains("version"), ModelFormatError);
    CHECK_THROWS_AS(deserialize(replace_line(text, "softmax.b\n3 1", "softmax.b\n4 1")),
                    ModelFormatError);
    CHECK_THROWS_AS(deserialize(replace_line(text, "softmax.b\n3 1", "softmax.b\n3 x")),
                    ModelFormatError);
    CHECK_THROWS_AS(deserialize(replace_line(text, "softmax.W", "softmax.Q")), ModelFormatError);
    CHECK_THROWS_AS(deserialize(text.substr(0, text.size() - 4)), ModelFormatError);
    CHECK_THROWS_AS(deserialize(text.substr(0, text.size() / 2)), ModelFormatError);
    CHECK_THROWS_AS(deserialize(text.substr(0, text.size() - 14)), ModelFormatError);
    CHECK_THROWS_AS(deserialize(""), ModelFormatError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.slf"), std::exception);
}

TEST_CASE("run configuration parsing") {
    std::istringstream defaults("# nothing set\n\n");
    const RunConfig base = parse_run_config(defaults);
    CHECK(base.hyper.learning_rate == 0.001);
    CHECK(base.hyper.embedding_dim == 30);
    CHECK(base.hyper.dropout == 0.5);
    CHECK(base.hyper.epochs == 100);
    CHECK(base.hyper.heldout_ratio == 0.2);
    CHECK_FALSE(base.data.has_value());

    std::istringstream text("arch=enc-labeler-wl\nd_h=40,30\nk = 2\nlr=0.005\ndata=x.iob\n");
    const RunConfig config = parse_run_config(text);
    CHECK(config.hyper.arch == Architecture::kEncoderLabelerWL);
    CHECK(config.hyper.hidden_dims == std::vector<std::size_t>{40, 30});
    CHECK(config.hyper.context == 2);
    CHECK(config.hyper.learning_rate == 0.005);
    CHECK(*config.data == "x.iob");

    std::istringstream unknown("learning_rate=0.1\n");
    CHECK_THROWS_AS(parse_run_config(unknown), std::invalid_argument);
    RunConfig c;
    CHECK_THROWS_AS(apply_setting(c, "arch", "bilstm"), std::invalid_argument);
    CHECK_THROWS_AS(apply_setting(c, "epochs", "many"), std::invalid_argument);
    apply_setting(c, "d_h", "64");
    apply_setting(c, "depth", "2");
    CHECK(c.hyper.hidden_dims == std::vector<std::size_t>{64, 64});

    std::istringstream space_text("d_e=8,16\nlr=0.001:0.002\n");
    const SearchSpace space = parse_search_space(space_text);
    CHECK(space.embedding_dims == std::vector<std::size_t>{8, 16});
    CHECK(space.hidden_dims == SearchSpace{}.hidden_dims);
    CHECK(space.lr_max == 0.002);
    std::istringstream empty_space("k=\n");
    CHECK_THROWS_AS(parse_search_space(empty_space), std::invalid_argument);
}

TEST_CASE("train, eval and predict commands") {
    TempDir dir;
    std::ostringstream sink, errors;
    REQUIRE(cmd_synth(SynthCommand{60, 2, 20, 2, dir.file("train.iob")}, sink, errors) == 0);

    const SettingOverrides settings{{"arch", "enc-labeler-w"}, {"d_e", "8"},   {"d_h", "12"},
                                    {"k", "1"},                {"epochs", "3"}, {"lr", "0.01"},
                                    {"seed", "7"},             {"data", dir.file("train.iob")}};
    SettingOverrides first = settings, second = settings;
    first.emplace_back("out", dir.file("a.slf"));
    second.emplace_back("out", dir.file("b.slf"));
    std::ostringstream out_a, out_b;
    REQUIRE(cmd_train(TrainCommand{std::nullopt, first}, out_a, errors) == 0);
    REQUIRE(cmd_train(TrainCommand{std::nullopt, second}, out_b, errors) == 0);
    CHECK(slurp(dir.file("a.slf")) == slurp(dir.file("b.slf")));
    CHECK(out_a.str().find("selected_epoch=") != std::string::npos);

    std::ostringstream report, warn;
    REQUIRE(cmd_eval(EvalCommand{dir.file("a.slf"), dir.file("train.iob"), 5}, report, warn) == 0);
    CHECK(report.str().find("\nf1=") != std::string::npos);
    CHECK(warn.str().find("warning") != std::string::npos);

    spit(dir.file("bad.iob"), "m1 B-Nowhere\nM1 O\n");
    std::ostringstream bad_out, bad_err;
    CHECK(cmd_eval(EvalCommand{dir.file("a.slf"), dir.file("bad.iob"), std::nullopt}, bad_out,
                   bad_err) != 0);
    CHECK(bad_err.str().find("B-Nowhere") != std::string::npos);

    std::istringstream input("m1 w2 M1\n\nzzz-unknown M2\n");
    std::ostringstream predicted, predict_err;
    REQUIRE(cmd_predict(PredictCommand{dir.file("a.slf"), "-", std::nullopt}, input, predicted,
                        predict_err) == 0);
    CHECK(predict_err.str().find("empty line 2") != std::string::npos);
    std::istringstream reparse(predicted.str());
    const auto sentences = read_iob(reparse);
    REQUIRE(sentences.size() == 2);
    CHECK(sentences[0].tokens == std::vector<std::string>{"m1", "w2", "M1"});
    CHECK(sentences[1].tokens[0] == "zzz-unknown");

    std::ostringstream missing_out, missing_err;
    CHECK(cmd_train(TrainCommand{std::nullopt, {{"data", dir.file("none.iob")}}}, missing_out,
                    missing_err) != 0);
    CHECK(cmd_train(TrainCommand{std::nullopt, {{"bogus", "1"}}}, missing_out, missing_err) != 0);
}

TEST_CASE("search command") {
    TempDir dir;
    std::ostringstream sink, errors;
    REQUIRE(cmd_synth(SynthCommand{40, 3, 20, 2, dir.file("train.iob")}, sink, errors) == 0);
    spit(dir.file("space.txt"), "d_e=4,6\nd_h=5,7\nk=0,1\n");
    SearchCommand command;
    command.space_path = dir.file("space.txt");
    command.overrides = {{"epochs", "1"}, {"dropout", "0"}, {"data", dir.file("train.iob")}};
    command.budget = 2;
    command.workers = 2;
    std::ostringstream first, second;
    REQUIRE(cmd_search(command, first, errors) == 0);
    REQUIRE(cmd_search(command, second, errors) == 0);
    CHECK(first.str() == second.str());
    std::size_t rows = 0;
    std::istringstream table(first.str());
    for (std::string line; std::getline(table, line);) {
        if (!line.empty() && (line[0] == '1' || line[0] == '2') && line[1] == '\t') ++rows;
    }
    CHECK(rows == 2);

    spit(dir.file("empty.txt"), "d_h=\n");
    command.space_path = dir.file("empty.txt");
    std::ostringstream out, err;
    CHECK(cmd_search(command, out, err) != 0);
}
