#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "srcrec/harness.hpp"
#include "srcrec/schema.hpp"

using namespace srcrec;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("srcrec_harness_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

// cheap grid: non-learned methods on a small deterministic chain world
ExperimentSpec tiny_spec(const std::string& out) {
    ExperimentSpec spec;
    spec.world.preset = "prereq-chain";
    spec.world.num_concepts = 6;
    spec.world.seed = 3;
    spec.model.embed_dim = 4;
    spec.model.lstm_hidden = 3;
    spec.model.score_dim = 3;
    spec.train.epochs = 0;
    spec.train.batch_size = 2;
    spec.train.holdout_episodes = 1;
    spec.methods = {Method::random, Method::rule};
    spec.scenarios = {2};
    spec.lengths = {3};
    spec.eval_episodes = 5;
    spec.seeds = {1};
    spec.out_dir = out;
    return spec;
}

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("schema validator accepts and rejects") {
    json sch = json::parse(R"({
        "type": "object",
        "required": ["a"],
        "additionalProperties": false,
        "properties": {
            "a": {"type": "integer", "minimum": 0},
            "b": {"type": "array", "items": {"type": "string"}},
            "c": {"type": "string", "enum": ["x", "y"]}
        }
    })");
    std::string err;
    CHECK(schema_validate(sch, json::parse(R"({"a": 1})"), &err));
    CHECK(schema_validate(sch, json::parse(R"({"a": 0, "b": ["p", "q"], "c": "y"})"), &err));

    CHECK_FALSE(schema_validate(sch, json::parse(R"({})"), &err));
    CHECK(err.find("a") != std::string::npos);
    CHECK_FALSE(schema_validate(sch, json::parse(R"({"a": -1})"), &err));
    CHECK_FALSE(schema_validate(sch, json::parse(R"({"a": 1.5})"), &err));
    CHECK_FALSE(schema_validate(sch, json::parse(R"({"a": 1, "z": 2})"), &err));
    CHECK_FALSE(schema_validate(sch, json::parse(R"({"a": 1, "b": ["p", 3]})"), &err));
    CHECK(err.find("b") != std::string::npos);
    CHECK_FALSE(schema_validate(sch, json::parse(R"({"a": 1, "c": "z"})"), &err));

    json multi = json::parse(R"({"type": ["string", "null"]})");
    CHECK(schema_validate(multi, json("hi"), &err));
    CHECK(schema_validate(multi, json(nullptr), &err));
    CHECK_FALSE(schema_validate(multi, json(3), &err));

    // "number" admits integers, "integer" does not admit fractions
    json num = json::parse(R"({"type": "number"})");
    CHECK(schema_validate(num, json(3), &err));
    CHECK(schema_validate(num, json(3.5), &err));
}

TEST_CASE("shipped summary schema matches the embedded one") {
    std::ifstream in(std::string(SRCREC_SOURCE_DIR) + "/schemas/summary.schema.json");
    REQUIRE(in.good());
    json shipped = json::parse(in);
    CHECK(shipped == json::parse(summary_schema_text()));
}

TEST_CASE("method names round trip") {
    const char* names[] = {"src",      "src_a",      "src_m",  "src_nokt", "src_a_nokt",
                           "src_m_nokt", "random", "rule",     "mpc"};
    for (const char* name : names)
        CHECK(std::string(to_string(method_from_string(name))) == name);
    CHECK_THROWS_AS(method_from_string("sarsa"), ValidationError);

    CHECK(method_is_learned(Method::src));
    CHECK(method_is_learned(Method::src_m_nokt));
    CHECK_FALSE(method_is_learned(Method::random));
    CHECK_FALSE(method_is_learned(Method::rule));
    CHECK_FALSE(method_is_learned(Method::mpc));

    CHECK(method_variant(Method::src) == EncoderVariant::combined);
    CHECK(method_variant(Method::src_nokt) == EncoderVariant::combined);
    CHECK(method_variant(Method::src_a) == EncoderVariant::attention_only);
    CHECK(method_variant(Method::src_m_nokt) == EncoderVariant::mlp_only);
    CHECK_THROWS_AS(method_variant(Method::random), ValidationError);

    CHECK(method_beta(Method::src) == 1);
    CHECK(method_beta(Method::src_a) == 1);
    CHECK(method_beta(Method::src_nokt) == 0);
    CHECK(method_beta(Method::src_m_nokt) == 0);
    CHECK_THROWS_AS(method_beta(Method::mpc), ValidationError);
}

TEST_CASE("world spec builds presets with per-run seeds") {
    WorldSpec ws;
    ws.preset = "prereq-chain";
    ws.num_concepts = 6;
    ws.seed = 3;

    WorldConfig a = ws.build(1);
    WorldConfig b = ws.build(1);
    WorldConfig c = ws.build(2);
    CHECK(a.num_concepts == 6);
    CHECK(a.seed == b.seed);
    CHECK(a.influence.data == b.influence.data);
    CHECK(a.seed != c.seed);

    ws.noise_std = 0.25;
    ws.init_mastery = 0.2;
    ws.base_gain = 0.4;
    ws.decay = 0.99;
    ws.bernoulli_feedback = true;
    WorldConfig d = ws.build(1);
    CHECK(d.noise_std == 0.25);
    CHECK(d.init_mastery == 0.2);
    CHECK(d.base_gain == 0.4);
    CHECK(d.decay == 0.99);
    CHECK(d.bernoulli_feedback);

    ws.init_mastery = 1.5;
    CHECK_THROWS_AS(ws.build(1), ValidationError);
}

TEST_CASE("world spec loads an influence csv") {
    TempDir dir("csv");
    std::string path = dir.str() + "/inf.csv";
    {
        std::ofstream out(path);
        out << "0,0.9,0\n0,0,0.9\n0,0,0\n";
    }
    WorldSpec ws;
    ws.influence_csv = path;
    ws.num_concepts = 3;
    ws.seed = 5;
    WorldConfig w = ws.build(2);
    CHECK(w.influence.at(0, 1) == 0.9);
    CHECK(w.influence.at(1, 2) == 0.9);
    CHECK(w.influence.at(2, 0) == 0.0);
    CHECK(w.difficulty == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(w.seed == 7);

    ws.difficulty = {0.5, -1.0, 2.0};
    CHECK(ws.build(2).difficulty == std::vector<double>{0.5, -1.0, 2.0});
}

TEST_CASE("config text parses and applies") {
    std::string text = R"(
# full tour of the sections
[model]
embed_dim = 8   ; trailing comment
dropout_rate = 0.25
encoder_variant = attention_only

[train]
epochs = 3
optimizer = sgd
baseline_subtraction = yes
lr_start = 0.01

[world]
preset = two-cluster
num_concepts = 10
difficulty = 0.5, -1, 2

[experiment]
methods = random, rule
lengths = 2,4
seeds = 7
eval_episodes = 9
mpc_budget = 4
rule_descending = true
out_dir = /tmp/somewhere
)";
    ParsedConfig cfg = parse_config_text(text);
    CHECK(cfg.sections.at("model").at("embed_dim") == "8");

    ExperimentSpec spec;
    apply_config(cfg, &spec);
    CHECK(spec.model.embed_dim == 8);
    CHECK(spec.model.dropout_rate == 0.25);
    CHECK(spec.model.encoder_variant == EncoderVariant::attention_only);
    CHECK(spec.train.epochs == 3);
    CHECK(spec.train.optimizer == Optimizer::sgd);
    CHECK(spec.train.baseline_subtraction);
    CHECK(spec.train.lr_start == 0.01);
    CHECK(spec.world.preset == "two-cluster");
    CHECK(spec.world.num_concepts == 10);
    CHECK(spec.world.difficulty == std::vector<double>{0.5, -1.0, 2.0});
    CHECK(spec.methods == std::vector<Method>{Method::random, Method::rule});
    CHECK(spec.lengths == std::vector<int>{2, 4});
    CHECK(spec.seeds == std::vector<uint64_t>{7});
    CHECK(spec.eval_episodes == 9);
    CHECK(spec.mpc_budget == 4);
    CHECK(spec.rule_descending);
    CHECK(spec.out_dir == "/tmp/somewhere");
}

TEST_CASE("config errors carry line numbers and key names") {
    CHECK_THROWS_AS(parse_config_text("[model\nx = 1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("x = 1\n"), ValidationError);  // outside a section
    CHECK_THROWS_AS(parse_config_text("[model]\nno equals here\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("[model]\n= 3\n"), ValidationError);

    ExperimentSpec spec;
    ParsedConfig bad_key = parse_config_text("[model]\nwidth = 3\n");
    CHECK_THROWS_WITH_AS(apply_config(bad_key, &spec), doctest::Contains("width"),
                         ValidationError);
    ParsedConfig bad_section = parse_config_text("[models]\nembed_dim = 3\n");
    CHECK_THROWS_WITH_AS(apply_config(bad_section, &spec), doctest::Contains("models"),
                         ValidationError);
    ParsedConfig bad_int = parse_config_text("[train]\nepochs = soon\n");
    CHECK_THROWS_WITH_AS(apply_config(bad_int, &spec), doctest::Contains("train.epochs"),
                         ValidationError);
    ParsedConfig bad_bool = parse_config_text("[experiment]\nrule_descending = maybe\n");
    CHECK_THROWS_AS(apply_config(bad_bool, &spec), ValidationError);
}

TEST_CASE("experiment spec validation") {
    ExperimentSpec spec = tiny_spec("/tmp/unused");
    CHECK_NOTHROW(spec.validate());

    ExperimentSpec bad = spec;
    bad.methods.clear();
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = spec;
    bad.scenarios = {4};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = spec;
    bad.lengths = {0};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = spec;
    bad.eval_episodes = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = spec;
    bad.seeds.clear();
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = spec;
    bad.mpc_budget = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("content hash tracks result-relevant fields only") {
    ExperimentSpec spec = tiny_spec("/tmp/a");
    uint64_t h = spec.content_hash();

    ExperimentSpec same = spec;
    same.out_dir = "/tmp/elsewhere";
    same.lengths = {5, 10};
    same.methods = {Method::mpc};
    same.seeds = {9, 10};
    same.scenarios = {0, 1};
    CHECK(same.content_hash() == h);

    ExperimentSpec diff = spec;
    diff.eval_episodes += 1;
    CHECK(diff.content_hash() != h);
    diff = spec;
    diff.world.seed += 1;
    CHECK(diff.content_hash() != h);
    diff = spec;
    diff.train.epochs += 1;
    CHECK(diff.content_hash() != h);
    diff = spec;
    diff.mpc_budget += 1;
    CHECK(diff.content_hash() != h);
}

TEST_CASE("grid runs paired cells and writes reports") {
    TempDir dir("grid");
    ExperimentSpec spec = tiny_spec(dir.str());
    spec.lengths = {3, 4};
    spec.seeds = {1, 2};
    spec.eval_episodes = 6;

    ResultTable table = run_experiment(spec);
    REQUIRE(table.cells.size() == 8);  // 2 methods x 2 lengths x 2 seeds
    for (const auto& c : table.cells) {
        CHECK_FALSE(c.failed);
        CHECK(c.episodes == 6);
        CHECK(std::isfinite(c.mean_et));
        CHECK(c.std_et >= 0.0);
        CHECK(c.detail.size() == 6);
        for (const auto& ev : c.detail) CHECK(ev.path.size() == static_cast<size_t>(c.length));
    }

    // paired evaluation: same episode stream for every method in a cell
    for (const auto& a : table.cells)
        for (const auto& b : table.cells)
            if (a.scenario == b.scenario && a.length == b.length && a.seed == b.seed)
                CHECK(a.episode_hash == b.episode_hash);

    std::string csv = slurp(dir.str() + "/results.csv");
    CHECK(csv.rfind("method,scenario,length,seed,episodes,mean_ET,std_ET,episode_hash,status\n",
                    0) == 0);
    CHECK(count_lines(csv) == 9);

    std::ifstream sin(dir.str() + "/summary.json");
    json summary = json::parse(sin);
    std::ifstream schin(std::string(SRCREC_SOURCE_DIR) + "/schemas/summary.schema.json");
    std::string err;
    CHECK(schema_validate(json::parse(schin), summary, &err));
    CHECK(summary.at("cells").size() == 8);
    CHECK(summary.at("aggregates").size() == 4);  // 2 methods x 2 lengths
    for (const auto& agg : summary.at("aggregates")) {
        CHECK(agg.at("seeds").get<int>() == 2);
        CHECK(agg.at("failed_seeds").get<int>() == 0);
    }

    std::string paths = slurp(dir.str() + "/paths.jsonl");
    CHECK(count_lines(paths) == 48);  // 8 cells x 6 episodes
    std::istringstream pin(paths);
    std::string line;
    REQUIRE(std::getline(pin, line));
    json row = json::parse(line);
    CHECK(row.contains("episode"));
    CHECK(row.at("method").is_string());
    CHECK(row.at("path").is_array());
    CHECK(row.at("E_T").is_number());
    CHECK(row.at("y").is_array());
}

TEST_CASE("identical specs give identical tables") {
    TempDir da("det_a");
    TempDir db("det_b");
    ExperimentSpec sa = tiny_spec(da.str());
    sa.methods = {Method::random, Method::rule, Method::mpc};
    sa.mpc_budget = 8;
    ExperimentSpec sb = sa;
    sb.out_dir = db.str();

    ResultTable ta = run_experiment(sa);
    ResultTable tb = run_experiment(sb);
    REQUIRE(ta.cells.size() == tb.cells.size());
    for (size_t i = 0; i < ta.cells.size(); ++i) {
        CHECK(ta.cells[i].method == tb.cells[i].method);
        CHECK(bits_equal(ta.cells[i].mean_et, tb.cells[i].mean_et));
        CHECK(bits_equal(ta.cells[i].std_et, tb.cells[i].std_et));
        CHECK(ta.cells[i].episode_hash == tb.cells[i].episode_hash);
        for (size_t k = 0; k < ta.cells[i].detail.size(); ++k)
            CHECK(ta.cells[i].detail[k].path == tb.cells[i].detail[k].path);
    }
}

TEST_CASE("finished cells are reused on rerun") {
    TempDir dir("resume");
    ExperimentSpec spec = tiny_spec(dir.str());
    spec.methods = {Method::random};

    run_experiment(spec);

    // tamper with the cached cell; a rerun must trust it rather than recompute
    fs::path cells = fs::path(dir.str()) / "cells";
    int touched = 0;
    for (const auto& entry : fs::directory_iterator(cells)) {
        std::ifstream in(entry.path());
        json j = json::parse(in);
        in.close();
        j["mean_ET"] = 42.0;
        std::ofstream out(entry.path());
        out << j.dump(1) << "\n";
        ++touched;
    }
    REQUIRE(touched == 1);
    fs::remove(fs::path(dir.str()) / "results.csv");

    ResultTable again = run_experiment(spec);
    REQUIRE(again.cells.size() == 1);
    CHECK(again.cells[0].mean_et == 42.0);
    CHECK(slurp(dir.str() + "/results.csv").find("42") != std::string::npos);

    // a corrupt cache entry is recomputed, not trusted
    for (const auto& entry : fs::directory_iterator(cells)) {
        std::ofstream out(entry.path());
        out << "{ not json";
    }
    ResultTable fresh = run_experiment(spec);
    CHECK(fresh.cells[0].mean_et != 42.0);
}

TEST_CASE("failures mark cells and the grid continues") {
    TempDir dir("fail");
    ExperimentSpec spec = tiny_spec(dir.str());
    spec.world.noise_std = 0.5;  // rule-based refuses stochastic worlds
    spec.methods = {Method::rule, Method::random};
    spec.eval_episodes = 3;

    ResultTable table = run_experiment(spec);
    REQUIRE(table.cells.size() == 2);
    const ResultCell& rule_cell = table.cells[0];
    const ResultCell& random_cell = table.cells[1];
    CHECK(rule_cell.method == "rule");
    CHECK(rule_cell.failed);
    CHECK(rule_cell.error.find("deterministic") != std::string::npos);
    CHECK(rule_cell.episodes == 0);
    CHECK_FALSE(random_cell.failed);
    CHECK(random_cell.episodes == 3);

    std::string csv = slurp(dir.str() + "/results.csv");
    CHECK(csv.find(",failed\n") != std::string::npos);
    CHECK(csv.find(",ok\n") != std::string::npos);

    std::ifstream sin(dir.str() + "/summary.json");
    json summary = json::parse(sin);
    std::string err;
    CHECK(schema_validate(json::parse(summary_schema_text()), summary, &err));
    for (const auto& agg : summary.at("aggregates")) {
        if (agg.at("method") == "rule") {
            CHECK(agg.at("seeds").get<int>() == 0);
            CHECK(agg.at("failed_seeds").get<int>() == 1);
        } else {
            CHECK(agg.at("seeds").get<int>() == 1);
        }
    }
}

TEST_CASE("learned methods train and roll inside the grid") {
    TempDir dir("learned");
    ExperimentSpec spec = tiny_spec(dir.str());
    spec.world.num_concepts = 4;
    spec.methods = {Method::src};
    spec.scenarios = {3};
    spec.lengths = {2};
    spec.train.epochs = 1;
    spec.eval_episodes = 3;

    ResultTable table = run_experiment(spec);
    REQUIRE(table.cells.size() == 1);
    const ResultCell& cell = table.cells[0];
    REQUIRE_FALSE(cell.failed);
    CHECK(cell.episodes == 3);
    for (const auto& ev : cell.detail) {
        REQUIRE(ev.path.size() == 2);
        CHECK(ev.path[0] != ev.path[1]);
        for (int c : ev.path) {
            CHECK(c >= 0);
            CHECK(c < 4);
        }
    }
}

TEST_CASE("ablation grid sweeps the six model variants") {
    TempDir dir("ablate");
    ExperimentSpec spec = tiny_spec(dir.str());
    spec.world.num_concepts = 4;
    spec.scenarios = {3};
    spec.lengths = {2};
    spec.train.epochs = 0;  // untrained: variant wiring is what is under test
    spec.eval_episodes = 3;

    ResultTable table = ablation_grid(spec);
    REQUIRE(table.cells.size() == 6);
    std::vector<std::string> seen;
    for (const auto& c : table.cells) {
        CHECK_FALSE(c.failed);
        seen.push_back(c.method);
    }
    std::vector<std::string> want = {"src",      "src_a",      "src_m",
                                     "src_nokt", "src_a_nokt", "src_m_nokt"};
    CHECK(seen == want);

    // with zero training epochs the auxiliary-task switch cannot matter:
    // same variant, same init stream, same greedy paths
    auto cell_of = [&](const std::string& name) -> const ResultCell& {
        for (const auto& c : table.cells)
            if (c.method == name) return c;
        throw std::runtime_error("missing cell");
    };
    CHECK(bits_equal(cell_of("src").mean_et, cell_of("src_nokt").mean_et));
    CHECK(bits_equal(cell_of("src_a").mean_et, cell_of("src_a_nokt").mean_et));
    CHECK(bits_equal(cell_of("src_m").mean_et, cell_of("src_m_nokt").mean_et));
}
