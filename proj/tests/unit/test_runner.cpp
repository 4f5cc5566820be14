#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "fixtures.hpp"
#include "generators.hpp"
#include "gridpilot/png_io.hpp"
#include "gridpilot/runner.hpp"
#include "paths.hpp"

using namespace gridpilot;

namespace {

IterationRecord rec(int r, int k, int j, Action a, std::optional<int> f = std::nullopt, bool ok = true) {
  IterationRecord x;
  x.run = r;
  x.iteration = k;
  x.edit = j;
  x.action = a;
  x.failing = f;
  x.ok = ok;
  return x;
}

}  // namespace

TEST(Metrics, ExampleRecordSet) {
  const RunMetrics m = compute_metrics(fixtures::metrics_example(), 5, 20);
  EXPECT_EQ(m.valid_pairs, 20);
  EXPECT_EQ(m.passing_pairs, 9);
  EXPECT_EQ(m.SR, 0.45);
  EXPECT_EQ(m.cs(1), 0.2);
  EXPECT_EQ(m.cs(2), 0.4);
  EXPECT_EQ(m.cs(3), 0.8);
  EXPECT_EQ(m.cs(20), 0.8);
  EXPECT_EQ(m.tau, (std::vector<std::optional<int>>{1, 3, std::nullopt, 2, 3}));
}

TEST(Metrics, TableFormat) {
  auto recs = fixtures::metrics_example();
  std::erase_if(recs, [](const IterationRecord& r) { return r.iteration > 3; });
  const std::string t = metrics_table(compute_metrics(recs, 5, 3));
  EXPECT_EQ(t,
            "# R=5 K=3 valid_pairs=15 passing_pairs=6 SR=0.4000\n"
            "# tau=1,3,inf,2,3\n"
            "k,CS\n1,0.2000\n2,0.4000\n3,0.8000\n");
}

TEST(Metrics, RecordOrderDoesNotMatter) {
  auto recs = fixtures::metrics_example();
  const RunMetrics base = compute_metrics(recs, 5, 20);
  gen::Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    std::shuffle(recs.begin(), recs.end(), rng);
    const RunMetrics m = compute_metrics(recs, 5, 20);
    ASSERT_EQ(m.CS, base.CS);
    ASSERT_EQ(m.SR, base.SR);
    ASSERT_EQ(m.tau, base.tau);
  }
}

TEST(Metrics, InvariantsOnRandomLoops) {
  gen::Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int R = gen::uniform(rng, 1, 6), K = gen::uniform(rng, 1, 8);
    std::vector<IterationRecord> recs;
    for (int r = 1; r <= R; ++r)
      for (int k = 1; k <= K; ++k) {
        if (gen::coin(rng, 0.2)) continue;
        recs.push_back(rec(r, k, 0, Action::kGenerate, std::nullopt, gen::coin(rng, 0.9)));
        recs.push_back(rec(r, k, 0, Action::kTest, gen::coin(rng, 0.3) ? 0 : gen::uniform(rng, 1, 5)));
      }
    const RunMetrics m = compute_metrics(recs, R, K);
    ASSERT_GE(m.SR, 0.0);
    ASSERT_LE(m.SR, 1.0);
    for (int k = 2; k <= K; ++k) ASSERT_LE(m.cs(k - 1), m.cs(k));
    const auto finite = std::count_if(m.tau.begin(), m.tau.end(), [](const auto& t) { return t.has_value(); });
    ASSERT_DOUBLE_EQ(m.cs(K), static_cast<double>(finite) / R);
  }
}

TEST(Metrics, InconsistentInputsAreRejected) {
  const auto bad = [](std::vector<IterationRecord> recs) { EXPECT_THROW(compute_metrics(recs, 2, 3), InconsistentRecords); };
  bad({rec(3, 1, 0, Action::kGenerate)});
  bad({rec(1, 4, 0, Action::kGenerate)});
  bad({rec(1, 1, 0, Action::kGenerate), rec(1, 1, 0, Action::kGenerate)});
  bad({rec(1, 1, 0, Action::kTest)});
  bad({rec(1, 1, 0, Action::kTest, 0), rec(1, 1, 1, Action::kTest, 0)});
  bad({rec(1, 1, 0, Action::kTest, 0), rec(1, 1, 1, Action::kTest, 2)});
  EXPECT_THROW(compute_metrics({}, 0, 3), std::invalid_argument);
  const RunMetrics empty = compute_metrics({}, 2, 3);
  EXPECT_EQ(empty.SR, 0.0);
  EXPECT_EQ(empty.cs(3), 0.0);
}

TEST(Records, JsonRoundTrip) {
  IterationRecord r = rec(2, 3, 1, Action::kTest, 4);
  r.metadata = {{"summary", "1. x"}};
  const auto j = to_json(r);
  EXPECT_EQ(j.at("s"), 0);
  EXPECT_FALSE(j.contains("time"));
  EXPECT_EQ(to_json(record_from_json(j)), j);
  r.time = "2026-01-01T00:00:00Z";
  EXPECT_EQ(to_json(record_from_json(to_json(r))).at("time"), "2026-01-01T00:00:00Z");
  const auto g = to_json(rec(1, 1, 0, Action::kGenerate));
  EXPECT_FALSE(g.contains("f"));
  EXPECT_THROW(parse_action("dance"), std::invalid_argument);
  EXPECT_LT(action_ordinal(Action::kGenerate), action_ordinal(Action::kTest));
  EXPECT_LT(action_ordinal(Action::kTest), action_ordinal(Action::kEdit));
  EXPECT_LT(action_ordinal(Action::kEdit), action_ordinal(Action::kUpdateRules));
}

TEST(Records, ReadBackAndRejectGarbage) {
  const auto dir = testpaths::scratch("records");
  std::filesystem::create_directories(dir / "run_002");
  std::filesystem::create_directories(dir / "run_001");
  std::ofstream(dir / "run_001" / "records.jsonl") << to_json(rec(1, 1, 0, Action::kGenerate)).dump() << "\n\n";
  std::ofstream(dir / "run_002" / "records.jsonl") << to_json(rec(2, 1, 0, Action::kGenerate)).dump() << "\n";
  const auto all = load_records(dir);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].run, 1);
  EXPECT_EQ(all[1].run, 2);
  std::ofstream(dir / "bad.jsonl") << "{not json\n";
  EXPECT_THROW(read_records(dir / "bad.jsonl"), InconsistentRecords);
  EXPECT_THROW(read_records(dir / "missing.jsonl"), IoError);
}

TEST(Trajectory, MarkersAndPath) {
  OccupancyGrid g(40, 30);
  g.set(0, 0, true);
  EpisodeLog log;
  log.start = {5, 5};
  log.goal = {30, 20};
  for (int i = 1; i <= 10; ++i) log.records.push_back({i - 1, 5.0 + 2 * i, 5.0 + i, 1, 1});
  const ColorImage img = render_trajectory(g, log);
  EXPECT_EQ(img.at(0, 0), (Rgb{0, 0, 0}));
  EXPECT_EQ(img.at(39, 29), (Rgb{255, 255, 255}));
  EXPECT_EQ(img.at(5, 5), (Rgb{0, 170, 0}));
  EXPECT_EQ(img.at(30, 20), (Rgb{0, 0, 230}));
  EXPECT_EQ(img.at(25, 15), (Rgb{220, 0, 0}));
  EXPECT_EQ(img.at(17, 11), (Rgb{220, 0, 0}));
  EXPECT_EQ(render_trajectory(g, log), img);
}

TEST(Trajectory, ExportWritesPngAndReportsBadPath) {
  const auto dir = testpaths::scratch("trajectory");
  OccupancyGrid g(20, 20);
  EpisodeLog log;
  log.start = {2, 2};
  log.goal = {17, 17};
  export_trajectory(g, log, dir / "t.png");
  EXPECT_EQ(read_png(dir / "t.png"), render_trajectory(g, log));
  EXPECT_THROW(export_trajectory(g, log, dir / "missing" / "t.png"), IoError);
}

TEST(Environment, SuiteOverridesApply) {
  const Environment env = load_environment(testpaths::data("maps/sample/params.json"),
                                           testpaths::data("maps/sample/occupancy.png"),
                                           testpaths::data("suites/nav2d_default.json"));
  EXPECT_EQ(env.task.progress_window, 400);
  EXPECT_EQ(env.task.progress_ratio, 0.7);
  EXPECT_EQ(env.robot.theta0, 40.0);
  EXPECT_EQ(env.robot.body_radius, 1.0);
  EXPECT_EQ(env.task.goal_tol, 20.0);
  EXPECT_EQ(env.task.max_steps, 2500);
  EXPECT_TRUE(env.grid_path.is_absolute());
  const EnvContext ctx = make_env_context(env, testpaths::data("maps/sample/params.json"), {{"X", "y"}});
  EXPECT_EQ(ctx.width, 240);
  EXPECT_EQ(ctx.grid_path, "occupancy.png");
  EXPECT_EQ(ctx.aux.at("X"), "y");
}

TEST(Environment, DimensionMismatchIsRejected) {
  const auto dir = testpaths::scratch("env-mismatch");
  write_grid_png(dir / "g.png", OccupancyGrid(10, 10));
  EXPECT_THROW(load_environment(testpaths::data("maps/sample/params.json"), dir / "g.png",
                                testpaths::data("suites/nav2d_default.json")),
               std::invalid_argument);
}

TEST(Experiment, MockRunPersistsEverything) {
  ExperimentConfig cfg = load_experiment_config(testpaths::data("configs/mock_experiment.json"));
  cfg.runner_cmd = testpaths::runner_cmd();
  cfg.out_dir = testpaths::scratch("experiment");
  const ExperimentResult res = run_experiment(cfg);
  ASSERT_EQ(res.runs.size(), 1u);
  EXPECT_EQ(res.runs[0].tau, 2);
  const auto dir = cfg.out_dir / "run_001";
  for (const char* f : {"records.jsonl", "prompt_final.txt", "controller.py", "k01_j0.py", "k01_j1.py",
                        "k02_j0.py", "k01_j0.report.json", "k01_j0.summary.txt"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  EXPECT_TRUE(std::filesystem::exists(cfg.out_dir / "metrics.csv"));
  EXPECT_TRUE(std::filesystem::exists(cfg.out_dir / "experiment.json"));
  const auto recs = load_records(cfg.out_dir);
  EXPECT_EQ(recs.size(), res.runs[0].records.size());
  const RunMetrics m = compute_metrics(recs, 1, cfg.K);
  EXPECT_EQ(m.cs(1), 0.0);
  EXPECT_EQ(m.cs(2), 1.0);
  EXPECT_EQ(m.SR, 0.5);
  EXPECT_EQ(testpaths::read(dir / "controller.py"),
            testpaths::read(testpaths::data("controllers/reference_controller.py")));
  const PromptTemplate final_prompt = PromptTemplate::parse(testpaths::read(dir / "prompt_final.txt"));
  EXPECT_EQ(final_prompt.fixed_text(), PromptTemplate::load(cfg.prompt_template).fixed_text());
  EXPECT_FALSE(final_prompt.rules().empty());
}

TEST(Experiment, ConfigValidation) {
  const auto dir = testpaths::scratch("config");
  std::ofstream(dir / "c.json") << R"({"runs": 0, "K": 3, "grid": "g", "params": "p", "suite": "s",
    "template": "t", "backend": {"kind": "scripted", "fixture": "f"}})";
  EXPECT_THROW(load_experiment_config(dir / "c.json"), std::invalid_argument);
  std::ofstream(dir / "d.json") << R"({"runs": 1, "K": 3, "grid": "g", "params": "p", "suite": "s",
    "template": "t", "clock": "sundial", "backend": {"kind": "scripted", "fixture": "f"}})";
  EXPECT_THROW(load_experiment_config(dir / "d.json"), std::invalid_argument);
}
