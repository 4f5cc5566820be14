#include "gridpilot/runner.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "gridpilot/params.hpp"
#include "gridpilot/png_io.hpp"

namespace gridpilot {

using json = nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.empty() || p.is_absolute() ? p : base / p;
}

std::string run_dir_name(int run) { return fmt::format("run_{:03d}", run); }

void plot(ColorImage& img, int x, int y, Rgb c) {
  if (img.contains(x, y)) img.at(x, y) = c;
}

void draw_line(ColorImage& img, Pixel a, Pixel b, Rgb c) {
  int dx = std::abs(b.x - a.x), dy = -std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1, sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    plot(img, a.x, a.y, c);
    if (a == b) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      a.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      a.y += sy;
    }
  }
}

void draw_disk(ColorImage& img, Pixel centre, int radius, Rgb c) {
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) plot(img, centre.x + dx, centre.y + dy, c);
}

Pixel round_pixel(double x, double y) {
  return {static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))};
}

}  // namespace

RunMetrics compute_metrics(const std::vector<IterationRecord>& records, int R, int K) {
  if (R < 1 || K < 1) throw std::invalid_argument("R and K must be positive");

  std::set<std::tuple<int, int, int, int>> seen;
  struct Pair {
    bool generated = false;
    int last_test_j = -1;
    std::optional<int> failing;
    int passing_j = -1;
  };
  std::map<std::pair<int, int>, Pair> pairs;

  for (const IterationRecord& r : records) {
    if (r.run < 1 || r.run > R || r.iteration < 1 || r.iteration > K || r.edit < 0)
      throw InconsistentRecords(
          fmt::format("record (r={}, k={}, j={}) outside R={}, K={}", r.run, r.iteration, r.edit, R, K));
    if (!seen.emplace(r.run, r.iteration, r.edit, action_ordinal(r.action)).second)
      throw InconsistentRecords(fmt::format("duplicate {} record at (r={}, k={}, j={})", to_string(r.action), r.run,
                                            r.iteration, r.edit));
    Pair& p = pairs[{r.run, r.iteration}];
    if (r.action == Action::kGenerate && r.ok) p.generated = true;
    if (r.action == Action::kTest) {
      if (!r.failing) throw InconsistentRecords(fmt::format("test record without f at (r={}, k={})", r.run, r.iteration));
      if (r.success()) {
        if (p.passing_j >= 0)
          throw InconsistentRecords(fmt::format("two passing tests at (r={}, k={})", r.run, r.iteration));
        p.passing_j = r.edit;
      }
      if (r.edit > p.last_test_j) {
        p.last_test_j = r.edit;
        p.failing = r.failing;
      }
    }
  }

  RunMetrics m;
  m.R = R;
  m.K = K;
  m.tau.assign(static_cast<std::size_t>(R), std::nullopt);
  for (const auto& [key, p] : pairs) {
    if (p.passing_j >= 0 && p.last_test_j > p.passing_j)
      throw InconsistentRecords(fmt::format("test after a pass at (r={}, k={})", key.first, key.second));
    const bool passed = p.failing && *p.failing == 0;
    if (p.generated) {
      ++m.valid_pairs;
      if (passed) ++m.passing_pairs;
    }
    if (passed) {
      auto& t = m.tau[static_cast<std::size_t>(key.first - 1)];
      if (!t || key.second < *t) t = key.second;
    }
  }
  m.SR = m.valid_pairs == 0 ? 0.0 : static_cast<double>(m.passing_pairs) / m.valid_pairs;
  m.CS.assign(static_cast<std::size_t>(K), 0.0);
  for (int k = 1; k <= K; ++k) {
    const auto n = std::count_if(m.tau.begin(), m.tau.end(), [k](const auto& t) { return t && *t <= k; });
    m.CS[static_cast<std::size_t>(k - 1)] = static_cast<double>(n) / R;
  }
  return m;
}

std::string metrics_table(const RunMetrics& m) {
  std::string out = fmt::format("# R={} K={} valid_pairs={} passing_pairs={} SR={:.4f}\n", m.R, m.K, m.valid_pairs,
                                m.passing_pairs, m.SR);
  out += "# tau=";
  for (std::size_t i = 0; i < m.tau.size(); ++i) {
    if (i) out += ',';
    out += m.tau[i] ? std::to_string(*m.tau[i]) : "inf";
  }
  out += "\nk,CS\n";
  for (int k = 1; k <= m.K; ++k) out += fmt::format("{},{:.4f}\n", k, m.cs(k));
  return out;
}

ColorImage render_trajectory(const OccupancyGrid& grid, const EpisodeLog& log) {
  ColorImage img(grid.width(), grid.height(), Rgb{255, 255, 255});
  for (int y = 0; y < grid.height(); ++y)
    for (int x = 0; x < grid.width(); ++x)
      if (grid.occupied(x, y)) img.at(x, y) = Rgb{0, 0, 0};

  Pixel prev = log.start;
  for (const StepRecord& r : log.records) {
    const Pixel p = round_pixel(r.x, r.y);
    draw_line(img, prev, p, Rgb{220, 0, 0});
    prev = p;
  }
  draw_disk(img, log.start, 3, Rgb{0, 170, 0});
  draw_disk(img, log.goal, 3, Rgb{0, 0, 230});
  return img;
}

void export_trajectory(const OccupancyGrid& grid, const EpisodeLog& log, const std::filesystem::path& out) {
  write_png(out, render_trajectory(grid, log));
}

Environment load_environment(const std::filesystem::path& params_path, const std::filesystem::path& grid_path,
                             const std::filesystem::path& suite_path, const SessionOptions& session) {
  Environment env;
  const std::string params_text = read_text(params_path);
  env.params = json::parse(params_text);
  const MapParams params = params_from_json(env.params);
  env.grid = read_grid_png(grid_path);
  if (env.grid.width() != params.width || env.grid.height() != params.height)
    throw std::invalid_argument(fmt::format("grid is {}x{} but params say {}x{}", env.grid.width(), env.grid.height(),
                                            params.width, params.height));
  env.grid_path = std::filesystem::absolute(grid_path);
  env.suite = load_suite(suite_path);
  env.task = params.task();
  env.robot = params.robot();

  const json& o = env.suite.overrides;
  env.task.progress_window = o.value("progress_window", env.task.progress_window);
  env.task.progress_ratio = o.value("progress_ratio", env.task.progress_ratio);
  env.robot.theta0 = o.value("theta0", env.robot.theta0);
  env.robot.body_radius = o.value("body_radius", env.robot.body_radius);
  env.task.validate();
  env.robot.validate();
  env.session = session;
  return env;
}

EnvContext make_env_context(const Environment& env, const std::filesystem::path& params_path,
                            std::map<std::string, std::string> aux) {
  EnvContext ctx;
  ctx.width = env.grid.width();
  ctx.height = env.grid.height();
  ctx.obstacle_ratio = env.grid.obstacle_ratio();
  ctx.params_json = env.params.dump(2);
  ctx.grid_path = env.grid_path.filename().string();
  ctx.params_path = params_path.filename().string();
  ctx.task = env.task;
  ctx.robot = env.robot;
  ctx.aux = std::move(aux);
  return ctx;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const json j = json::parse(read_text(path));
  ExperimentConfig cfg;
  cfg.base_dir = std::filesystem::absolute(path).parent_path();
  cfg.runs = j.value("runs", cfg.runs);
  cfg.K = j.value("K", cfg.K);
  cfg.J = j.value("J", cfg.J);
  if (j.contains("seed")) cfg.seed = j["seed"].get<int>();
  cfg.grid = resolve(cfg.base_dir, j.at("grid").get<std::string>());
  cfg.params = resolve(cfg.base_dir, j.at("params").get<std::string>());
  cfg.suite = resolve(cfg.base_dir, j.at("suite").get<std::string>());
  cfg.runner_cmd = j.value("runner_cmd", cfg.runner_cmd);
  cfg.prompt_template = resolve(cfg.base_dir, j.at("template").get<std::string>());
  const json aux = j.value("aux_texts", json::object());
  for (const auto& [name, file] : aux.items()) cfg.aux_texts[name] = resolve(cfg.base_dir, file.get<std::string>());
  cfg.backend = j.at("backend");
  cfg.out_dir = resolve(cfg.base_dir, j.value("out_dir", "out"));
  const std::string clock = j.value("clock", "logical");
  if (clock != "logical" && clock != "wall") throw std::invalid_argument("clock must be 'logical' or 'wall'");
  cfg.wall_clock = clock == "wall";
  cfg.parallelism = j.value("parallelism", 1u);
  if (cfg.runs < 1) throw std::invalid_argument("runs must be at least 1");
  return cfg;
}

namespace {

SynthesisOutcome execute_run(const ExperimentConfig& cfg, int run, const Environment& env, const EnvContext& ctx,
                             const PromptTemplate& tmpl) {
  const std::filesystem::path dir = cfg.out_dir / run_dir_name(run);
  std::filesystem::create_directories(dir);
  std::ofstream records(dir / "records.jsonl", std::ios::binary | std::ios::trunc);
  if (!records) throw IoError("cannot write records in '" + dir.string() + "'");

  const auto stem = [](const CandidateSource& c) { return fmt::format("k{:02d}_j{}", c.iteration, c.edit); };

  SynthesisHooks hooks;
  hooks.on_record = [&records](const IterationRecord& r) {
    records << to_json(r).dump() << '\n';
    records.flush();
  };
  hooks.on_candidate = [&](const CandidateSource& c) { write_text(dir / (stem(c) + c.extension), c.text); };
  hooks.on_report = [&](const CandidateSource& c, const DiagnosticReport& rep) {
    write_text(dir / (stem(c) + ".report.json"), to_json(rep).dump(2) + "\n");
    write_text(dir / (stem(c) + ".summary.txt"), summarize(rep) + "\n");
  };
  if (cfg.wall_clock)
    hooks.clock = [] {
      return fmt::format("{:%Y-%m-%dT%H:%M:%S}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                       std::chrono::system_clock::now())));
    };

  LoopConfig loop;
  loop.K = cfg.K;
  loop.J = cfg.J;
  loop.run = run;
  loop.seed = env.suite.seed;

  std::unique_ptr<Backend> backend = make_backend(cfg.backend, cfg.base_dir, run);
  SynthesisOutcome outcome = synthesize(loop, tmpl, ctx, *backend, suite_verifier(env), hooks);
  write_text(dir / "prompt_final.txt", outcome.final_template.text());
  if (outcome.verified) write_text(dir / ("controller" + outcome.verified->extension), outcome.verified->text);
  return outcome;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  SessionOptions session;
  session.runner_cmd = cfg.runner_cmd;
  Environment env = load_environment(cfg.params, cfg.grid, cfg.suite, session);
  if (cfg.seed) env.suite.seed = *cfg.seed;

  std::map<std::string, std::string> aux;
  for (const auto& [name, file] : cfg.aux_texts) aux[name] = read_text(file);
  const EnvContext ctx = make_env_context(env, cfg.params, std::move(aux));
  const PromptTemplate tmpl = PromptTemplate::load(cfg.prompt_template);
  // Fail on a bad template before any backend call.
  (void)render_prompt(tmpl, ctx);

  std::filesystem::create_directories(cfg.out_dir);
  write_text(cfg.out_dir / "experiment.json",
             json{{"runs", cfg.runs}, {"K", cfg.K}, {"J", cfg.J}, {"seed", env.suite.seed}}.dump(2) + "\n");

  ExperimentResult result;
  result.runs.resize(static_cast<std::size_t>(cfg.runs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.runs));
  const unsigned workers = std::clamp(cfg.parallelism, 1u, static_cast<unsigned>(cfg.runs));
  if (workers == 1) {
    for (int r = 1; r <= cfg.runs; ++r) result.runs[static_cast<std::size_t>(r - 1)] = execute_run(cfg, r, env, ctx, tmpl);
  } else {
    std::atomic<int> next{1};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int r = next++; r <= cfg.runs; r = next++) {
          try {
            result.runs[static_cast<std::size_t>(r - 1)] = execute_run(cfg, r, env, ctx, tmpl);
          } catch (...) {
            errors[static_cast<std::size_t>(r - 1)] = std::current_exception();
          }
        }
      });
    pool.clear();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<IterationRecord> all;
  for (const SynthesisOutcome& o : result.runs) all.insert(all.end(), o.records.begin(), o.records.end());
  result.metrics = compute_metrics(all, cfg.runs, cfg.K);
  write_text(cfg.out_dir / "metrics.csv", metrics_table(result.metrics));
  return result;
}

std::vector<IterationRecord> read_records(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw IoError("cannot open '" + jsonl.string() + "'");
  std::vector<IterationRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw InconsistentRecords(fmt::format("{}:{}: {}", jsonl.string(), line_no, e.what()));
    }
  }
  return out;
}

std::vector<IterationRecord> load_records(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("run_", 0) == 0 && std::filesystem::exists(entry.path() / "records.jsonl"))
      files.push_back(entry.path() / "records.jsonl");
  }
  std::sort(files.begin(), files.end());
  std::vector<IterationRecord> all;
  for (const auto& f : files) {
    auto recs = read_records(f);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  return all;
}

}  // namespace gridpilot
