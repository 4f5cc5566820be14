#include "gridpilot/prompt.hpp"

#include <fmt/format.h>

#include <cctype>
#include <fstream>
#include <sstream>

namespace gridpilot {

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

PromptTemplate PromptTemplate::parse(std::string text) {
  if (count_occurrences(text, kRulesBegin) != 1 || count_occurrences(text, kRulesEnd) != 1)
    throw MarkersMissing(fmt::format("template must contain {} and {} exactly once", kRulesBegin, kRulesEnd));
  const std::size_t begin = text.find(kRulesBegin);
  const std::size_t end = text.find(kRulesEnd);
  if (end < begin) throw MarkersMissing(fmt::format("{} appears before {}", kRulesEnd, kRulesBegin));

  const std::size_t begin_eol = text.find('\n', begin);
  const std::size_t end_line = text.rfind('\n', end);
  if (begin_eol == std::string::npos || end_line == std::string::npos || end_line < begin_eol)
    throw MarkersMissing("rule markers must sit on their own lines");

  PromptTemplate t;
  t.text_ = std::move(text);
  t.region_begin_ = begin_eol + 1;
  t.region_end_ = end_line + 1;
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open prompt template '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string PromptTemplate::fixed_text() const {
  return text_.substr(0, region_begin_) + text_.substr(region_end_);
}

std::string PromptTemplate::rules() const {
  std::string region = text_.substr(region_begin_, region_end_ - region_begin_);
  if (!region.empty() && region.back() == '\n') region.pop_back();
  return region;
}

PromptTemplate PromptTemplate::with_rules(std::string_view new_rules) const {
  std::string region(new_rules);
  if (!region.empty()) region += '\n';
  return parse(text_.substr(0, region_begin_) + region + text_.substr(region_end_));
}

std::string substitute(std::string_view text, const Placeholders& values) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '$' || i + 1 >= text.size()) {
      out += text[i];
      continue;
    }
    const char next = text[i + 1];
    if (next == '$') {
      out += '$';
      ++i;
      continue;
    }
    std::string name;
    std::size_t consumed = 0;
    if (next == '{') {
      const std::size_t close = text.find('}', i + 2);
      if (close == std::string_view::npos) {
        out += text[i];
        continue;
      }
      name = std::string(text.substr(i + 2, close - i - 2));
      consumed = close - i;
    } else if (is_ident_start(next)) {
      std::size_t j = i + 1;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      name = std::string(text.substr(i + 1, j - i - 1));
      consumed = j - i - 1;
    } else {
      out += text[i];
      continue;
    }
    const auto it = values.find(name);
    if (it == values.end()) throw UnresolvedPlaceholder(name);
    out += it->second;
    i += consumed;
  }
  return out;
}

Placeholders EnvContext::placeholders() const {
  Placeholders p = {
      {"MAP_WIDTH", std::to_string(width)},
      {"MAP_HEIGHT", std::to_string(height)},
      {"OBSTACLE_RATIO", fmt::format("{:.4f}", obstacle_ratio)},
      {"PARAMS_JSON_TEXT", params_json},
      {"MAP_IMG", grid_path},
      {"PARAMS_JSON", params_path},
      {"START", fmt::format("({}, {})", task.start.x, task.start.y)},
      {"GOAL", fmt::format("({}, {})", task.goal.x, task.goal.y)},
      {"GOAL_TOL_PX", fmt::format("{:g}", task.goal_tol)},
      {"MAX_STEPS", std::to_string(task.max_steps)},
      {"PROGRESS_WINDOW", std::to_string(task.progress_window)},
      {"PROGRESS_RATIO", fmt::format("{:g}", task.progress_ratio)},
      {"AXLE_LENGTH_PX", fmt::format("{:g}", robot.axle_length)},
      {"SENSOR_RANGE_PX", fmt::format("{:g}", robot.sensor_range)},
      {"N_RAYS", std::to_string(robot.n_rays)},
      {"V_MAX", fmt::format("{:g}", robot.v_max)},
      {"BODY_RADIUS_PX", fmt::format("{:g}", robot.body_radius)},
  };
  for (const auto& [k, v] : aux) p[k] = v;
  return p;
}

std::string render_prompt(const PromptTemplate& tmpl, const EnvContext& ctx) {
  const Placeholders values = ctx.placeholders();
  const std::string& text = tmpl.text();
  // Split around the rules region: [head][rules][tail]; rules stay verbatim.
  const std::string rules = tmpl.rules();
  const std::size_t head_end = text.find(kRulesBegin);
  const std::size_t head_eol = text.find('\n', head_end) + 1;
  const std::size_t tail_begin = text.rfind('\n', text.find(kRulesEnd)) + 1;
  std::string out = substitute(std::string_view(text).substr(0, head_eol), values);
  if (!rules.empty()) out += rules + "\n";
  out += substitute(std::string_view(text).substr(tail_begin), values);
  return out;
}

std::string extract_code(std::string_view reply) {
  const std::size_t open = reply.find("```");
  if (open == std::string_view::npos) return std::string(reply);
  const std::size_t body = reply.find('\n', open);
  if (body == std::string_view::npos) return std::string(reply);
  const std::size_t close = reply.find("```", body + 1);
  if (close == std::string_view::npos) return std::string(reply.substr(body + 1));
  return std::string(reply.substr(body + 1, close - body - 1));
}

}  // namespace gridpilot
