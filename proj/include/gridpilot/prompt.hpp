#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridpilot/grid.hpp"
#include "gridpilot/mapopt.hpp"
#include "gridpilot/sim2d.hpp"

namespace gridpilot {

inline constexpr std::string_view kRulesBegin = "AUTO_REPAIR_RULES_BEGIN";
inline constexpr std::string_view kRulesEnd = "AUTO_REPAIR_RULES_END";

class MarkersMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnresolvedPlaceholder : public std::runtime_error {
 public:
  explicit UnresolvedPlaceholder(std::string name)
      : std::runtime_error("unresolved placeholder $" + name), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Prompt text with one marker-delimited rules region. The region is the text
/// between the line holding the BEGIN marker and the line holding the END
/// marker; everything else is fixed for the lifetime of a run.
class PromptTemplate {
 public:
  static PromptTemplate parse(std::string text);
  static PromptTemplate load(const std::filesystem::path& path);

  const std::string& text() const { return text_; }
  std::string fixed_text() const;
  std::string rules() const;

  /// Replaces the rules region only. rules() of the result equals `new_rules`.
  PromptTemplate with_rules(std::string_view new_rules) const;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;

 private:
  std::string text_;
  std::size_t region_begin_ = 0;
  std::size_t region_end_ = 0;
};

using Placeholders = std::map<std::string, std::string>;

/// `$name` / `${name}` substitution; `$$` is a literal dollar.
std::string substitute(std::string_view text, const Placeholders& values);

/// Everything the prompt is conditioned on.
struct EnvContext {
  int width = 0;
  int height = 0;
  double obstacle_ratio = 0.0;
  std::string params_json;
  std::string grid_path;
  std::string params_path;
  TaskSpec task;
  RobotConfig robot;
  std::map<std::string, std::string> aux;  ///< extra named texts, e.g. a sensor module description

  Placeholders placeholders() const;
};

/// Fixed text with placeholders filled, rules region inlined verbatim.
std::string render_prompt(const PromptTemplate& tmpl, const EnvContext& ctx);

/// First fenced code block of a model reply, or the whole reply without one.
std::string extract_code(std::string_view reply);

}  // namespace gridpilot
