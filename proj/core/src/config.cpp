#include "sports/config.hpp"

#include <charconv>
#include <functional>
#include <set>
#include <stdexcept>
#include <vector>

#include "sports/io.hpp"

namespace sports {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

bool parse_bool(std::string_view s, bool& out) {
  if (s == "true" || s == "1") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0") {
    out = false;
    return true;
  }
  return false;
}

struct Field {
  const char* key;
  std::function<bool(RunConfig&, std::string_view)> parse;
  std::function<std::string(const RunConfig&)> print;
};

template <typename T>
Field number_field(const char* key, T RunConfig::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { return parse_number(v, c.*member); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

Field bool_field(const char* key, bool RunConfig::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { return parse_bool(v, c.*member); },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      number_field("eta", &RunConfig::eta),
      number_field("tau", &RunConfig::tau),
      number_field("window", &RunConfig::window),
      number_field("alpha1", &RunConfig::alpha1),
      number_field("alpha2", &RunConfig::alpha2),
      number_field("pyramid_levels", &RunConfig::pyramid_levels),
      number_field("fusion_kernel", &RunConfig::fusion_kernel),
      number_field("dba_iters", &RunConfig::dba_iters),
      number_field("panoptic_rounds", &RunConfig::panoptic_rounds),
      number_field("stride", &RunConfig::stride),
      number_field("seed", &RunConfig::seed),
      number_field("base_confidence", &RunConfig::base_confidence),
      number_field("dynamic_residual_sigmas", &RunConfig::dynamic_residual_sigmas),
      number_field("iou_floor", &RunConfig::iou_floor),
      bool_field("use_warped_previous", &RunConfig::use_warped_previous),
      bool_field("scale_align", &RunConfig::scale_align),
      bool_field("propagate_depth", &RunConfig::propagate_depth),
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("RunConfig: ") + what);
  };
  require(eta >= 0.0, "eta must be >= 0");
  require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0, 1]");
  require(window >= 1, "window must be >= 1");
  require(alpha2 >= 0.0 && alpha2 <= alpha1 && alpha1 <= 1.0, "need 0 <= alpha2 <= alpha1 <= 1");
  require(pyramid_levels >= 1, "pyramid_levels must be >= 1");
  require(fusion_kernel >= 1 && fusion_kernel % 2 == 1, "fusion_kernel must be odd and >= 1");
  require(dba_iters >= 1, "dba_iters must be >= 1");
  require(panoptic_rounds >= 1, "panoptic_rounds must be >= 1");
  require(stride >= 1, "stride must be >= 1");
  require(dynamic_residual_sigmas > 0.0, "dynamic_residual_sigmas must be > 0");
  require(iou_floor >= 0.0 && iou_floor <= 1.0, "iou_floor must lie in [0, 1]");
}

OdometryOptions RunConfig::odometry_options(int threads) const {
  OdometryOptions o;
  o.iterations = dba_iters;
  o.panoptic_rounds = panoptic_rounds;
  o.window = window;
  o.eta = eta;
  o.tau = tau;
  o.base_confidence = base_confidence;
  o.dynamic_residual_sigmas = dynamic_residual_sigmas;
  o.propagate_depth = propagate_depth;
  o.threads = threads;
  return o;
}

RunConfig parse_config(std::string_view text, const std::string& name, RunConfig base) {
  std::set<std::string, std::less<>> seen;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    const std::size_t offset = pos;
    pos = nl + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw IoError(name, offset, "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const Field* field = nullptr;
    for (const auto& f : fields())
      if (key == f.key) field = &f;
    if (field == nullptr) throw IoError(name, offset, "unknown key '" + std::string(key) + "'");
    if (!seen.emplace(key).second) throw IoError(name, offset, "duplicate key '" + std::string(key) + "'");
    if (!field->parse(base, value))
      throw IoError(name, offset, "bad value '" + std::string(value) + "' for key '" + std::string(key) + "'");
  }
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(name, 0, e.what());
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(b.data()), b.size()), path.string());
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.print(config) + "\n";
  return out;
}

}  // namespace sports
