#include "maps/config.hpp"

#include "maps/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace maps {
namespace {

struct Field {
  const char* key;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  require(ec == std::errc() && ptr == last, ErrorKind::config,
          "config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

template <typename T>
Field number_field(const char* key, T TrainConfig::*member) {
  return Field{
      key,
      [key, member](TrainConfig& c, const std::string& v) {
        c.*member = parse_number<T>(key, v);
      },
      [member](const TrainConfig& c) {
        if constexpr (std::is_floating_point_v<T>) return fmt_double(c.*member);
        else return std::to_string(c.*member);
      }};
}

template <typename Ref>
Field nested_double(const char* key, Ref ref) {
  return Field{key,
               [key, ref](TrainConfig& c, const std::string& v) {
                 ref(c) = parse_number<double>(key, v);
               },
               [ref](const TrainConfig& c) { return fmt_double(ref(c)); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      number_field("num_modules", &TrainConfig::num_modules),
      number_field("feature_dim", &TrainConfig::feature_dim),
      number_field("hidden_width", &TrainConfig::hidden_width),
      number_field("module_hidden_layers", &TrainConfig::module_hidden_layers),
      number_field("selector_hidden_layers", &TrainConfig::selector_hidden_layers),
      number_field("batch_size", &TrainConfig::batch_size),
      number_field("epochs", &TrainConfig::epochs),
      number_field("seed", &TrainConfig::seed),
      nested_double("learning_rate", [](auto& c) -> auto& { return c.adam.learning_rate; }),
      nested_double("adam_beta1", [](auto& c) -> auto& { return c.adam.beta1; }),
      nested_double("adam_beta2", [](auto& c) -> auto& { return c.adam.beta2; }),
      nested_double("adam_eps", [](auto& c) -> auto& { return c.adam.eps; }),
      nested_double("lambda_imitate", [](auto& c) -> auto& { return c.total_weights.imitate; }),
      nested_double("lambda_selector", [](auto& c) -> auto& { return c.total_weights.selector; }),
      nested_double("lambda_share", [](auto& c) -> auto& { return c.selector_weights.share; }),
      nested_double("lambda_explore", [](auto& c) -> auto& { return c.selector_weights.explore; }),
      nested_double("lambda_sparse", [](auto& c) -> auto& { return c.selector_weights.sparse; }),
      nested_double("lambda_smooth", [](auto& c) -> auto& { return c.selector_weights.smooth; }),
      number_field("train_fraction", &TrainConfig::train_fraction),
  };
  return f;
}

}  // namespace

void TrainConfig::validate() const {
  require(num_modules >= 2, ErrorKind::config,
          "num_modules must be >= 2 (sparsity is undefined for M = 1)");
  require(feature_dim >= 1 && hidden_width >= 1 && module_hidden_layers >= 0 &&
              selector_hidden_layers >= 0,
          ErrorKind::config, "layer sizes must be positive");
  require(batch_size >= 1, ErrorKind::config, "batch_size must be positive");
  require(epochs >= 0, ErrorKind::config, "epochs must be non-negative");
  require(adam.learning_rate > 0.0 && adam.beta1 >= 0.0 && adam.beta1 < 1.0 &&
              adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0,
          ErrorKind::config, "invalid Adam hyperparameters");
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorKind::config,
          "train_fraction must lie in (0, 1)");
  try {
    total_weights.validate();
    selector_weights.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, e.what());
  }
}

bool TrainConfig::operator==(const TrainConfig& other) const {
  return to_config_text(*this) == to_config_text(other);
}

TrainConfig parse_config(std::string_view text) {
  std::map<std::string, std::string> values;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    require(eq != std::string::npos, ErrorKind::config,
            "config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    require(!key.empty() && !value.empty(), ErrorKind::config,
            "config line " + std::to_string(line_no) + ": empty key or value");
    require(values.emplace(key, value).second, ErrorKind::config,
            "config key '" + key + "' given twice");
  }

  TrainConfig c;
  for (const auto& f : fields()) {
    const auto it = values.find(f.key);
    require(it != values.end(), ErrorKind::config,
            std::string("missing config key '") + f.key + "'");
    f.set(c, it->second);
    values.erase(it);
  }
  require(values.empty(), ErrorKind::config,
          values.empty() ? "" : "unknown config key '" + values.begin()->first + "'");
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::io,
          "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const TrainConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(config);
    out += '\n';
  }
  return out;
}

std::uint64_t config_hash(const TrainConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_config_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace maps
