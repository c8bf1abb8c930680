#include "maps/config.hpp"
#include "maps/error.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#ifndef MAPS_CONFIG_DIR
#error "MAPS_CONFIG_DIR must point at configs/"
#endif

namespace maps {
namespace {

std::string error_text(std::string_view text, ErrorKind expected = ErrorKind::config) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), expected);
    return e.what();
  }
  ADD_FAILURE() << "config accepted";
  return {};
}

std::string without_line(const std::string& text, const std::string& key) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string line = text.substr(pos, end - pos);
    if (line.rfind(key + " ", 0) != 0) out += line + "\n";
    pos = end == std::string::npos ? text.size() : end + 1;
  }
  return out;
}

TEST(Config, DefaultFileMatchesDefaults) {
  EXPECT_EQ(load_config(std::filesystem::path(MAPS_CONFIG_DIR) / "default.cfg"), TrainConfig{});
}

TEST(Config, ShippedConfigsParse) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(MAPS_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 1);
}

TEST(Config, TextRoundTrip) {
  TrainConfig c;
  c.adam.learning_rate = 1.0 / 3.0;
  c.selector_weights.explore = 0.0;
  c.seed = 18446744073709551615ULL;
  c.train_fraction = 0.123456789012345678;
  EXPECT_EQ(parse_config(to_config_text(c)), c);
  EXPECT_EQ(parse_config(to_config_text(c)).adam.learning_rate, c.adam.learning_rate);
}

TEST(Config, EveryKeyIsRequired) {
  const std::string full = to_config_text(TrainConfig{});
  std::size_t keys = 0;
  for (std::size_t pos = 0; pos < full.size(); pos = full.find('\n', pos) + 1) {
    const std::string key = full.substr(pos, full.find(' ', pos) - pos);
    const std::string msg = error_text(without_line(full, key));
    EXPECT_NE(msg.find("'" + key + "'"), std::string::npos) << msg;
    ++keys;
  }
  EXPECT_EQ(keys, 19u);
}

TEST(Config, UnknownAndDuplicateKeys) {
  const std::string full = to_config_text(TrainConfig{});
  EXPECT_NE(error_text(full + "dropout = 0.1\n").find("dropout"), std::string::npos);
  EXPECT_NE(error_text(full + "epochs = 3\n").find("twice"), std::string::npos);
  error_text(full + "not a pair\n");
}

TEST(Config, CommentsAndWhitespace) {
  std::string text = "# header\n\n";
  text += to_config_text(TrainConfig{});
  text += "   # trailing\n";
  text.replace(text.find("epochs = 500"), 12, "  epochs   =   7  # short run");
  EXPECT_EQ(parse_config(text).epochs, 7);
}

TEST(Config, InvalidValuesAreRejected) {
  const std::string full = to_config_text(TrainConfig{});
  auto with = [&](const std::string& key, const std::string& value) {
    return without_line(full, key) + key + " = " + value + "\n";
  };
  error_text(with("epochs", "ten"));
  error_text(with("epochs", "-1"));
  error_text(with("num_modules", "1"));
  error_text(with("learning_rate", "0"));
  error_text(with("train_fraction", "1.5"));
  error_text(with("lambda_share", "-0.5"));
  error_text(with("batch_size", "4x"));
}

TEST(Config, HashTracksEveryField) {
  const TrainConfig base;
  EXPECT_EQ(config_hash(base), config_hash(TrainConfig{}));
  TrainConfig c = base;
  c.selector_weights.smooth = 0.5;
  EXPECT_NE(config_hash(c), config_hash(base));
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
  EXPECT_EQ(hex64(config_hash(base)).size(), 16u);
}

}  // namespace
}  // namespace maps
