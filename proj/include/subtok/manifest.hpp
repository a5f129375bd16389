#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "subtok/csv.hpp"
#include "subtok/types.hpp"

namespace subtok {

inline ResourceTier parse_tier(const std::string& text) {
  if (text == "High" || text == "high") return ResourceTier::High;
  if (text == "Medium" || text == "medium") return ResourceTier::Medium;
  if (text == "Low" || text == "low") return ResourceTier::Low;
  throw std::invalid_argument("unknown resource tier '" + text + "'");
}

// Reads `code,training_hours[,tier]` rows. A header line starting with
// "code" is optional. A given tier must agree with the hour thresholds.
inline LanguageManifest parse_manifest(std::istream& in) {
  LanguageManifest manifest;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (lineno == 1 && !fields.empty() && fields[0] == "code") continue;
    auto fail = [&](const std::string& what) {
      throw std::invalid_argument("manifest line " + std::to_string(lineno) + ": " + what);
    };
    if (fields.size() < 2 || fields.size() > 3) fail("expected code,training_hours[,tier]");

    LanguageInfo info;
    info.code = trim(fields[0]);
    if (info.code.empty()) fail("empty language code");
    const std::string hours = trim(fields[1]);
    char* end = nullptr;
    info.training_hours = std::strtod(hours.c_str(), &end);
    if (hours.empty() || *end != '\0') fail("training_hours '" + hours + "' is not a number");
    if (!(info.training_hours > 0.0)) fail("non-positive training hours for '" + info.code + "'");

    info.tier = tier_for_hours(info.training_hours);
    if (fields.size() == 3 && !trim(fields[2]).empty()) {
      ResourceTier given;
      try {
        given = parse_tier(trim(fields[2]));
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
      if (given != info.tier)
        fail("tier " + std::string(to_string(given)) + " inconsistent with " + hours + " hours");
    }
    try {
      manifest.add(std::move(info));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  return manifest;
}

inline LanguageManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  return parse_manifest(in);
}

}  // namespace subtok
